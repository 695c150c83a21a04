"""Dense numerical kernels: affine stacks, a GRU cell, losses, dropout.

Everything is float64 and pure value-in/value-out. Vectors are 1-D arrays,
batches are 2-D (rows = samples). Each forward returns a cache holding the
intermediates its matching backward needs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Array = np.ndarray


def make_rng(seed) -> np.random.Generator:
    """Deterministic generator: identical seed, identical stream."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def derived_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Independent stream addressed by (master_seed, *key).

    Parallel and serial consumers get bit-identical streams because the
    stream depends only on the key, not on call order.
    """
    return make_rng([int(master_seed), *[int(k) for k in key]])


def relu(x: Array) -> Array:
    return np.maximum(x, 0.0)


def sigmoid(x: Array) -> Array:
    # Split by sign so exp never overflows.
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def glorot_uniform(fan_out: int, fan_in: int, rng: np.random.Generator) -> Array:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


# ---------------------------------------------------------------------------
# MLP
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths, input first. Hidden layers are rectified, output is linear."""

    widths: tuple[int, ...]
    hidden_activation: str = "relu"
    output_activation: str = "identity"

    def __post_init__(self):
        if len(self.widths) < 2:
            raise ValueError("MlpSpec needs an input width and at least one layer")
        if any(w <= 0 for w in self.widths):
            raise ValueError(f"layer widths must be positive, got {self.widths}")
        if self.hidden_activation != "relu":
            raise ValueError(f"unsupported hidden activation {self.hidden_activation!r}")
        if self.output_activation != "identity":
            raise ValueError(f"unsupported output activation {self.output_activation!r}")

    @property
    def input_width(self) -> int:
        return self.widths[0]

    @property
    def output_width(self) -> int:
        return self.widths[-1]

    @property
    def n_layers(self) -> int:
        return len(self.widths) - 1


def init_mlp(spec: MlpSpec, rng: np.random.Generator) -> list[tuple[Array, Array]]:
    """Weight/bias pairs, W[i] of shape (widths[i+1], widths[i]), zero biases."""
    layers = []
    for i in range(spec.n_layers):
        w = glorot_uniform(spec.widths[i + 1], spec.widths[i], rng)
        b = np.zeros(spec.widths[i + 1])
        layers.append((w, b))
    return layers


def mlp_forward(x: Array, spec: MlpSpec, layers: list[tuple[Array, Array]]):
    """Run the stack on a vector (d,) or a batch (N, d).

    Returns (output, cache). The cache keeps each layer's input and
    pre-activation so mlp_backward can produce exact gradients.
    """
    if len(layers) != spec.n_layers:
        raise ValueError(f"expected {spec.n_layers} layers, got {len(layers)}")
    single = x.ndim == 1
    h = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if h.shape[1] != spec.input_width:
        raise ValueError(
            f"layer 0 expects input width {spec.input_width}, got {h.shape[1]}"
        )
    inputs, preacts = [], []
    for i, (w, b) in enumerate(layers):
        if h.shape[1] != w.shape[1]:
            raise ValueError(
                f"layer {i} expects input width {w.shape[1]}, got {h.shape[1]}"
            )
        inputs.append(h)
        z = h @ w.T + b
        preacts.append(z)
        h = relu(z) if i < spec.n_layers - 1 else z
    out = h[0] if single else h
    cache = {"inputs": inputs, "preacts": preacts, "layers": layers,
             "spec": spec, "single": single}
    return out, cache


def mlp_backward(grad_out: Array, cache):
    """Gradients of a scalar loss given d(loss)/d(output).

    Returns (grad_x, [(dW, db) per layer]) with shapes mirroring the forward.
    """
    spec: MlpSpec = cache["spec"]
    layers = cache["layers"]
    g = np.atleast_2d(np.asarray(grad_out, dtype=np.float64))
    grads: list[tuple[Array, Array]] = [None] * spec.n_layers
    for i in reversed(range(spec.n_layers)):
        if i < spec.n_layers - 1:
            g = g * (cache["preacts"][i] > 0)
        w, _ = layers[i]
        grads[i] = (g.T @ cache["inputs"][i], g.sum(axis=0))
        g = g @ w
    grad_x = g[0] if cache["single"] else g
    return grad_x, grads


# ---------------------------------------------------------------------------
# GRU
# ---------------------------------------------------------------------------


@dataclass
class GruParams:
    """Update (z), reset (r), and candidate (h) gates.

    w_*: (H, E) input-to-hidden, u_*: (H, H) hidden-to-hidden, b_*: (H,).
    """

    wz: Array
    uz: Array
    bz: Array
    wr: Array
    ur: Array
    br: Array
    wh: Array
    uh: Array
    bh: Array

    def __post_init__(self):
        h, e = self.wz.shape
        if h <= 0:
            raise ValueError("hidden width must be positive")
        for name in ("wz", "wr", "wh"):
            if getattr(self, name).shape != (h, e):
                raise ValueError(f"{name} shape mismatch")
        for name in ("uz", "ur", "uh"):
            if getattr(self, name).shape != (h, h):
                raise ValueError(f"{name} shape mismatch")
        for name in ("bz", "br", "bh"):
            if getattr(self, name).shape != (h,):
                raise ValueError(f"{name} shape mismatch")

    @property
    def hidden_width(self) -> int:
        return self.wz.shape[0]

    @property
    def input_width(self) -> int:
        return self.wz.shape[1]


def init_gru(input_width: int, hidden_width: int, rng: np.random.Generator) -> GruParams:
    def w():
        return glorot_uniform(hidden_width, input_width, rng)

    def u():
        return glorot_uniform(hidden_width, hidden_width, rng)

    z = np.zeros(hidden_width)
    return GruParams(w(), u(), z.copy(), w(), u(), z.copy(), w(), u(), z.copy())


def dropout_mask(width: int, rate: float, rng: np.random.Generator) -> Array:
    """Inverted-dropout mask: zeros with probability `rate`, kept units scaled
    by 1/(1-rate) so inference needs no rescaling."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if rate == 0.0:
        return np.ones(width)
    keep = rng.random(width) >= rate
    return keep / (1.0 - rate)


def gru_encode(xs: Array, params: GruParams, dropout_rate: float = 0.0,
               training: bool = False, rng: np.random.Generator | None = None):
    """Encode a sequence of vectors (T, E) into the final hidden state (H,).

    h_t = (1 - z_t) * h_{t-1} + z_t * c_t with the candidate c_t computed from
    the reset-gated previous state. Dropout applies to the returned vector
    only, and only when training=True.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[0] == 0:
        raise ValueError("empty question")
    if xs.shape[1] != params.input_width:
        raise ValueError(
            f"embedding width {xs.shape[1]} != GRU input width {params.input_width}"
        )
    h = np.zeros(params.hidden_width)
    steps = []
    for t in range(xs.shape[0]):
        x = xs[t]
        z = sigmoid(params.wz @ x + params.uz @ h + params.bz)
        r = sigmoid(params.wr @ x + params.ur @ h + params.br)
        c = np.tanh(params.wh @ x + params.uh @ (r * h) + params.bh)
        h_new = (1.0 - z) * h + z * c
        steps.append({"x": x, "h_prev": h, "z": z, "r": r, "c": c})
        h = h_new
    if training and dropout_rate > 0.0:
        if rng is None:
            raise ValueError("training-mode dropout needs an rng")
        mask = dropout_mask(params.hidden_width, dropout_rate, rng)
    else:
        mask = np.ones(params.hidden_width)
    out = h * mask
    cache = {"steps": steps, "mask": mask, "h_final": h, "params": params,
             "T": xs.shape[0]}
    return out, cache


def gru_backward(grad_out: Array, cache):
    """Backprop through the unrolled GRU.

    Returns (grad_xs (T, E), grads: dict with the nine GruParams fields).
    """
    p: GruParams = cache["params"]
    grads = {k: np.zeros_like(getattr(p, k))
             for k in ("wz", "uz", "bz", "wr", "ur", "br", "wh", "uh", "bh")}
    grad_xs = np.zeros((cache["T"], p.input_width))
    dh = np.asarray(grad_out, dtype=np.float64) * cache["mask"]
    for t in reversed(range(cache["T"])):
        s = cache["steps"][t]
        x, h_prev, z, r, c = s["x"], s["h_prev"], s["z"], s["r"], s["c"]
        dz = dh * (c - h_prev)
        dc = dh * z
        dh_prev = dh * (1.0 - z)
        # candidate gate (tanh)
        dc_pre = dc * (1.0 - c * c)
        grads["wh"] += np.outer(dc_pre, x)
        grads["bh"] += dc_pre
        grads["uh"] += np.outer(dc_pre, r * h_prev)
        drh = p.uh.T @ dc_pre
        dr = drh * h_prev
        dh_prev += drh * r
        dx = p.wh.T @ dc_pre
        # update gate (sigmoid)
        dz_pre = dz * z * (1.0 - z)
        grads["wz"] += np.outer(dz_pre, x)
        grads["bz"] += dz_pre
        grads["uz"] += np.outer(dz_pre, h_prev)
        dh_prev += p.uz.T @ dz_pre
        dx += p.wz.T @ dz_pre
        # reset gate (sigmoid)
        dr_pre = dr * r * (1.0 - r)
        grads["wr"] += np.outer(dr_pre, x)
        grads["br"] += dr_pre
        grads["ur"] += np.outer(dr_pre, h_prev)
        dh_prev += p.ur.T @ dr_pre
        dx += p.wr.T @ dr_pre
        grad_xs[t] = dx
        dh = dh_prev
    return grad_xs, grads


# ---------------------------------------------------------------------------
# Loss
# ---------------------------------------------------------------------------


def softmax_cross_entropy(logits: Array, target_class: int):
    """Stable softmax + cross-entropy for one sample.

    Returns (loss, probs, grad_logits) with grad = probs - one_hot(target).
    """
    logits = np.asarray(logits, dtype=np.float64)
    n = logits.shape[0]
    if not 0 <= target_class < n:
        raise ValueError(f"target class {target_class} out of range [0, {n})")
    shifted = logits - logits.max()
    exps = np.exp(shifted)
    probs = exps / exps.sum()
    probs = probs / probs.sum()  # renormalize so the sum is 1 to rounding
    loss = float(np.log(exps.sum()) - shifted[target_class])
    grad = probs.copy()
    grad[target_class] -= 1.0
    return loss, probs, grad
