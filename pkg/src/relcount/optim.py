"""Adam over named parameter blocks, plus a finite-difference gradient check.

Parameters travel as flat dicts {block name -> float64 array}; the optimizer
state holds per-block moment accumulators with matching shapes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

Array = np.ndarray
ParamDict = dict[str, Array]


@dataclass
class AdamState:
    learning_rate: float = 7e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: ParamDict = field(default_factory=dict)
    v: ParamDict = field(default_factory=dict)


def init_adam(params: ParamDict, learning_rate: float = 7e-4, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    return AdamState(
        learning_rate=learning_rate, beta1=beta1, beta2=beta2, eps=eps, step=0,
        m={k: np.zeros_like(a) for k, a in params.items()},
        v={k: np.zeros_like(a) for k, a in params.items()},
    )


def adam_step(params: ParamDict, grads: ParamDict, state: AdamState) -> ParamDict:
    """One bias-corrected Adam update; mutates `state`, returns new params."""
    if set(params) != set(grads):
        missing = set(params) ^ set(grads)
        raise ValueError(f"parameter/gradient blocks differ: {sorted(missing)}")
    state.step += 1
    t = state.step
    lr, b1, b2 = state.learning_rate, state.beta1, state.beta2
    out: ParamDict = {}
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"gradient shape mismatch in block '{name}'")
        if not np.all(np.isfinite(g)):
            raise ValueError(f"non-finite gradient in block '{name}'")
        m = state.m[name] = b1 * state.m[name] + (1.0 - b1) * g
        v = state.v[name] = b2 * state.v[name] + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        out[name] = p - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return out


def grad_check(loss_and_grad, params: ParamDict, epsilon: float = 1e-4) -> float:
    """Worst relative error between analytic and central-difference gradients.

    `loss_and_grad(params) -> (loss, grads)` must be pure and deterministic.
    Relative error uses denominator max(|analytic|, |numeric|, 1e-8).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    base_loss, analytic = loss_and_grad(params)
    if not np.isfinite(base_loss):
        raise ValueError("non-finite loss at the evaluation point")
    worst = 0.0
    for name, p in params.items():
        flat = p.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            lp, _ = loss_and_grad(params)
            flat[i] = orig - epsilon
            lm, _ = loss_and_grad(params)
            flat[i] = orig
            if not (np.isfinite(lp) and np.isfinite(lm)):
                raise ValueError(f"non-finite loss while probing block '{name}'")
            numeric = (lp - lm) / (2.0 * epsilon)
            a = float(analytic[name].ravel()[i])
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst
