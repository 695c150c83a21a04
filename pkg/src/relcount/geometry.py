"""Box geometry: IoU, normalized box encodings, pairwise spatial-relation
vectors, background grids, and pairwise-comparison accounting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

Array = np.ndarray

SPATIAL_WIDTH = 16  # l_i (6) + l_j (6) + similarity + iou + iou/a_i + iou/a_j


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in pixel coordinates, tied to its image size."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float
    image_width: float
    image_height: float

    def __post_init__(self):
        if self.image_width <= 0 or self.image_height <= 0:
            raise ValueError("image dimensions must be positive")
        if not (0 <= self.x_min <= self.x_max <= self.image_width):
            raise ValueError(
                f"x range [{self.x_min}, {self.x_max}] invalid for width {self.image_width}"
            )
        if not (0 <= self.y_min <= self.y_max <= self.image_height):
            raise ValueError(
                f"y range [{self.y_min}, {self.y_max}] invalid for height {self.image_height}"
            )

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))

    def area_fraction(self) -> float:
        """Area normalized by the image area."""
        return self.area / (self.image_width * self.image_height)


@dataclass(frozen=True)
class RegionProposal:
    """Candidate object box with its feature vector."""

    box: BoundingBox
    features: Array

    def __post_init__(self):
        f = np.asarray(self.features, dtype=np.float64)
        if f.ndim != 1:
            raise ValueError("proposal features must be a vector")
        if not np.all(np.isfinite(f)):
            raise ValueError("proposal features must be finite")
        object.__setattr__(self, "features", f)


@dataclass(frozen=True)
class BackgroundPatch:
    """One grid cell of whole-image features."""

    box: BoundingBox
    features: Array

    def __post_init__(self):
        f = np.asarray(self.features, dtype=np.float64)
        if f.ndim != 1:
            raise ValueError("patch features must be a vector")
        if not np.all(np.isfinite(f)):
            raise ValueError("patch features must be finite")
        object.__setattr__(self, "features", f)


@dataclass(frozen=True)
class SpatialRelation:
    """The 16 pairwise spatial components, in fixed order."""

    encoding_a: Array      # 6-vector for the left box
    encoding_b: Array      # 6-vector for the right box
    similarity: float      # cosine of the two feature vectors
    iou: float
    iou_over_area_a: float  # iou / (area_a / image area)
    iou_over_area_b: float

    def as_vector(self) -> Array:
        return np.concatenate([
            self.encoding_a, self.encoding_b,
            [self.similarity, self.iou, self.iou_over_area_a, self.iou_over_area_b],
        ])


def _check_same_image(a: BoundingBox, b: BoundingBox):
    if (a.image_width, a.image_height) != (b.image_width, b.image_height):
        raise ValueError("boxes belong to different images")


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union; 0 when the union has zero area."""
    _check_same_image(a, b)
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    inter = max(iw, 0.0) * max(ih, 0.0)
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def box_encoding(b: BoundingBox) -> Array:
    """[x_min/W, y_min/H, x_max/W, y_max/H, width/W, height/H]."""
    w, h = b.image_width, b.image_height
    return np.array([
        b.x_min / w, b.y_min / h, b.x_max / w, b.y_max / h,
        (b.x_max - b.x_min) / w, (b.y_max - b.y_min) / h,
    ])


def spatial_relation(a: RegionProposal, b: RegionProposal | BackgroundPatch) -> SpatialRelation:
    """Pairwise spatial vector for (proposal, proposal-or-patch).

    Similarity is the dot product of L2-normalized features (cosine); a
    zero-norm feature vector gives similarity 0. The iou/area terms divide by
    the area *fraction* of each box, and are 0 for degenerate boxes.
    """
    _check_same_image(a.box, b.box)
    if a.features.shape != b.features.shape:
        raise ValueError(
            f"feature widths differ: {a.features.shape[0]} vs {b.features.shape[0]}"
        )
    na = np.linalg.norm(a.features)
    nb = np.linalg.norm(b.features)
    if na == 0.0 or nb == 0.0:
        sim = 0.0
    else:
        sim = float(a.features @ b.features / (na * nb))
    i = iou(a.box, b.box)
    fa = a.box.area_fraction()
    fb = b.box.area_fraction()
    return SpatialRelation(
        encoding_a=box_encoding(a.box),
        encoding_b=box_encoding(b.box),
        similarity=sim,
        iou=i,
        iou_over_area_a=i / fa if fa > 0.0 else 0.0,
        iou_over_area_b=i / fb if fb > 0.0 else 0.0,
    )


def spatial_relation_matrix(boxes_a: Array, feats_a: Array, boxes_b: Array,
                            feats_b: Array, image_width: float,
                            image_height: float) -> Array:
    """All-pairs spatial vectors, vectorized.

    boxes_* are (n, 4) arrays of [x_min, y_min, x_max, y_max]; feats_* are
    (n, K). Returns (len_a * len_b, 16) with pair (i, j) at row i * len_b + j,
    matching `spatial_relation` applied pairwise.
    """
    boxes_a = np.asarray(boxes_a, dtype=np.float64).reshape(-1, 4)
    boxes_b = np.asarray(boxes_b, dtype=np.float64).reshape(-1, 4)
    n, m = boxes_a.shape[0], boxes_b.shape[0]
    if n == 0 or m == 0:
        return np.zeros((n * m, SPATIAL_WIDTH))
    w, h = float(image_width), float(image_height)
    scale = np.array([w, h, w, h])

    def encode(boxes):
        norm = boxes / scale
        wh = np.stack([(boxes[:, 2] - boxes[:, 0]) / w,
                       (boxes[:, 3] - boxes[:, 1]) / h], axis=1)
        return np.concatenate([norm, wh], axis=1)

    enc_a, enc_b = encode(boxes_a), encode(boxes_b)
    iw = (np.minimum(boxes_a[:, None, 2], boxes_b[None, :, 2])
          - np.maximum(boxes_a[:, None, 0], boxes_b[None, :, 0]))
    ih = (np.minimum(boxes_a[:, None, 3], boxes_b[None, :, 3])
          - np.maximum(boxes_a[:, None, 1], boxes_b[None, :, 1]))
    inter = np.maximum(iw, 0.0) * np.maximum(ih, 0.0)
    area_a = (boxes_a[:, 2] - boxes_a[:, 0]) * (boxes_a[:, 3] - boxes_a[:, 1])
    area_b = (boxes_b[:, 2] - boxes_b[:, 0]) * (boxes_b[:, 3] - boxes_b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    with np.errstate(divide="ignore", invalid="ignore"):
        iou_ij = np.where(union > 0.0, inter / union, 0.0)
        frac_a = area_a / (w * h)
        frac_b = area_b / (w * h)
        over_a = np.where(frac_a[:, None] > 0.0, iou_ij / frac_a[:, None], 0.0)
        over_b = np.where(frac_b[None, :] > 0.0, iou_ij / frac_b[None, :], 0.0)
        norms_a = np.linalg.norm(feats_a, axis=1)
        norms_b = np.linalg.norm(feats_b, axis=1)
        unit_a = np.where(norms_a[:, None] > 0.0, feats_a / norms_a[:, None], 0.0)
        unit_b = np.where(norms_b[:, None] > 0.0, feats_b / norms_b[:, None], 0.0)
    sim = unit_a @ unit_b.T
    out = np.empty((n, m, SPATIAL_WIDTH))
    out[:, :, 0:6] = enc_a[:, None, :]
    out[:, :, 6:12] = enc_b[None, :, :]
    out[:, :, 12] = sim
    out[:, :, 13] = iou_ij
    out[:, :, 14] = over_a
    out[:, :, 15] = over_b
    return out.reshape(n * m, SPATIAL_WIDTH)


def background_grid(image_width: float, image_height: float, g: int) -> list[BoundingBox]:
    """g x g equal cells tiling the image exactly, row-major from the top-left.

    Cell extents are fractional when the image size is not divisible by g.
    """
    if g <= 0:
        raise ValueError(f"grid size must be positive, got {g}")
    if image_width <= 0 or image_height <= 0:
        raise ValueError("image dimensions must be positive")
    xs = [image_width * k / g for k in range(g + 1)]
    ys = [image_height * k / g for k in range(g + 1)]
    cells = []
    for r in range(g):
        for c in range(g):
            cells.append(BoundingBox(xs[c], ys[r], xs[c + 1], ys[r + 1],
                                     image_width, image_height))
    return cells


def comparison_count(n: float, m: float) -> float:
    """Pairwise comparisons for n proposals against themselves plus m patches."""
    if n < 0 or m < 0:
        raise ValueError("counts must be non-negative")
    return n * n + n * m


def grid_comparison_count(d: int) -> int:
    """Comparisons for a d x d feature map treated as d^2 entities."""
    if d <= 0:
        raise ValueError(f"grid side must be positive, got {d}")
    return d ** 4
