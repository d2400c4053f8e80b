"""K-means over teacher codes, pseudo labels, and offset-positive / false-negative detection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codes import BitCode, CodeMatrix
from .errors import DimensionError, InvalidInputError

__all__ = [
    "ClusterModel",
    "kmeans_fit",
    "assign",
    "assign_many",
    "inertia_curve",
    "choose_k",
    "detect_offset_positive",
    "false_negative_mask",
]


@dataclass(frozen=True, eq=False)
class ClusterModel:
    centroids: np.ndarray  # (k, b) float64, entries in [-1, 1]
    assignments: dict  # id -> cluster index
    inertia: float
    n_iter: int = 0
    inertia_history: tuple = field(default=(), repr=False)

    def __post_init__(self):
        c = np.array(self.centroids, dtype=np.float64, copy=True)
        c.flags.writeable = False
        object.__setattr__(self, "centroids", c)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def b(self) -> int:
        return self.centroids.shape[1]

    def labels_for(self, ids) -> np.ndarray:
        return np.array([self.assignments[int(i)] for i in ids], dtype=np.int64)


def _sq_dists(x: np.ndarray, c: np.ndarray, chunk: int = 4096) -> np.ndarray:
    # direct differences, not the expanded norm form: equal distances must compare equal
    out = np.empty((x.shape[0], c.shape[0]))
    for s in range(0, x.shape[0], chunk):
        diff = x[s : s + chunk, None, :] - c[None, :, :]
        out[s : s + chunk] = np.einsum("nkb,nkb->nk", diff, diff)
    return out


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    # greedy k-means++: draw a few D^2 candidates per step, keep the one with the lowest potential
    n = x.shape[0]
    trials = 2 + int(np.log(k))
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    closest = _sq_dists(x, centers[:1])[:, 0]
    for j in range(1, k):
        total = closest.sum()
        if total <= 0:
            # every point already coincides with a center
            cand = rng.integers(n, size=trials)
        else:
            cand = np.searchsorted(np.cumsum(closest), rng.random(trials) * total, side="right")
            cand = np.minimum(cand, n - 1)
        new_closest = np.minimum(closest[None, :], _sq_dists(x, x[cand]).T)
        best = int(np.argmin(new_closest.sum(1)))
        centers[j] = x[cand[best]]
        closest = new_closest[best]
    return centers


def _nearest(x: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d = _sq_dists(x, c)
    lab = np.argmin(d, axis=1)  # first minimum: lowest index wins ties
    return lab, d[np.arange(x.shape[0]), lab]


def kmeans_fit(codes: CodeMatrix, k: int, seed: int = 0, max_iter: int = 100, tol: float = 1e-6) -> ClusterModel:
    """Lloyd's algorithm on the ±1 embeddings of ``codes`` with k-means++ seeding.

    Stops once the largest centroid shift drops below ``tol`` or after
    ``max_iter`` iterations.  An empty cluster is re-seeded with the point
    farthest from its current centroid so exactly ``k`` clusters survive.
    """
    n = len(codes)
    if n == 0:
        raise InvalidInputError("cannot cluster an empty code matrix")
    if not 1 <= k <= n:
        raise InvalidInputError(f"k must be in [1, {n}], got {k}")
    if max_iter < 1:
        raise InvalidInputError("max_iter must be >= 1")
    if tol < 0:
        raise InvalidInputError("tol must be >= 0")

    x = codes.to_pm1().astype(np.float64)
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(x, k, rng)
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        lab, dist = _nearest(x, centers)
        history.append(float(dist.sum()))
        counts = np.bincount(lab, minlength=k)
        for j in np.flatnonzero(counts == 0):
            far = int(np.argmax(dist))
            if dist[far] > 0 and counts[lab[far]] > 1:
                counts[lab[far]] -= 1
                lab[far] = j
                counts[j] = 1
                dist[far] = 0.0
        sums = np.zeros_like(centers)
        np.add.at(sums, lab, x)
        new = centers.copy()
        filled = counts > 0
        new[filled] = sums[filled] / counts[filled, None]
        shift = np.sqrt(((new - centers) ** 2).sum(1)).max()
        centers = new
        if shift < tol:
            break

    lab, dist = _nearest(x, centers)
    inertia = float(dist.sum())
    history.append(inertia)
    assignments = {int(i): int(l) for i, l in zip(codes.ids, lab)}
    return ClusterModel(centers, assignments, inertia, it, tuple(history))


def assign(model: ClusterModel, code) -> int:
    """Index of the nearest centroid; ties go to the lowest index."""
    v = code.to_pm1() if isinstance(code, BitCode) else np.asarray(code)
    v = v.astype(np.float64).reshape(1, -1)
    if v.shape[1] != model.b:
        raise DimensionError(f"code length {v.shape[1]} != centroid length {model.b}")
    return int(_nearest(v, model.centroids)[0][0])


def assign_many(model: ClusterModel, codes) -> np.ndarray:
    """Vectorised :func:`assign` over a CodeMatrix or a ±1 array."""
    x = codes.to_pm1() if isinstance(codes, CodeMatrix) else np.asarray(codes)
    x = np.atleast_2d(x).astype(np.float64)
    if x.shape[1] != model.b:
        raise DimensionError(f"code length {x.shape[1]} != centroid length {model.b}")
    return _nearest(x, model.centroids)[0]


def inertia_curve(codes: CodeMatrix, k_values, seed: int = 0, max_iter: int = 100, tol: float = 1e-6):
    return [(int(k), kmeans_fit(codes, int(k), seed, max_iter, tol).inertia) for k in k_values]


def choose_k(codes: CodeMatrix, k_values=None, n_classes: int | None = None, seed: int = 0) -> int:
    """Default cluster count: twice the class count when known, else the elbow of the inertia curve.

    The elbow is the interior k with the largest second difference of inertia.
    """
    if n_classes is not None:
        return min(2 * int(n_classes), len(codes))
    if k_values is None:
        k_values = [k for k in (2, 4, 8, 12, 16, 24, 32, 48, 64) if k <= len(codes)]
    curve = inertia_curve(codes, k_values, seed)
    if len(curve) < 3:
        return curve[-1][0]
    ks = np.array([k for k, _ in curve])
    w = np.array([w for _, w in curve])
    second = w[:-2] - 2 * w[1:-1] + w[2:]
    return int(ks[1 + int(np.argmax(second))])


def detect_offset_positive(y_anchor, y_aug):
    """True where an augmentation landed in a different cluster than its anchor."""
    res = np.asarray(y_anchor) != np.asarray(y_aug)
    return bool(res) if res.ndim == 0 else res


def false_negative_mask(i: int, labels) -> np.ndarray:
    """Batch members to drop from anchor ``i``'s negatives because they share its cluster.

    ``labels`` holds the 2M pseudo labels, anchors first then their
    augmentations, so the positive of ``i`` sits at ``i + M``.
    """
    labels = np.asarray(labels).reshape(-1)
    if labels.size % 2:
        raise InvalidInputError("labels must cover anchors and augmentations (even length)")
    m = labels.size // 2
    if not 0 <= i < m:
        raise IndexError(f"anchor index {i} out of range for M={m}")
    mask = labels == labels[i]
    mask[i] = False
    mask[i + m] = False
    return mask
