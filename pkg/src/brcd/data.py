"""Synthetic Gaussian-blob features standing in for image embeddings."""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError


def make_blobs(n_classes: int, per_class: int, dim: int, spread: float = 1.0, seed: int = 0,
               center_scale: float = 1.0):
    """``per_class`` points around each of ``n_classes`` random centres.

    Centres are drawn from N(0, center_scale^2 I); points add N(0, spread^2 I)
    noise.  Rows come class by class; labels are 0..n_classes-1.  All draws
    use ``numpy.random.default_rng(seed)`` (PCG64).
    """
    if n_classes < 1 or per_class < 1 or dim < 1:
        raise InvalidInputError("n_classes, per_class and dim must all be >= 1")
    if spread < 0:
        raise InvalidInputError("spread must be >= 0")
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((n_classes, dim)) * center_scale
    labels = np.repeat(np.arange(n_classes), per_class)
    x = centers[labels] + spread * rng.standard_normal((labels.size, dim))
    return x.astype(np.float32), labels.astype(np.int64)


def split(x, labels, sizes, seed: int = 0):
    """Shuffle rows once and cut consecutive pieces of the given sizes."""
    sizes = list(sizes)
    if sum(sizes) > len(x):
        raise InvalidInputError(f"requested {sum(sizes)} rows from {len(x)}")
    perm = np.random.default_rng(seed).permutation(len(x))
    out = []
    start = 0
    for s in sizes:
        sel = perm[start : start + s]
        out.append((x[sel], labels[sel]))
        start += s
    return out
