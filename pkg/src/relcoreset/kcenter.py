"""Greedy k-center (farthest-first traversal), 2-approximation.

Points are deduplicated first so duplicates never eat center slots; the
first center is chosen by a seeded shuffle, later centers are the point
farthest from the chosen set, ties broken toward the lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .util import as_rng


@dataclass(frozen=True)
class CenterSet:
    centers: np.ndarray  # (k', dim) rows drawn from the distinct input points
    indices: np.ndarray  # positions into the deduplicated, lexsorted point list
    cover_radius: float  # max distance of any input point to its nearest center


def _pairwise_sq(points: np.ndarray, q: np.ndarray) -> np.ndarray:
    diff = points - q
    return np.einsum("ij,ij->i", diff, diff)


def gonzalez(points, k: int, rng=0) -> CenterSet:
    """Farthest-first traversal over the distinct rows of ``points``.

    Returns min(k, #distinct) centers; cover_radius is exactly
    max_p min_c ||p - c||.  Zero-width inputs collapse to a single empty
    center with radius 0.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError(f"points must be 2d, got shape {points.shape}")
    if points.shape[0] == 0:
        raise ValueError("cannot pick centers from an empty point set")
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    uniq = np.unique(points, axis=0)
    n = uniq.shape[0]
    rng = as_rng(rng)
    perm = rng.permutation(n)
    first = int(perm[0])

    chosen = [first]
    mind = _pairwise_sq(uniq, uniq[first])
    while len(chosen) < min(k, n):
        far = int(np.argmax(mind))  # argmax takes the lowest index on ties
        chosen.append(far)
        np.minimum(mind, _pairwise_sq(uniq, uniq[far]), out=mind)
    idx = np.array(chosen, dtype=np.int64)
    radius = float(np.sqrt(mind.max()))
    return CenterSet(uniq[idx], idx, radius)


def directed_hausdorff(points, centers, block: int = 4096) -> float:
    """max over points of the distance to the nearest center."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    if points.shape[1] != centers.shape[1]:
        raise ValueError(f"dimension mismatch: {points.shape[1]} vs {centers.shape[1]}")
    if points.shape[1] == 0:
        return 0.0
    worst = 0.0
    c2 = np.einsum("ij,ij->i", centers, centers)
    for lo in range(0, points.shape[0], block):
        chunk = points[lo : lo + block]
        d2 = np.maximum(
            np.einsum("ij,ij->i", chunk, chunk)[:, None] - 2.0 * chunk @ centers.T + c2[None, :],
            0.0,
        )
        worst = max(worst, float(d2.min(axis=1).max()))
    return float(np.sqrt(worst))
