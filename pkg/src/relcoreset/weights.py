"""Turning root pseudo-cubes into a weighted coreset.

Cubes overlap, so raw per-cube counts overcount.  Cubes are processed in
index order: the first keeps its exact count; every later cube estimates,
from uniform samples of its own population, the fraction not yet covered by
any earlier HEAVY cube.  Cubes whose fresh fraction clears the 2*tau
threshold become heavy with weight (fraction estimate) * (exact count);
the rest get weight zero and are dropped from the output.  The threshold,
sample size, and slack follow the epsilon-split

    delta = (eps1 - beta) / (2 (1 + beta))
    tau   = eps1 (1 - delta) / (8 k^2 (1 + beta))
    m     = ceil(3 / (delta^2 tau) * ln(2 k / lambda))

``exact_weights`` is the oracle twin: it takes the materialized join and
computes every fresh count by brute force.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .aggtree import RootSummary
from .counting import CountContext, PseudoCube, contains
from .sampling import uniform_sample
from .util import STREAM_WEIGHTS, rng_for


@dataclass(frozen=True)
class ResolvedWeightParams:
    eps1: float
    beta: float
    lam: float
    delta: float
    tau: float
    m: int
    m_formula: int
    capped: bool


@dataclass(frozen=True)
class WeightParams:
    eps1: float = 0.2
    beta: float = 0.0
    lam: float = 0.05
    m_cap: int = 10**6
    m_override: int | None = None

    def resolve(self, k: int) -> ResolvedWeightParams:
        if not (0.0 < self.eps1 < 1.0):
            raise ValueError(f"eps1 must lie in (0, 1), got {self.eps1}")
        if not (0.0 <= self.beta < self.eps1):
            raise ValueError(f"beta must lie in [0, eps1), got {self.beta}")
        if not (0.0 < self.lam < 1.0):
            raise ValueError(f"lambda must lie in (0, 1), got {self.lam}")
        if k < 1:
            raise ValueError(f"k must be positive, got {k}")
        delta = (self.eps1 - self.beta) / (2.0 * (1.0 + self.beta))
        tau = self.eps1 * (1.0 - delta) / (8.0 * k * k * (1.0 + self.beta))
        # The light-cube mass bound needs (2 tau / (1 - delta)) * k^2 <= eps1/4,
        # which the formula guarantees; keep the guard anyway.
        assert 2.0 * tau / (1.0 - delta) * k * k <= self.eps1 / 4.0 + 1e-12
        m_formula = math.ceil(3.0 / (delta * delta * tau) * math.log(2.0 * k / self.lam))
        if self.m_override is not None:
            m = int(self.m_override)
        else:
            m = min(m_formula, self.m_cap)
            if m < m_formula:
                warnings.warn(
                    f"per-cube sample size capped at {self.m_cap} (formula wants {m_formula}); "
                    "fresh-fraction estimates are coarser than the guarantee assumes",
                    RuntimeWarning,
                    stacklevel=2,
                )
        if m < 1:
            raise ValueError("sample size resolved to zero")
        return ResolvedWeightParams(self.eps1, self.beta, self.lam, delta, tau, m, m_formula, m < m_formula)


@dataclass(frozen=True)
class CubeDiagnostic:
    index: int
    count: int  # exact |P ∩ PC_i|
    fresh: int  # samples outside all prior heavy cubes (g); count for cube 0
    m: int  # samples drawn; 0 for cube 0
    ratio: float  # fresh fraction estimate
    heavy: bool
    weight: float


@dataclass
class Coreset:
    """Weighted representative points in full feature order."""

    points: np.ndarray  # (k', d)
    weights: np.ndarray  # (k',) nonnegative, zero = dropped cube
    feature_order: tuple[str, ...]
    meta: dict = field(default_factory=dict)
    diagnostics: tuple[CubeDiagnostic, ...] = ()

    @property
    def heavy_mask(self) -> np.ndarray:
        return self.weights > 0

    def nonzero(self) -> tuple[np.ndarray, np.ndarray]:
        keep = self.heavy_mask
        return self.points[keep], self.weights[keep]

    def write_csv(self, path: str) -> None:
        pts, w = self.nonzero()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(list(self.feature_order) + ["weight"])
            for row, wi in zip(pts, w):
                writer.writerow([repr(float(v)) for v in row] + [repr(float(wi))])

    def write_meta(self, path: str) -> None:
        doc = dict(self.meta)
        doc["diagnostics"] = [vars(d) for d in self.diagnostics]
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, default=float)
            fh.write("\n")


def read_coreset_csv(path: str) -> tuple[np.ndarray, np.ndarray, tuple[str, ...]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "weight":
            raise ValueError(f"{path}: last column must be 'weight'")
        rows = [[float(c) for c in row] for row in reader if row]
    arr = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(header))
    return arr[:, :-1], arr[:, -1], tuple(header[:-1])


def _prior_heavy_filter(centers: np.ndarray, slices, radius: float) -> np.ndarray:
    """Pairwise 'can overlap' test: every block's center distance <= 2r."""
    k = centers.shape[0]
    can = np.ones((k, k), dtype=bool)
    lim = (2.0 * radius) ** 2
    for sl in slices:
        blk = centers[:, sl]
        d2 = ((blk[:, None, :] - blk[None, :, :]) ** 2).sum(axis=2)
        can &= d2 <= lim
    return can


def assign_weights(
    summary: RootSummary,
    ctx: CountContext,
    params: WeightParams,
    seed: int | None = None,
) -> Coreset:
    """Estimate overlap-corrected weights for the root cubes.

    Sequential by construction: cube i's fresh fraction is defined against
    the heavy set decided for cubes 0..i-1.  Sampling inside each cube uses
    its own derived RNG stream, so results do not depend on how the per-cube
    work is scheduled.
    """
    cubes = list(summary.cubes)
    k = len(cubes)
    seed = summary.seed if seed is None else seed
    resolved = params.resolve(k)
    part = ctx.partition

    counts = ctx.pc_count_batch(cubes)
    if np.any(counts <= 0):
        bad = np.flatnonzero(counts <= 0)
        raise ValueError(f"root cubes {bad.tolist()} are empty; summary and instance disagree")

    L = summary.final_radius
    slices = [part.block_slices[t] for t in range(part.n_tables) if part.block_width(t)]
    can_overlap = _prior_heavy_filter(summary.centers, slices, L)
    r2 = L * L

    weights = np.zeros(k, dtype=np.float64)
    heavy: list[int] = []
    diags: list[CubeDiagnostic] = []

    for i in range(k):
        if i == 0:
            weights[0] = float(counts[0])
            heavy.append(0)
            diags.append(CubeDiagnostic(0, int(counts[0]), int(counts[0]), 0, 1.0, True, weights[0]))
            continue
        rng = rng_for(seed, STREAM_WEIGHTS, i)
        pts = uniform_sample(ctx, [cubes[i]], m=resolved.m, rng=rng)
        outside = np.ones(resolved.m, dtype=bool)
        for j in heavy:
            if not can_overlap[i, j]:
                continue
            inside_j = np.ones(resolved.m, dtype=bool)
            for sl in slices:
                d2 = ((pts[:, sl] - summary.centers[j, sl]) ** 2).sum(axis=1)
                inside_j &= d2 <= r2
                if not inside_j.any():
                    break
            outside &= ~inside_j
            if not outside.any():
                break
        g = int(outside.sum())
        ratio = g / resolved.m
        is_heavy = ratio >= 2.0 * resolved.tau
        w = ratio * float(counts[i]) if is_heavy else 0.0
        if is_heavy:
            heavy.append(i)
            weights[i] = w
        diags.append(CubeDiagnostic(i, int(counts[i]), g, resolved.m, ratio, is_heavy, w))

    meta = {
        "k": k,
        "n": ctx.join_size(),
        "final_radius": L,
        "seed": seed,
        "level_factor": summary.level_factor,
        "params": {
            "eps1": resolved.eps1,
            "beta": resolved.beta,
            "lambda": resolved.lam,
            "delta": resolved.delta,
            "tau": resolved.tau,
            "m": resolved.m,
            "m_formula": resolved.m_formula,
            "m_capped": resolved.capped,
        },
        "total_weight": float(weights.sum()),
        "heavy_cubes": len(heavy),
    }
    return Coreset(summary.centers.copy(), weights, part.full, meta, tuple(diags))


def exact_weights(
    cubes,
    partition,
    points: np.ndarray,
    tau: float | None = None,
    heavy_flags=None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Brute-force fresh counts over a materialized join.

    For each cube in index order, counts the points inside it that no prior
    heavy cube covers.  Heaviness comes from ``heavy_flags`` when given
    (mirroring a sampled run), else from the exact fresh fraction against
    ``tau``.  Returns (weights, heavy flags, fresh counts).
    """
    k = len(cubes)
    n = points.shape[0]
    member = np.zeros((k, n), dtype=bool)
    for i, cube in enumerate(cubes):
        member[i] = contains(cube, partition, points)
    flags = np.zeros(k, dtype=bool)
    fresh = np.zeros(k, dtype=np.int64)
    weights = np.zeros(k, dtype=np.float64)
    covered = np.zeros(n, dtype=bool)
    for i in range(k):
        inside = member[i]
        total = int(inside.sum())
        f = int((inside & ~covered).sum())
        fresh[i] = f
        if i == 0:
            is_heavy = True
        elif heavy_flags is not None:
            is_heavy = bool(heavy_flags[i])
        else:
            if total == 0:
                is_heavy = False
            else:
                is_heavy = (f / total) >= 2.0 * tau
        flags[i] = is_heavy
        if is_heavy:
            weights[i] = float(f)
            covered |= inside
    return weights, flags, fresh
