"""Aggregation tree: navigable cluster centers for the join, built bottom-up.

Leaves run k-center on each table's disjointified block.  A merge takes two
nodes, forms the Cartesian grid of their center sets, keeps exactly the grid
points whose combined pseudo-cube (radius: the children's cover bounds)
contains at least one real join tuple, and runs k-center on the survivors.
Pseudo-cube counting does the filtering, so the join is never materialized.

The per-level cover bound follows the recursion
    L_0 = max leaf cover radius
    L_h = factor_h * (l_h + sqrt(2) * L_{h-1})
with l_h the worst merge cover radius at level h and factor_h either
sqrt(2^h) (the default, safe for any pairing) or sqrt(max tables under a
level-h node) (the tighter variant).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .counting import CountContext, PseudoCube
from .kcenter import gonzalez
from .util import STREAM_LEAVES, STREAM_MERGE, Timings, rng_for


class BuildError(RuntimeError):
    """Tree construction cannot continue (empty join, no survivors)."""


@dataclass
class AggNode:
    tables: tuple[int, ...]  # sorted table indices covered by this subtree
    centers: np.ndarray  # (k', width) block-concatenated in `tables` order
    level: int
    creation_id: int
    bound: float = math.nan  # cover radius promise L_level, set when the level closes
    children: tuple = ()

    def n_centers(self) -> int:
        return self.centers.shape[0]

    def block_slices(self, partition) -> dict[int, slice]:
        out = {}
        pos = 0
        for t in self.tables:
            w = partition.block_width(t)
            out[t] = slice(pos, pos + w)
            pos += w
        return out


@dataclass(frozen=True)
class LevelRadii:
    l: tuple[float, ...]  # per-level worst merge cover radius; l[0] is the leaf radius
    L: tuple[float, ...]  # per-level certified cover bound
    r0_hint: float | None = None  # optional diameter / k**(1/rho) diagnostic

    @property
    def final(self) -> float:
        return self.L[-1]


@dataclass(frozen=True)
class MergeStats:
    level: int
    left_id: int
    right_id: int
    radius: float  # pseudo-cube radius used for survivor counting
    grid: int  # candidate grid points
    survivors: int
    cover: float  # k-center cover radius over the survivors


@dataclass(frozen=True)
class RootSummary:
    """What the weighting stage needs: the final centers as pseudo-cubes."""

    centers: np.ndarray  # (k', d) in full feature order
    final_radius: float
    cubes: tuple[PseudoCube, ...]
    k: int  # requested center budget
    seed: int
    level_factor: str

    @property
    def n_centers(self) -> int:
        return self.centers.shape[0]


@dataclass(frozen=True)
class BuildResult:
    root: AggNode
    radii: LevelRadii
    summary: RootSummary
    merges: tuple[MergeStats, ...]
    timings: Timings


def build_leaves(ctx: CountContext, k: int, seed: int) -> tuple[list[AggNode], float]:
    """Per-table k-center on the disjointified blocks; L_0 is the worst radius."""
    leaves = []
    l0 = 0.0
    for i in range(ctx.n_tables):
        cs = gonzalez(ctx.blocks[i], k, rng_for(seed, STREAM_LEAVES, i))
        leaves.append(AggNode((i,), cs.centers, level=0, creation_id=i))
        l0 = max(l0, cs.cover_radius)
    for leaf in leaves:
        leaf.bound = l0
    return leaves, l0


def merge_nodes(
    ctx: CountContext,
    left: AggNode,
    right: AggNode,
    k: int,
    rng,
    threads: int = 1,
) -> tuple[AggNode, MergeStats]:
    """Grid the two center sets, keep inhabited combinations, re-center."""
    part = ctx.partition
    radius = max(left.bound, right.bound)
    lslices = left.block_slices(part)
    rslices = right.block_slices(part)

    def side_masks(node: AggNode, slices) -> dict[int, np.ndarray]:
        masks = {}
        for t in node.tables:
            sub = node.centers[:, slices[t]]
            masks[t] = np.column_stack([ctx.table_mask(t, c, radius) for c in sub])
        return masks

    grid = ctx.grid_count(side_masks(left, lslices), side_masks(right, rslices), threads=threads)
    pairs = np.argwhere(grid > 0)
    if pairs.shape[0] == 0:
        raise BuildError(
            f"no inhabited grid points merging nodes {left.creation_id} and {right.creation_id} "
            f"at radius {radius:g}"
        )

    tables = tuple(sorted(left.tables + right.tables))
    width = sum(part.block_width(t) for t in tables)
    coords = np.empty((pairs.shape[0], width), dtype=np.float64)
    pos = 0
    for t in tables:
        w = part.block_width(t)
        if t in lslices:
            coords[:, pos : pos + w] = left.centers[pairs[:, 0]][:, lslices[t]]
        else:
            coords[:, pos : pos + w] = right.centers[pairs[:, 1]][:, rslices[t]]
        pos += w

    cs = gonzalez(coords, k, rng)
    node = AggNode(tables, cs.centers, level=max(left.level, right.level) + 1, creation_id=-1,
                   children=(left, right))
    stats = MergeStats(
        level=node.level,
        left_id=left.creation_id,
        right_id=right.creation_id,
        radius=radius,
        grid=int(grid.size),
        survivors=int(pairs.shape[0]),
        cover=cs.cover_radius,
    )
    return node, stats


def level_factor_value(mode: str, h: int, parents: list[AggNode]) -> float:
    if mode == "paper":
        return math.sqrt(2.0**h)
    if mode == "tight":
        return math.sqrt(max(len(p.tables) for p in parents))
    raise ValueError(f"unknown level factor mode {mode!r} (expected 'paper' or 'tight')")


def build_tree(
    ctx: CountContext,
    k: int,
    seed: int,
    level_factor: str = "paper",
    threads: int = 1,
    rho: float | None = None,
    diameter: float | None = None,
) -> BuildResult:
    """Run the full bottom-up construction.

    Nodes pair in ascending creation order; an odd node carries to the next
    level unchanged.  Merge levels continue until a single root covers every
    table.  The root's centers, reordered to the full feature order, become
    pseudo-cubes of radius L_final.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    timings = Timings()
    with timings.phase("leaves"):
        if ctx.join_size() == 0:
            raise BuildError("join is empty, nothing to cover")
        nodes, l0 = build_leaves(ctx, k, seed)
    l_list = [l0]
    L_list = [l0]
    merges: list[MergeStats] = []
    next_id = len(nodes)
    h = 0
    with timings.phase("merges"):
        while len(nodes) > 1:
            h += 1
            parents: list[AggNode] = []
            carried: list[AggNode] = []
            worst = 0.0
            merge_i = 0
            while len(nodes) >= 2:
                left, right = nodes.pop(0), nodes.pop(0)
                node, stats = merge_nodes(
                    ctx, left, right, k, rng_for(seed, STREAM_MERGE, h, merge_i), threads=threads
                )
                node.creation_id = next_id
                next_id += 1
                merge_i += 1
                parents.append(node)
                merges.append(stats)
                worst = max(worst, stats.cover)
            carried = nodes  # odd one out, if any
            Lh = level_factor_value(level_factor, h, parents) * (worst + math.sqrt(2.0) * L_list[h - 1])
            for p in parents:
                p.bound = Lh
            l_list.append(worst)
            L_list.append(Lh)
            nodes = carried + parents

    root = nodes[0]
    final = L_list[-1]
    # The root covers every table, and sorted table order concatenates the
    # disjointified blocks exactly in full feature order.
    assert root.tables == tuple(range(ctx.n_tables))
    cubes = tuple(
        PseudoCube(root.tables, root.centers[i], final) for i in range(root.n_centers())
    )
    hint = None
    if rho is not None and diameter is not None and k > 0:
        hint = diameter / (k ** (1.0 / rho))
    radii = LevelRadii(tuple(l_list), tuple(L_list), hint)
    summary = RootSummary(
        centers=root.centers.copy(),
        final_radius=final,
        cubes=cubes,
        k=k,
        seed=seed,
        level_factor=level_factor,
    )
    return BuildResult(root, radii, summary, tuple(merges), timings)


def choose_k(
    ctx: CountContext,
    target_radius: float,
    seed: int,
    k0: int = 8,
    max_k: int = 1 << 16,
    level_factor: str = "paper",
    threads: int = 1,
) -> tuple[int, BuildResult]:
    """Doubling search for the smallest tried k whose certified bound meets
    the target radius.  Raises BuildError when max_k is not enough."""
    if target_radius <= 0:
        raise ValueError("target radius must be positive")
    k = max(1, k0)
    while True:
        result = build_tree(ctx, k, seed, level_factor=level_factor, threads=threads)
        if result.radii.final <= target_radius:
            return k, result
        if k >= max_k:
            raise BuildError(
                f"certified radius {result.radii.final:g} still above target "
                f"{target_radius:g} at k={k}"
            )
        k *= 2
