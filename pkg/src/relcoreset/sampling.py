"""Exactly uniform sampling of join tuples, optionally inside pseudo-cubes.

One bottom-up pass gives every table row its subtree tuple count; a top-down
pass then descends the join tree, picking each child row with probability
proportional to its count among the rows matching the parent's key.  The
telescoping product makes every surviving join tuple exactly equally likely;
no rejection, no approximation.
"""

from __future__ import annotations

import numpy as np

from .counting import CountContext, EmptyRegionError
from .util import as_rng


def uniform_sample(
    ctx: CountContext,
    cubes=None,
    m: int = 1,
    rng=0,
    with_rows: bool = False,
):
    """Draw ``m`` join tuples uniformly (with replacement) from the region.

    ``cubes`` restricts to tuples inside every given pseudo-cube (disjoint
    table sets); None means the whole join.  Returns the sampled points in
    full feature order, plus the per-table row indices when ``with_rows``.
    Raises EmptyRegionError when the region holds no tuples.
    """
    if m < 1:
        raise ValueError(f"sample size must be positive, got {m}")
    rng = as_rng(rng)
    masks = ctx.cube_masks(cubes) if cubes else {}
    msg = ctx.propagate(masks)
    tree = ctx.tree
    root_w = msg[tree.root]
    total = float(root_w.sum())
    if total <= 0:
        raise EmptyRegionError("region contains no join tuples")

    s = ctx.n_tables
    rows = np.empty((m, s), dtype=np.int64)
    cum = np.cumsum(root_w)
    draws = rng.integers(0, int(round(total)), size=m)
    rows[:, tree.root] = np.searchsorted(cum, draws, side="right")

    for node in tree.top_down():
        for c in tree.children(node):
            edge = ctx.edges[c]
            w_sorted = msg[c][edge.child_sorted]
            gcum = np.cumsum(w_sorted)
            pre = np.concatenate(([0.0], gcum))
            codes = edge.parent_code[rows[:, node]]
            base = pre[edge.seg_starts[codes]]
            totals = pre[edge.seg_starts[codes + 1]] - base
            totals_int = np.rint(totals).astype(np.int64)
            assert np.all(totals_int >= 1), "sampled a parent row with an empty child group"
            offsets = rng.integers(0, totals_int)
            targets = base + offsets
            rows[:, c] = edge.child_sorted[np.searchsorted(gcum, targets, side="right")]

    pts = np.empty((m, ctx.partition.dim), dtype=np.float64)
    for i in range(s):
        if ctx.blocks[i].shape[1]:
            pts[:, ctx.partition.block_slices[i]] = ctx.blocks[i][rows[:, i]]
    return (pts, rows) if with_rows else pts
