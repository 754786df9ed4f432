"""Join hypergraph validation and the materialization oracle.

Tables form a hypergraph whose vertices are feature names.  An instance is
accepted iff repeated GYO reduction (drop features private to one table;
remove a table whose remaining features are contained in another's) empties
the hypergraph down to a single table.  The containment witnesses found on
the way form the join tree; shared features between a node and its parent
carry the running-intersection property.

``materialize`` is the quadratic-memory reference path: it enumerates the
full join explicitly.  Everything downstream treats it as an oracle and a
last resort, never the default.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .schema import FeaturePartition, Table, build_partition

MATERIALIZE_CAP = 10**7


class CyclicError(ValueError):
    """Join hypergraph is not acyclic; carries the irreducible remainder."""

    def __init__(self, residual: dict[str, tuple[str, ...]]):
        self.residual = residual
        pretty = "; ".join(f"{name}({', '.join(feats)})" for name, feats in residual.items())
        super().__init__(f"join is cyclic, GYO reduction stalled with: {pretty}")


class MaterializeCapError(RuntimeError):
    def __init__(self, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(f"join has {size} rows, above the materialization cap {cap}")


@dataclass(frozen=True)
class JoinTree:
    """Rooted join tree over table indices (positions in the table list)."""

    root: int
    parent: dict[int, int | None]
    shared: dict[int, tuple[str, ...]]  # child -> features shared with parent
    order: tuple[int, ...]  # bottom-up: every node before its parent

    @property
    def n_nodes(self) -> int:
        return len(self.order)

    def children(self, i: int) -> list[int]:
        return [c for c in self.order if self.parent[c] == i]

    def top_down(self) -> tuple[int, ...]:
        return tuple(reversed(self.order))

    def rerooted(self, new_root: int) -> "JoinTree":
        """Same undirected tree, hung from ``new_root``."""
        adj: dict[int, list[int]] = {i: [] for i in self.order}
        pair_shared: dict[frozenset, tuple[str, ...]] = {}
        for c, p in self.parent.items():
            if p is not None:
                adj[c].append(p)
                adj[p].append(c)
                pair_shared[frozenset((c, p))] = self.shared[c]
        parent: dict[int, int | None] = {new_root: None}
        shared: dict[int, tuple[str, ...]] = {}
        order = []
        stack = [new_root]
        seen = {new_root}
        while stack:
            node = stack.pop()
            order.append(node)
            for nb in sorted(adj[node]):
                if nb not in seen:
                    seen.add(nb)
                    parent[nb] = node
                    shared[nb] = pair_shared[frozenset((nb, node))]
                    stack.append(nb)
        return JoinTree(new_root, parent, shared, tuple(reversed(order)))


def check_acyclic(tables: list[Table]) -> JoinTree:
    """GYO reduction; returns the join tree or raises CyclicError.

    Both classical rules run to a fixed point: features appearing in exactly
    one live table are dropped, and a live table whose remaining features are
    a subset of another live table's is removed with that table as its join
    parent.  Rule applications scan in table order, so the tree is
    deterministic.  Disconnected instances are still trees: a table whose
    features all became private reduces to the empty set, which is contained
    in anything (a cross product edge with no shared features).
    """
    live: dict[int, set[str]] = {i: set(t.feature_names) for i, t in enumerate(tables)}
    parent: dict[int, int | None] = {}
    removal_order: list[int] = []

    while len(live) > 1:
        counts: dict[str, int] = {}
        for feats in live.values():
            for f in feats:
                counts[f] = counts.get(f, 0) + 1
        for feats in live.values():
            feats -= {f for f in feats if counts[f] == 1}

        removed = None
        for i in sorted(live):
            for j in sorted(live):
                if j != i and live[i] <= live[j]:
                    parent[i] = j
                    removal_order.append(i)
                    removed = i
                    break
            if removed is not None:
                break
        if removed is None:
            residual = {tables[i].name: tuple(sorted(feats)) for i, feats in sorted(live.items())}
            raise CyclicError(residual)
        del live[removed]

    root = next(iter(live))
    parent[root] = None
    shared = {
        c: tuple(f for f in tables[c].feature_names if f in set(tables[p].feature_names))
        for c, p in parent.items()
        if p is not None
    }
    return JoinTree(root, parent, shared, tuple(removal_order + [root]))


def key_codes(child: Table, parent: Table, shared: tuple[str, ...]) -> tuple[np.ndarray, np.ndarray, int]:
    """Factorize the shared-feature values of one tree edge.

    Returns integer codes for the child rows and parent rows over a common
    dictionary (bit-exact value match), plus the dictionary size.  An empty
    shared tuple is a cross product: every row gets code 0.
    """
    if not shared:
        return (
            np.zeros(child.n_rows, dtype=np.int64),
            np.zeros(parent.n_rows, dtype=np.int64),
            1,
        )
    kc = np.column_stack([child.column(f) for f in shared])
    kp = np.column_stack([parent.column(f) for f in shared])
    both = np.vstack([kc, kp])
    _, inverse = np.unique(both, axis=0, return_inverse=True)
    inverse = inverse.astype(np.int64).ravel()
    n_codes = int(inverse.max()) + 1
    return inverse[: child.n_rows], inverse[child.n_rows :], n_codes


def join_row_indices(tables: list[Table], tree: JoinTree, cap: int = MATERIALIZE_CAP) -> np.ndarray:
    """Enumerate the join as an (n, s) matrix of per-table row indices.

    Rows come out in an implementation order; callers wanting a canonical
    order sort the assembled points.  Raises MaterializeCapError before
    allocating anything larger than ``cap`` rows.
    """
    s = len(tables)
    # Bottom-up subtree counts per row, to size the output up front.
    sub: dict[int, np.ndarray] = {}
    for node in tree.order:
        w = np.ones(tables[node].n_rows, dtype=np.float64)
        for c in tree.children(node):
            ccode, pcode, ncodes = key_codes(tables[c], tables[node], tree.shared[c])
            sums = np.bincount(ccode, weights=sub[c], minlength=ncodes)
            w *= sums[pcode]
        if w.max(initial=0.0) > 2**53:
            raise MaterializeCapError(int(w.max()), cap)
        sub[node] = w
    total = float(sub[tree.root].sum())
    if total > cap:
        raise MaterializeCapError(int(total), cap)
    n = int(round(total))

    # Top-down expansion with semi-join filtering: dead rows (zero subtree
    # count) never enter, so intermediate sizes stay at or below n.
    keep_root = np.flatnonzero(sub[tree.root] > 0)
    rows = np.full((len(keep_root), s), -1, dtype=np.int64)
    rows[:, tree.root] = keep_root
    for node in tree.top_down():
        for c in tree.children(node):
            ccode, pcode, ncodes = key_codes(tables[c], tables[node], tree.shared[c])
            vrows = np.flatnonzero(sub[c] > 0)
            order = vrows[np.argsort(ccode[vrows], kind="stable")]
            starts = np.searchsorted(ccode[order], np.arange(ncodes + 1), side="left")
            codes = pcode[rows[:, node]]
            cnt = starts[codes + 1] - starts[codes]
            rows = np.repeat(rows, cnt, axis=0)
            fan_total = int(cnt.sum())
            base = np.repeat(starts[codes], cnt)
            block_origin = np.repeat(np.cumsum(cnt) - cnt, cnt)
            within = np.arange(fan_total, dtype=np.int64) - block_origin
            rows[:, c] = order[base + within]
    assert rows.shape[0] == n
    return rows


@dataclass(frozen=True)
class DesignMatrix:
    points: np.ndarray  # (n, d) joined rows in full feature order
    feature_order: tuple[str, ...]
    row_tables: np.ndarray | None = field(default=None, repr=False)  # (n, s) row indices

    @property
    def n(self) -> int:
        return self.points.shape[0]


def materialize(
    tables: list[Table],
    partition: FeaturePartition | None = None,
    tree: JoinTree | None = None,
    cap: int = MATERIALIZE_CAP,
) -> DesignMatrix:
    """Fully materialize the join in full feature order, canonically sorted.

    Sort order: join-key columns first (in full-order sequence), then the
    remaining columns, all ascending.  Refuses with MaterializeCapError when
    the exact join size exceeds ``cap``.
    """
    if partition is None:
        partition = build_partition(tables)
    if tree is None:
        tree = check_acyclic(tables)
    rows = join_row_indices(tables, tree, cap=cap)
    n = rows.shape[0]
    pts = np.empty((n, partition.dim), dtype=np.float64)
    for i, t in enumerate(tables):
        cols = partition.block_cols[i]
        if cols:
            pts[:, partition.block_slices[i]] = t.data[rows[:, i]][:, list(cols)]
    keys = set(partition.key_features())
    primary = [j for j, f in enumerate(partition.full) if f in keys]
    rest = [j for j in range(partition.dim) if j not in primary]
    sort_cols = primary + rest
    order = np.lexsort(tuple(pts[:, j] for j in reversed(sort_cols))) if sort_cols else np.arange(n)
    return DesignMatrix(pts[order], partition.full, rows[order])
