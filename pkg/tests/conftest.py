"""Shared oracles for the test suite.

Everything here is implemented independently of the package internals: the
join oracle is a pure-Python nested-loop join over feature-name dicts, cube
membership is recomputed from the definition, and the k-center optimum is
exhaustive.  Tests compare the fast paths against these.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from relcoreset.schema import Table, build_partition


def brute_force_join(tables: list[Table]) -> list[dict]:
    """All join tuples as feature->value dicts, nested-loop style."""
    out: list[dict] = [{}]
    for t in tables:
        nxt = []
        for partial in out:
            for row in t.data:
                vals = dict(zip(t.feature_names, row))
                if all(partial.get(f, v) == v for f, v in vals.items()):
                    merged = dict(partial)
                    merged.update(vals)
                    nxt.append(merged)
        out = nxt
    return out


def join_tuples_matrix(tables: list[Table]) -> np.ndarray:
    """Brute-force join in full feature order, unsorted."""
    part = build_partition(tables)
    dicts = brute_force_join(tables)
    if not dicts:
        return np.empty((0, part.dim))
    return np.array([[d[f] for f in part.full] for d in dicts], dtype=np.float64)


def cube_contains_dict(cube, tables, row: dict) -> bool:
    """Membership straight from the definition: per constrained table, the
    row's disjointified block sits in the closed ball."""
    part = build_partition(tables)
    pos = 0
    for t in cube.tables:
        feats = part.disjoint[t]
        c = cube.center[pos : pos + len(feats)]
        pos += len(feats)
        d2 = sum((row[f] - cv) ** 2 for f, cv in zip(feats, c))
        if d2 > cube.radius * cube.radius:
            return False
    return True


def brute_force_pc_count(tables, cubes) -> int:
    rows = brute_force_join(tables)
    return sum(1 for r in rows if all(cube_contains_dict(c, tables, r) for c in cubes))


def optimal_kcenter_radius(points: np.ndarray, k: int) -> float:
    """Exhaustive minimum cover radius with centers chosen from the points."""
    uniq = np.unique(points, axis=0)
    n = uniq.shape[0]
    if n <= k:
        return 0.0
    d = np.sqrt(((uniq[:, None, :] - uniq[None, :, :]) ** 2).sum(axis=2))
    best = math.inf
    for combo in itertools.combinations(range(n), k):
        r = d[:, combo].min(axis=1).max()
        best = min(best, r)
    return float(best)


def is_acyclic_oracle(feature_sets: list[set]) -> bool:
    """Exhaustive join-tree existence test.

    A hypergraph is accepted iff some spanning tree over the tables has the
    running intersection property: for every feature, the tables containing
    it form a connected subtree.  Enumerates all trees via parent arrays
    (node i > 0 attaches to some earlier node under each permutation), which
    covers all labeled trees for the sizes used in tests (s <= 4).
    """
    s = len(feature_sets)
    if s <= 1:
        return True
    feats = sorted(set().union(*feature_sets))

    def tree_ok(parent_pairs) -> bool:
        adj = {i: set() for i in range(s)}
        for a, b in parent_pairs:
            adj[a].add(b)
            adj[b].add(a)
        for f in feats:
            owners = {i for i in range(s) if f in feature_sets[i]}
            if len(owners) <= 1:
                continue
            # connectivity of owners in the tree restricted to owner nodes
            start = next(iter(owners))
            seen = {start}
            stack = [start]
            while stack:
                cur = stack.pop()
                for nb in adj[cur]:
                    if nb in owners and nb not in seen:
                        seen.add(nb)
                        stack.append(nb)
            if seen != owners:
                return False
        return True

    for perm in itertools.permutations(range(s)):
        for parents in itertools.product(*[range(i) for i in range(1, s)]):
            pairs = [(perm[i], perm[parents[i - 1]]) for i in range(1, s)]
            if tree_ok(pairs):
                return True
    return False


@pytest.fixture
def worked_pair():
    """The 6-row two-table example used throughout."""
    from relcoreset.schema import table_from_arrays

    T1 = table_from_arrays("T1", ("d1", "d2"), [[1, 1], [2, 1], [2, 2], [3, 3]])
    T2 = table_from_arrays("T2", ("d2", "d3"), [[1, 1], [1, 4], [3, 1], [3, 3]])
    return [T1, T2]
