import itertools

import numpy as np
import pytest

from conftest import brute_force_join, is_acyclic_oracle, join_tuples_matrix
from relcoreset.jointree import (
    CyclicError,
    MaterializeCapError,
    check_acyclic,
    join_row_indices,
    key_codes,
    materialize,
)
from relcoreset.schema import build_partition, table_from_arrays
from relcoreset.synth import cyclic_instance, random_instance


def tables_from_sets(feature_sets):
    return [
        table_from_arrays(f"t{i}", tuple(sorted(fs)), np.zeros((1, len(fs))))
        for i, fs in enumerate(feature_sets)
    ]


def test_worked_pair_tree(worked_pair):
    tree = check_acyclic(worked_pair)
    assert tree.root == 1
    assert tree.parent == {0: 1, 1: None}
    assert tree.shared == {0: ("d2",)}
    assert tree.order == (0, 1)


def test_worked_pair_materialize(worked_pair):
    dm = materialize(worked_pair)
    expected = np.array(
        [
            [1, 1, 1],
            [1, 1, 4],
            [2, 1, 1],
            [2, 1, 4],
            [3, 3, 1],
            [3, 3, 3],
        ],
        dtype=np.float64,
    )
    assert dm.feature_order == ("d1", "d2", "d3")
    assert np.array_equal(dm.points, expected)
    # row_tables must reproduce the same points
    tbls = worked_pair
    rebuilt = np.column_stack(
        [
            tbls[0].data[dm.row_tables[:, 0]],
            tbls[1].data[dm.row_tables[:, 1]][:, 1:],
        ]
    )
    assert np.array_equal(rebuilt, expected)


def test_triangle_is_cyclic():
    tabs = tables_from_sets([{"u", "v"}, {"v", "w"}, {"w", "u"}])
    with pytest.raises(CyclicError) as exc:
        check_acyclic(tabs)
    assert set(exc.value.residual) == {"t0", "t1", "t2"}


def test_cyclic_instance_raises():
    tabs = cyclic_instance(0)
    with pytest.raises(CyclicError):
        check_acyclic(tabs)


def hypergraphs(max_s, n_feats):
    """All hypergraphs with max_s tables over n_feats features, nonempty tables."""
    feats = [f"f{i}" for i in range(n_feats)]
    subsets = [set(c) for r in range(1, n_feats + 1) for c in itertools.combinations(feats, r)]
    for s in range(2, max_s + 1):
        for combo in itertools.combinations_with_replacement(range(len(subsets)), s):
            yield [subsets[i] for i in combo]


def test_gyo_matches_exhaustive_oracle():
    checked = accepted = 0
    for sets in hypergraphs(3, 4):
        tabs = tables_from_sets(sets)
        try:
            check_acyclic(tabs)
            ok = True
        except CyclicError:
            ok = False
        assert ok == is_acyclic_oracle(sets), f"disagree on {sets}"
        checked += 1
        accepted += ok
    assert checked > 500 and 0 < accepted < checked


def test_gyo_matches_oracle_on_random_4table():
    rng = np.random.default_rng(7)
    feats = [f"g{i}" for i in range(5)]
    for _ in range(300):
        sets = []
        for _ in range(4):
            mask = rng.random(5) < 0.45
            if not mask.any():
                mask[rng.integers(5)] = True
            sets.append({f for f, m in zip(feats, mask) if m})
        tabs = tables_from_sets(sets)
        try:
            check_acyclic(tabs)
            ok = True
        except CyclicError:
            ok = False
        assert ok == is_acyclic_oracle(sets), f"disagree on {sets}"


def test_tree_shape_invariants():
    for seed in range(40):
        tabs = random_instance(seed)
        tree = check_acyclic(tabs)
        s = len(tabs)
        assert sorted(tree.order) == list(range(s))
        assert tree.order[-1] == tree.root
        seen = set()
        for node in tree.order:
            p = tree.parent[node]
            if node == tree.root:
                assert p is None
            else:
                assert p not in seen  # parent comes later in bottom-up order
                shared = set(tabs[node].feature_names) & set(tabs[p].feature_names)
                assert set(tree.shared[node]) == shared
            seen.add(node)
        # running intersection: a feature's owners form a connected subtree
        for f in {f for t in tabs for f in t.feature_names}:
            owners = {i for i, t in enumerate(tabs) if f in t.feature_names}
            if len(owners) <= 1:
                continue
            start = next(iter(owners))
            seen_f = {start}
            stack = [start]
            while stack:
                cur = stack.pop()
                nbs = [tree.parent[cur]] if tree.parent[cur] is not None else []
                nbs += tree.children(cur)
                for nb in nbs:
                    if nb in owners and nb not in seen_f:
                        seen_f.add(nb)
                        stack.append(nb)
            assert seen_f == owners


def test_rerooted_preserves_edges_and_shared():
    tabs = random_instance(3)
    tree = check_acyclic(tabs)
    for new_root in tree.order:
        r = tree.rerooted(new_root)
        assert r.root == new_root
        assert sorted(r.order) == sorted(tree.order)
        edges = {frozenset((c, p)) for c, p in tree.parent.items() if p is not None}
        redges = {frozenset((c, p)) for c, p in r.parent.items() if p is not None}
        assert edges == redges
        for c, p in r.parent.items():
            if p is not None:
                assert set(r.shared[c]) == set(tabs[c].feature_names) & set(tabs[p].feature_names)


def test_materialize_matches_brute_force_on_random_instances():
    for seed in range(30):
        tabs = random_instance(seed, max_rows=12)
        dm = materialize(tabs)
        oracle = join_tuples_matrix(tabs)
        assert dm.points.shape == oracle.shape
        if oracle.size:
            assert sorted(map(tuple, dm.points)) == sorted(map(tuple, oracle))


def test_materialize_canonical_sort(worked_pair):
    dm = materialize(worked_pair)
    part = build_partition(worked_pair)
    keys = [part.full.index(f) for f in part.key_features()]
    rest = [j for j in range(part.dim) if j not in keys]
    cols = keys + rest
    key_view = dm.points[:, cols]
    assert all(tuple(key_view[i]) <= tuple(key_view[i + 1]) for i in range(dm.n - 1))


def test_cross_product_instance():
    A = table_from_arrays("A", ("a",), [[0.0], [1.0]])
    B = table_from_arrays("B", ("b",), [[5.0], [6.0], [7.0]])
    tree = check_acyclic([A, B])
    assert tree.shared in ({0: ()}, {1: ()})
    dm = materialize([A, B])
    assert dm.n == 6
    oracle = join_tuples_matrix([A, B])
    assert {tuple(r) for r in dm.points} == {tuple(r) for r in oracle}


def test_empty_join_is_fine():
    A = table_from_arrays("A", ("k", "x"), [[0, 1]])
    B = table_from_arrays("B", ("k", "y"), [[1, 2]])
    dm = materialize([A, B])
    assert dm.n == 0
    assert brute_force_join([A, B]) == []


def test_materialize_cap():
    A = table_from_arrays("A", ("a",), np.arange(40.0))
    B = table_from_arrays("B", ("b",), np.arange(40.0))
    with pytest.raises(MaterializeCapError) as exc:
        materialize([A, B], cap=1000)
    assert exc.value.size == 1600
    assert materialize([A, B], cap=1600).n == 1600


def test_key_codes_bit_exact():
    child = table_from_arrays("c", ("k",), [[0.1], [0.2], [0.1 + 1e-18]])
    parent = table_from_arrays("p", ("k",), [[0.2], [0.1]])
    cc, pc, n = key_codes(child, parent, ("k",))
    assert cc[0] == pc[1] and cc[1] == pc[0]
    # 0.1 + 1e-18 rounds to the same float64 as 0.1, so codes must agree
    assert cc[2] == cc[0]
    assert n == 2


def test_join_row_indices_semijoin_sizes():
    # heavy fanout on one key, dead rows on others: intermediates stay small
    A = table_from_arrays("A", ("k", "x"), [[0, 1], [1, 2], [2, 3]])
    B = table_from_arrays("B", ("k", "y"), [[0, 5]] * 4 + [[9, 9]])
    tree = check_acyclic([A, B])
    rows = join_row_indices([A, B], tree)
    assert rows.shape == (4, 2)
    assert np.array_equal(A.data[rows[:, 0], 0], B.data[rows[:, 1], 0])
