"""Counting join tuples inside pseudo-cubes without materializing the join.

A pseudo-cube is a product of per-table Euclidean balls over the
disjointified feature blocks: a joined point lies inside iff each of its
blocks lies in the matching ball.  Membership therefore decomposes into one
boolean mask per base table, and counting reduces to a single bottom-up
message pass over the join tree (sum over matching child rows, multiply
across children).

Counts are exact integers carried in float64.  Every aggregation step checks
against 2**53 and raises CountOverflowError rather than silently rounding.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .jointree import JoinTree, check_acyclic, key_codes
from .schema import FeaturePartition, Table, build_partition
from .util import MAX_EXACT


class CountOverflowError(OverflowError):
    """An intermediate or final count left the exactly-representable range."""


class EmptyRegionError(RuntimeError):
    """Requested draws from a region containing no join tuples."""


@dataclass(frozen=True)
class PseudoCube:
    """Product of per-table balls: tables it constrains, block-concatenated
    center (in sorted table order), and one shared radius."""

    tables: tuple[int, ...]
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if not self.tables:
            raise ValueError("pseudo-cube must constrain at least one table")
        if list(self.tables) != sorted(set(self.tables)):
            raise ValueError(f"table indices must be sorted and unique, got {self.tables}")
        if self.radius < 0:
            raise ValueError(f"radius must be nonnegative, got {self.radius}")
        object.__setattr__(self, "center", np.ascontiguousarray(self.center, dtype=np.float64).ravel())

    def block_center(self, table: int, partition: FeaturePartition) -> np.ndarray:
        """Slice of the center belonging to one constrained table."""
        pos = 0
        for t in self.tables:
            w = partition.block_width(t)
            if t == table:
                return self.center[pos : pos + w]
            pos += w
        raise KeyError(f"table {table} is not constrained by this cube")

    def validate_blocks(self, partition: FeaturePartition) -> None:
        if any(t < 0 or t >= partition.n_tables for t in self.tables):
            raise ValueError(f"cube references missing table in {self.tables} (instance has {partition.n_tables})")
        want = sum(partition.block_width(t) for t in self.tables)
        if self.center.shape[0] != want:
            raise ValueError(f"cube center has {self.center.shape[0]} coordinates, blocks need {want}")


def contains(cube: PseudoCube, partition: FeaturePartition, points: np.ndarray) -> np.ndarray:
    """Membership of full-order points in a cube; closed-ball comparison on
    squared distances, block by block."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    ok = np.ones(points.shape[0], dtype=bool)
    r2 = cube.radius * cube.radius
    for t in cube.tables:
        blk = points[:, partition.block_slices[t]]
        d2 = ((blk - cube.block_center(t, partition)) ** 2).sum(axis=1)
        ok &= d2 <= r2
    return ok


@dataclass
class _Edge:
    child: int
    parent: int
    child_code: np.ndarray  # (N_child,) int64
    parent_code: np.ndarray  # (N_parent,) int64
    n_codes: int
    child_sorted: np.ndarray = field(init=False)  # child rows sorted by code
    seg_starts: np.ndarray = field(init=False)  # (n_codes+1,) boundaries into child_sorted

    def __post_init__(self):
        self.child_sorted = np.argsort(self.child_code, kind="stable")
        self.seg_starts = np.searchsorted(
            self.child_code[self.child_sorted], np.arange(self.n_codes + 1), side="left"
        )

    def fold(self, child_msg: np.ndarray) -> np.ndarray:
        """Sum the child message per key code, gathered at parent rows.

        child_msg is (N_child,) or (N_child, K); the result is the same shape
        with N_parent rows.
        """
        if child_msg.ndim == 1:
            sums = np.bincount(self.child_code, weights=child_msg, minlength=self.n_codes)
        else:
            ordered = child_msg[self.child_sorted]
            present = self.seg_starts[:-1] < self.seg_starts[1:]
            sums = np.zeros((self.n_codes, child_msg.shape[1]), dtype=np.float64)
            if present.any():
                sums[present] = np.add.reduceat(ordered, self.seg_starts[:-1][present], axis=0)
        return sums[self.parent_code]


class CountContext:
    """Precomputed join-tree state for repeated counting and sampling.

    Holds, per table, the disjointified feature block as a dense array, and
    per tree edge the factorized key codes plus a code-sorted layout.  All of
    it is seed-free and reusable across cubes.
    """

    def __init__(self, tables: list[Table], partition: FeaturePartition | None = None, tree: JoinTree | None = None):
        self.tables = list(tables)
        self.partition = partition if partition is not None else build_partition(tables)
        self.tree = tree if tree is not None else check_acyclic(tables)
        self.blocks: list[np.ndarray] = []
        for i, t in enumerate(tables):
            cols = list(self.partition.block_cols[i])
            self.blocks.append(np.ascontiguousarray(t.data[:, cols]) if cols else np.empty((t.n_rows, 0)))
        self.edges: dict[int, _Edge] = {}
        for c, p in self.tree.parent.items():
            if p is not None:
                cc, pc, ncodes = key_codes(tables[c], tables[p], self.tree.shared[c])
                self.edges[c] = _Edge(c, p, cc, pc, ncodes)
        self._children = {i: tuple(self.tree.children(i)) for i in self.tree.order}
        self._join_size: int | None = None

    @property
    def n_tables(self) -> int:
        return len(self.tables)

    def table_mask(self, table: int, block_center: np.ndarray, radius: float) -> np.ndarray:
        """Rows of one table whose block lies in the given ball, as 0/1 floats."""
        blk = self.blocks[table]
        if blk.shape[1] == 0:
            return np.ones(blk.shape[0], dtype=np.float64)
        d2 = ((blk - np.asarray(block_center, dtype=np.float64)) ** 2).sum(axis=1)
        return (d2 <= radius * radius).astype(np.float64)

    def cube_masks(self, cubes) -> dict[int, np.ndarray]:
        """Combined per-table masks for a family of cubes on disjoint tables."""
        seen: set[int] = set()
        masks: dict[int, np.ndarray] = {}
        for cube in cubes:
            cube.validate_blocks(self.partition)
            overlap = seen.intersection(cube.tables)
            if overlap:
                raise ValueError(f"cubes overlap on tables {sorted(overlap)}; index sets must be disjoint")
            seen.update(cube.tables)
            for t in cube.tables:
                masks[t] = self.table_mask(t, cube.block_center(t, self.partition), cube.radius)
        return masks

    def _check(self, arr: np.ndarray) -> np.ndarray:
        if arr.size and float(arr.max()) > MAX_EXACT:
            raise CountOverflowError(f"count {arr.max():.6g} exceeds the exact float64 range (2^53)")
        return arr

    def propagate(self, weights: dict[int, np.ndarray], tree: JoinTree | None = None, stop: int | None = None):
        """Bottom-up message pass.  ``weights[t]`` is (N_t,) or (N_t, K) per-row
        mass (missing tables count as all-ones).  Returns the per-row messages
        dict; the root message sums to the weighted join size.

        With ``stop`` set, the pass ends before folding into that node: the
        returned dict then has each of stop's children carrying its whole
        subtree message.
        """
        tree = tree or self.tree
        msg: dict[int, np.ndarray] = {}
        for node in tree.order:
            if node == stop:
                break
            m = weights.get(node)
            m = np.ones(self.tables[node].n_rows, dtype=np.float64) if m is None else np.asarray(m, dtype=np.float64)
            for c in tree.children(node):
                edge = self.edges[c] if tree is self.tree else self._edge_for(tree, c)
                folded = edge.fold(msg[c])
                if m.ndim < folded.ndim:
                    m = m[:, None] * folded
                elif folded.ndim < m.ndim:
                    m = m * folded[:, None]
                else:
                    m = m * folded
                self._check(m)
            msg[node] = self._check(m)
        return msg

    def _edge_cache_for(self, tree: JoinTree) -> dict[int, _Edge]:
        cache = getattr(self, "_alt_edges", None)
        if cache is None:
            cache = {}
            self._alt_edges = cache
        key = tree.root
        if key not in cache:
            edges = {}
            for c, p in tree.parent.items():
                if p is not None:
                    cc, pc, ncodes = key_codes(self.tables[c], self.tables[p], tree.shared[c])
                    edges[c] = _Edge(c, p, cc, pc, ncodes)
            cache[key] = edges
        return cache[key]

    def _edge_for(self, tree: JoinTree, child: int) -> _Edge:
        return self._edge_cache_for(tree)[child]

    def count(self, weights: dict[int, np.ndarray]) -> np.ndarray | float:
        """Weighted join size: scalar for (N,) weights, (K,) for (N, K)."""
        msg = self.propagate(weights)
        root = msg[self.tree.root]
        total = root.sum(axis=0)
        self._check(np.atleast_1d(total))
        return total

    def join_size(self) -> int:
        if self._join_size is None:
            self._join_size = int(round(float(self.count({}))))
        return self._join_size

    def pc_count(self, cubes) -> int:
        """Exact number of join tuples inside the intersection of the cubes."""
        total = self.count(self.cube_masks(cubes))
        return int(round(float(total)))

    def pc_count_batch(self, cubes_list) -> np.ndarray:
        """Counts for K cubes sharing one table layout, in one pass.

        All cubes must constrain the same sorted table set; per table the
        masks stack into an (N_t, K) matrix and the message pass runs once.
        """
        if not cubes_list:
            return np.zeros(0, dtype=np.int64)
        layout = cubes_list[0].tables
        if any(c.tables != layout for c in cubes_list):
            raise ValueError("batched cubes must share the same table set")
        weights: dict[int, np.ndarray] = {}
        for t in layout:
            cols = np.column_stack(
                [self.table_mask(t, c.block_center(t, self.partition), c.radius) for c in cubes_list]
            )
            weights[t] = cols
        totals = np.atleast_1d(self.count(weights))
        return np.rint(totals).astype(np.int64)

    # -- grid counting ------------------------------------------------------

    def _separator_root(self, left_tables: set[int], right_tables: set[int]) -> int | None:
        """A node at which every child subtree touches only one side.

        Rooted there, the left-indexed and right-indexed masks never meet
        below the root, so the grid count factorizes into a single matrix
        product.  Returns None when no such node exists.
        """
        for v in sorted(self.tree.order):
            tree = self.tree if v == self.tree.root else self.tree.rerooted(v)
            good = True
            for c in tree.children(v):
                members = self._subtree_members(tree, c)
                if members & left_tables and members & right_tables:
                    good = False
                    break
            if good:
                return v
        return None

    @staticmethod
    def _subtree_members(tree: JoinTree, node: int) -> set[int]:
        members = {node}
        stack = [node]
        kids: dict[int, list[int]] = {}
        for ch, p in tree.parent.items():
            if p is not None:
                kids.setdefault(p, []).append(ch)
        while stack:
            cur = stack.pop()
            for ch in kids.get(cur, ()):
                members.add(ch)
                stack.append(ch)
        return members

    def grid_count(
        self,
        left_masks: dict[int, np.ndarray],
        right_masks: dict[int, np.ndarray],
        threads: int = 1,
    ) -> np.ndarray:
        """Join sizes for all pairings of left and right mask columns.

        ``left_masks[t]`` is (N_t, KL) over the left table set, ``right_masks``
        likewise with KR columns; the result is a (KL, KR) integer matrix whose
        (a, b) entry counts tuples passing left column a and right column b.

        When the join tree admits a separator node, both sides fold into
        per-root-row matrices U (N, KL) and V (N, KR) and the answer is U^T V.
        Otherwise falls back to one batched pass per left column, optionally
        fanned out over a thread pool (results are placed by index, so the
        outcome is identical for any thread count).
        """
        kl = next(iter(left_masks.values())).shape[1]
        kr = next(iter(right_masks.values())).shape[1]
        lt, rt = set(left_masks), set(right_masks)
        if lt & rt:
            raise ValueError(f"left and right constrain the same tables: {sorted(lt & rt)}")

        sep = self._separator_root(lt, rt)
        if sep is not None:
            tree = self.tree if sep == self.tree.root else self.tree.rerooted(sep)
            n_root = self.tables[sep].n_rows
            U = np.ones((n_root, 1), dtype=np.float64)
            V = np.ones((n_root, 1), dtype=np.float64)
            if sep in left_masks:
                U = left_masks[sep].astype(np.float64)
            elif sep in right_masks:
                V = right_masks[sep].astype(np.float64)
            for c in tree.children(sep):
                members = self._subtree_members(tree, c)
                side = left_masks if members & lt else (right_masks if members & rt else None)
                sub_weights = {t: side[t] for t in members if side and t in side}
                msg = self.propagate(sub_weights, tree=tree, stop=sep)
                edge = self._edge_for(tree, c) if tree is not self.tree else self.edges[c]
                folded = edge.fold(msg[c])
                if folded.ndim == 1:
                    folded = folded[:, None]
                self._check(folded)
                # Neutral subtrees (no constrained table) fold once, into V.
                if side is left_masks:
                    U = self._check(U * folded)
                else:
                    V = self._check(V * folded)
            assert U.shape[1] == kl and V.shape[1] == kr
            out = U.T @ V
            self._check(out)
            return np.rint(out).astype(np.int64)

        # General path: vectorize over right columns, loop (optionally across
        # threads) over left columns.
        out = np.empty((kl, kr), dtype=np.int64)

        def one(a: int) -> np.ndarray:
            weights = {t: m[:, a] for t, m in left_masks.items()}
            weights.update(right_masks)
            return np.rint(np.atleast_1d(self.count(weights))).astype(np.int64)

        if threads <= 1 or kl == 1:
            for a in range(kl):
                out[a] = one(a)
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for a, row in zip(range(kl), pool.map(one, range(kl))):
                    out[a] = row
        return out
