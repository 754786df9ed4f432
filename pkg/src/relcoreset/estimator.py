"""End-to-end builder with an estimator interface.

fit() takes the relational instance (a list of tables or a join-spec path),
validates the join, grows the aggregation tree, weights the root cubes, and
exposes the weighted coreset as points_/weights_.  Binary-labeled instances
are handled by conditioning: the label's owner table is split by class and
one sub-coreset is built per class, so every cube is label-pure.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .aggtree import build_tree
from .counting import CountContext
from .jointree import check_acyclic
from .schema import Table, build_partition, load_tables
from .util import Timings, array_hash
from .validation import check_seed
from .weights import WeightParams, assign_weights

_STREAM_CLASS = 9


def _class_seed(random_state: int, class_index: int) -> int:
    return int(np.random.SeedSequence([random_state, _STREAM_CLASS, class_index]).generate_state(1)[0])


def label_owner(tables: list[Table], label_feature: str) -> int:
    """Index of the single table carrying the label feature.

    A label shared by several tables would act as a join key, which the
    conditioning step cannot split on; that is rejected.
    """
    owners = [i for i, t in enumerate(tables) if label_feature in t.feature_names]
    if not owners:
        raise ValueError(f"label feature {label_feature!r} not found in any table")
    if len(owners) > 1:
        names = [tables[i].name for i in owners]
        raise ValueError(f"label feature {label_feature!r} appears in several tables {names}; it would be a join key")
    return owners[0]


class RelationalCoreset(BaseEstimator):
    """Builds a weighted coreset of the (never materialized) join.

    Parameters mirror the construction: ``k`` is the center budget per build
    (split across classes when ``label_feature`` is set), ``eps1``/``beta``/
    ``lam`` drive the weighting thresholds, ``m_cap`` bounds the per-cube
    sample size, ``level_factor`` picks the cover-bound recursion variant.
    """

    def __init__(
        self,
        k: int = 100,
        eps1: float = 0.2,
        beta: float = 0.0,
        lam: float = 0.05,
        label_feature: str | None = None,
        level_factor: str = "paper",
        m_cap: int = 10**6,
        m_override: int | None = None,
        threads: int = 1,
        random_state: int = 0,
    ):
        self.k = k
        self.eps1 = eps1
        self.beta = beta
        self.lam = lam
        self.label_feature = label_feature
        self.level_factor = level_factor
        self.m_cap = m_cap
        self.m_override = m_override
        self.threads = threads
        self.random_state = random_state

    def fit(self, X, y=None):
        if isinstance(X, (str,)):
            tables, partition = load_tables(X)
        else:
            tables = list(X)
            partition = build_partition(tables)
        if not tables:
            raise ValueError("instance has no tables")
        seed = check_seed(self.random_state)
        tree = check_acyclic(tables)
        timings = Timings()
        params = WeightParams(self.eps1, self.beta, self.lam, self.m_cap, self.m_override)

        builds = []  # (class value or None, class tables)
        if self.label_feature is not None:
            owner = label_owner(tables, self.label_feature)
            col = tables[owner].column(self.label_feature)
            values = np.unique(col)
            if not np.all(np.isin(values, (0.0, 1.0))):
                raise ValueError(f"label feature {self.label_feature!r} must be binary 0/1, found {values}")
            for v in values:
                sub = list(tables)
                sub[owner] = tables[owner].take_rows(np.flatnonzero(col == v))
                builds.append((float(v), sub))
        else:
            builds.append((None, tables))

        n_classes = len(builds)
        k_split = [self.k // n_classes + (1 if i < self.k % n_classes else 0) for i in range(n_classes)]

        self.coresets_ = []
        self.summaries_ = []
        self.radii_ = []
        per_class = []
        pts_parts, w_parts = [], []
        n_total = 0
        for idx, ((value, sub), k_c) in enumerate(zip(builds, k_split)):
            if k_c < 1:
                raise ValueError(f"k={self.k} leaves no centers for class {value}")
            ctx = CountContext(sub, partition, tree)
            class_seed = seed if value is None else _class_seed(seed, idx)
            with timings.phase(f"build[{idx}]"):
                result = build_tree(
                    ctx, k_c, class_seed, level_factor=self.level_factor, threads=self.threads
                )
            with timings.phase(f"weigh[{idx}]"):
                coreset = assign_weights(result.summary, ctx, params, seed=class_seed)
            self.coresets_.append(coreset)
            self.summaries_.append(result.summary)
            self.radii_.append(result.radii)
            pts, w = coreset.nonzero()
            pts_parts.append(pts)
            w_parts.append(w)
            n_total += coreset.meta["n"]
            per_class.append(
                {
                    "class": value,
                    "k": k_c,
                    "n": coreset.meta["n"],
                    "final_radius": result.radii.final,
                    "levels_l": list(result.radii.l),
                    "levels_L": list(result.radii.L),
                    "heavy_cubes": coreset.meta["heavy_cubes"],
                    "total_weight": coreset.meta["total_weight"],
                    "merges": [vars(m) for m in result.merges],
                }
            )

        self.points_ = np.vstack(pts_parts)
        self.weights_ = np.concatenate(w_parts)
        self.feature_order_ = partition.full
        self.partition_ = partition
        self.join_tree_ = tree
        self.n_ = n_total
        self.n_features_in_ = partition.dim
        self.report_ = {
            "schema_version": 1,
            "params": self.get_params(),
            "n": n_total,
            "coreset_size": int(self.points_.shape[0]),
            "total_weight": float(self.weights_.sum()),
            "input_hash": array_hash(*[t.data for t in tables]),
            "classes": per_class,
            "timings": dict(timings),
        }
        return self

    def get_coreset(self) -> tuple[np.ndarray, np.ndarray]:
        """The weighted points (zero-weight cubes already dropped)."""
        return self.points_, self.weights_
