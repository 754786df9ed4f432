"""Coresets for empirical-risk minimization over relational joins.

The join is never materialized on the hot path: pseudo-cube counting and
uniform tuple sampling run over the join tree directly, the aggregation tree
turns per-table cluster centers into full-width representatives with a
certified cover radius, and the weighting stage corrects for cube overlap.
"""

from .aggtree import BuildError, BuildResult, LevelRadii, RootSummary, build_tree, choose_k
from .counting import CountContext, CountOverflowError, EmptyRegionError, PseudoCube, contains
from .estimator import RelationalCoreset
from .evaluate import EvalReport, approx_metric, definition_check
from .jointree import CyclicError, DesignMatrix, JoinTree, MaterializeCapError, check_acyclic, materialize
from .kcenter import CenterSet, directed_hausdorff, gonzalez
from .losses import LossModel, estimate_diameter, theoretical_eps2
from .sampling import uniform_sample
from .schema import FeaturePartition, LoadError, Table, build_partition, load_tables, table_from_arrays, table_from_csv
from .train import LogisticRegressionERM, SoftMarginSVM, TrainingDivergedError, WeightedKMeans, make_trainer
from .weights import Coreset, WeightParams, assign_weights, exact_weights, read_coreset_csv

__version__ = "0.1.0"

__all__ = [
    "BuildError",
    "BuildResult",
    "CenterSet",
    "Coreset",
    "CountContext",
    "CountOverflowError",
    "CyclicError",
    "DesignMatrix",
    "EmptyRegionError",
    "EvalReport",
    "FeaturePartition",
    "JoinTree",
    "LevelRadii",
    "LoadError",
    "LogisticRegressionERM",
    "LossModel",
    "MaterializeCapError",
    "PseudoCube",
    "RelationalCoreset",
    "RootSummary",
    "SoftMarginSVM",
    "Table",
    "TrainingDivergedError",
    "WeightParams",
    "WeightedKMeans",
    "approx_metric",
    "assign_weights",
    "build_partition",
    "build_tree",
    "check_acyclic",
    "choose_k",
    "contains",
    "definition_check",
    "directed_hausdorff",
    "estimate_diameter",
    "exact_weights",
    "gonzalez",
    "load_tables",
    "make_trainer",
    "materialize",
    "read_coreset_csv",
    "table_from_arrays",
    "table_from_csv",
    "theoretical_eps2",
    "uniform_sample",
]
