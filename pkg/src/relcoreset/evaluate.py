"""Comparing coreset objectives against the materialized truth."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .losses import LossModel, estimate_diameter, theoretical_eps2


@dataclass(frozen=True)
class EvalReport:
    full_objective: float | None  # None when the join was too big to materialize
    coreset_objective: float
    diameter: float | None
    diameter_exact: bool
    multiplicative_gap: float | None  # |coreset - full| / full
    additive_gap: float | None  # |coreset - full| in units of diameter**z
    eps1: float | None
    eps2: float | None  # implied by the achieved cover radius
    bound: float | None  # eps1 * full + eps2 * diameter**z
    bound_ok: bool | None
    runtimes: dict

    def to_dict(self) -> dict:
        return asdict(self)


def split_label_column(points: np.ndarray, feature_order, label_feature: str | None):
    """Separate the label column from a full-order point matrix.

    Returns (features, labels, remaining feature order); labels is None when
    no label feature is named.
    """
    if label_feature is None:
        return points, None, tuple(feature_order)
    order = list(feature_order)
    if label_feature not in order:
        raise ValueError(f"label feature {label_feature!r} not among {order}")
    col = order.index(label_feature)
    keep = [j for j in range(points.shape[1]) if j != col]
    return points[:, keep], points[:, col], tuple(f for f in order if f != label_feature)


def weighted_objective(model: LossModel, theta, points, weights, feature_order, label_feature=None) -> float:
    X, y, _ = split_label_column(np.asarray(points, dtype=np.float64), feature_order, label_feature)
    return model.risk(theta, X, y=y, weights=weights)


def definition_check(
    model: LossModel,
    theta,
    full_points: np.ndarray,
    coreset_points: np.ndarray,
    coreset_weights: np.ndarray,
    feature_order,
    cover_radius: float,
    eps1: float,
    label_feature: str | None = None,
    diameter: float | None = None,
    runtimes: dict | None = None,
) -> EvalReport:
    """Does the weighted coreset objective sit inside the promised corridor?

    The corridor is eps1-relative plus an additive slack of eps2 * diameter**z
    with eps2 implied by the achieved cover radius.  Distances (cover radius,
    diameter) live in the full joined space, label column included.
    """
    F = weighted_objective(model, theta, full_points, None, feature_order, label_feature)
    Ft = weighted_objective(model, theta, coreset_points, coreset_weights, feature_order, label_feature)
    if diameter is None:
        diameter, exact = estimate_diameter(full_points)
    else:
        exact = True
    e2 = theoretical_eps2(model, theta, cover_radius, diameter, eps1)
    gap = abs(Ft - F)
    bound = eps1 * F + e2 * diameter**model.z
    return EvalReport(
        full_objective=F,
        coreset_objective=Ft,
        diameter=diameter,
        diameter_exact=exact,
        multiplicative_gap=gap / F if F > 0 else (0.0 if gap == 0 else float("inf")),
        additive_gap=gap / diameter**model.z if diameter > 0 else 0.0,
        eps1=eps1,
        eps2=e2,
        bound=bound,
        bound_ok=bool(gap <= bound + 1e-12),
        runtimes=runtimes or {},
    )


def approx_metric(objective_at_theta: float, objective_at_optimum: float) -> float:
    """Suboptimality ratio (F(theta) - F(theta*)) / F(theta*)."""
    if objective_at_optimum <= 0:
        return 0.0 if objective_at_theta <= objective_at_optimum else float("inf")
    return (objective_at_theta - objective_at_optimum) / objective_at_optimum
