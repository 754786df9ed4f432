import numpy as np
import pytest

from relcoreset.estimator import RelationalCoreset
from relcoreset.evaluate import (
    approx_metric,
    definition_check,
    split_label_column,
    weighted_objective,
)
from relcoreset.jointree import materialize
from relcoreset.losses import LossModel
from relcoreset.synth import cluster_chain_instance
from relcoreset.train import WeightedKMeans


def test_split_label_column():
    pts = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    X, y, order = split_label_column(pts, ("a", "lab", "b"), "lab")
    assert np.array_equal(X, [[1.0, 3.0], [4.0, 6.0]])
    assert np.array_equal(y, [2.0, 5.0])
    assert order == ("a", "b")
    X2, y2, order2 = split_label_column(pts, ("a", "b", "c"), None)
    assert X2 is pts and y2 is None and order2 == ("a", "b", "c")
    with pytest.raises(ValueError, match="not among"):
        split_label_column(pts, ("a", "b", "c"), "lab")


def test_weighted_objective_matches_risk():
    km = LossModel("kmeans")
    pts = np.array([[0.0], [2.0]])
    w = np.array([3.0, 1.0])
    c = np.array([[0.0]])
    assert weighted_objective(km, c, pts, w, ("x",)) == pytest.approx(1.0)


def test_exact_coreset_gives_zero_gap(worked_pair):
    # k large enough for cover radius 0: the coreset IS the join, so the
    # objectives agree exactly and the corridor holds trivially
    est = RelationalCoreset(k=6, m_override=50, random_state=0).fit(worked_pair)
    full = materialize(worked_pair).points
    km = LossModel("kmeans")
    centers = np.array([[2.0, 1.0, 2.0]])
    rep = definition_check(
        model=km,
        theta=centers,
        full_points=full,
        coreset_points=est.points_,
        coreset_weights=est.weights_,
        feature_order=est.feature_order_,
        cover_radius=est.radii_[0].final,
        eps1=0.2,
    )
    assert rep.multiplicative_gap == pytest.approx(0.0, abs=1e-12)
    assert rep.eps2 == 0.0  # cover radius is exactly zero
    assert rep.bound_ok
    assert rep.diameter_exact and rep.diameter > 0


def test_definition_check_corridor_on_cluster_instance():
    tabs = cluster_chain_instance(0, rows=250, n_clusters=5, separation=10.0)
    est = RelationalCoreset(k=40, eps1=0.2, m_override=4000, random_state=2).fit(tabs)
    full = materialize(tabs).points
    km = LossModel("kmeans")
    trained = WeightedKMeans(n_clusters=5, random_state=0).fit(est.points_, sample_weight=est.weights_)
    rep = definition_check(
        model=km,
        theta=trained.cluster_centers_,
        full_points=full,
        coreset_points=est.points_,
        coreset_weights=est.weights_,
        feature_order=est.feature_order_,
        cover_radius=est.radii_[0].final,
        eps1=0.2,
        runtimes={"build": 0.1},
    )
    assert rep.bound_ok, (rep.multiplicative_gap, rep.additive_gap, rep.eps2)
    assert rep.full_objective > 0
    assert rep.runtimes == {"build": 0.1}
    d = rep.to_dict()
    assert set(d) >= {"full_objective", "coreset_objective", "bound", "bound_ok"}


def test_definition_check_labeled():
    tabs = cluster_chain_instance(1, rows=200, n_clusters=4, label=True)
    est = RelationalCoreset(k=30, label_feature="label", m_override=2000, random_state=1).fit(tabs)
    full = materialize(tabs).points
    lg = LossModel("logistic")
    d = len(est.feature_order_) - 1
    theta = np.full(d, 0.01)
    L = max(r.final for r in est.radii_)
    rep = definition_check(
        model=lg,
        theta=theta,
        full_points=full,
        coreset_points=est.points_,
        coreset_weights=est.weights_,
        feature_order=est.feature_order_,
        cover_radius=L,
        eps1=0.2,
        label_feature="label",
    )
    assert rep.bound_ok
    assert rep.coreset_objective > 0


def test_approx_metric():
    assert approx_metric(1.2, 1.0) == pytest.approx(0.2)
    assert approx_metric(1.0, 1.0) == 0.0
    assert approx_metric(0.5, 0.0) == float("inf")
    assert approx_metric(0.0, 0.0) == 0.0
