"""Loss families the coreset guarantee covers, with their continuity constants.

Each family fixes (alpha, beta, z) such that for any points p, q sharing a
label fiber:

    f(theta, p) - f(theta, q) <= alpha(theta) * dist(p, q)**z + beta * f(theta, q)

- squared-distance clustering: alpha = 1 + 1/eps_cont, beta = eps_cont, z = 2
- logistic log-loss (no intercept): alpha = ||theta||, beta = 0, z = 1
- soft-margin SVM hinge: alpha = ||omega||, beta = 0, z = 1 (the ridge term
  sits outside the mean and is added once, not per point)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import check_binary_labels, check_point_matrix, check_weights

KINDS = ("kmeans", "logistic", "svm")


@dataclass(frozen=True)
class LossModel:
    kind: str
    eps_cont: float = 0.5  # continuity knob for the squared-distance family
    reg: float = 1e-3  # ridge weight for the SVM objective

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}, expected one of {KINDS}")
        if self.kind == "kmeans" and self.eps_cont <= 0:
            raise ValueError("eps_cont must be positive")

    @property
    def uses_labels(self) -> bool:
        return self.kind in ("logistic", "svm")

    @property
    def z(self) -> int:
        return 2 if self.kind == "kmeans" else 1

    @property
    def beta(self) -> float:
        return self.eps_cont if self.kind == "kmeans" else 0.0

    def alpha(self, theta) -> float:
        if self.kind == "kmeans":
            return 1.0 + 1.0 / self.eps_cont
        if self.kind == "logistic":
            return float(np.linalg.norm(np.asarray(theta, dtype=np.float64)))
        omega = np.asarray(theta, dtype=np.float64)[:-1]  # last entry is the offset
        return float(np.linalg.norm(omega))

    def point_losses(self, theta, X, y=None) -> np.ndarray:
        """Per-point loss values; labels required for the labeled families."""
        X = check_point_matrix(X, "X")
        if self.kind == "kmeans":
            centers = np.atleast_2d(np.asarray(theta, dtype=np.float64))
            d2 = (
                np.einsum("ij,ij->i", X, X)[:, None]
                - 2.0 * X @ centers.T
                + np.einsum("ij,ij->i", centers, centers)[None, :]
            )
            return np.maximum(d2.min(axis=1), 0.0)
        if y is None:
            raise ValueError(f"{self.kind} loss needs labels")
        y = check_binary_labels(y, X.shape[0])
        theta = np.asarray(theta, dtype=np.float64).ravel()
        if self.kind == "logistic":
            if theta.shape[0] != X.shape[1]:
                raise ValueError(f"theta has {theta.shape[0]} entries, X has {X.shape[1]} columns")
            t = X @ theta
            return np.logaddexp(0.0, t) - y * t
        if theta.shape[0] != X.shape[1] + 1:
            raise ValueError(f"theta must be (omega, b): {X.shape[1] + 1} entries, got {theta.shape[0]}")
        margin = (2.0 * y - 1.0) * (X @ theta[:-1] + theta[-1])
        return np.maximum(0.0, 1.0 - margin)

    def risk(self, theta, X, y=None, weights=None) -> float:
        """Weighted mean loss; the SVM adds its ridge term once, after the mean."""
        X = check_point_matrix(X, "X")
        vals = self.point_losses(theta, X, y)
        if weights is None:
            out = float(vals.mean())
        else:
            w = check_weights(weights, X.shape[0])
            out = float((w * vals).sum() / w.sum())
        if self.kind == "svm":
            omega = np.asarray(theta, dtype=np.float64).ravel()[:-1]
            out += 0.5 * self.reg * float(omega @ omega)
        return out

    def continuity_gap(self, theta, P, Q, y=None) -> float:
        """Worst violation of the continuity inequality over all pairs (p, q).

        For labeled losses both point sets must carry the single label in
        ``y`` (the inequality only binds within a label fiber).  Nonpositive
        means the assumption holds on these points.
        """
        P = check_point_matrix(P, "P")
        Q = check_point_matrix(Q, "Q")
        yp = yq = None
        if self.uses_labels:
            if y is None:
                raise ValueError("labeled loss: pass the shared label fiber")
            yp = np.full(P.shape[0], float(y))
            yq = np.full(Q.shape[0], float(y))
        fp = self.point_losses(theta, P, yp)
        fq = self.point_losses(theta, Q, yq)
        d = np.sqrt(
            np.maximum(
                np.einsum("ij,ij->i", P, P)[:, None]
                - 2.0 * P @ Q.T
                + np.einsum("ij,ij->i", Q, Q)[None, :],
                0.0,
            )
        )
        bound = self.alpha(theta) * d**self.z + self.beta * fq[None, :]
        return float((fp[:, None] - fq[None, :] - bound).max())


def theoretical_eps2(model: LossModel, theta, L: float, diameter: float, eps1: float) -> float:
    """Additive-error coefficient implied by the achieved cover radius.

    Geometric snapping contributes alpha * (L/diameter)**z; dropped light
    cubes contribute at most a (2**z * eps1 / (4 (1+beta))) multiple of that,
    by the threshold choice in the weighting stage.
    """
    if diameter <= 0:
        return 0.0
    a = model.alpha(theta)
    z = model.z
    base = a * (L / diameter) ** z
    return base * (1.0 + (2.0**z) * eps1 / (4.0 * (1.0 + model.beta)))


def estimate_diameter(points, budget: int = 4096, rng=0) -> tuple[float, bool]:
    """Diameter of a point set: exact pairwise max within budget, else the
    same computation on a uniform subsample (a lower bound)."""
    from .util import as_rng

    points = check_point_matrix(points, "points")
    n = points.shape[0]
    exact = n <= budget
    if not exact:
        idx = as_rng(rng).choice(n, size=budget, replace=False)
        points = points[idx]
    best = 0.0
    for lo in range(0, points.shape[0], 2048):
        chunk = points[lo : lo + 2048]
        d2 = (
            np.einsum("ij,ij->i", chunk, chunk)[:, None]
            - 2.0 * chunk @ points.T
            + np.einsum("ij,ij->i", points, points)[None, :]
        )
        best = max(best, float(d2.max()))
    return float(np.sqrt(max(best, 0.0))), exact
