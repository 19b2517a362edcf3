"""One-class SVM (RBF kernel) trained by pairwise SMO updates.

Schoelkopf nu-formulation: minimize (1/2) a'Ka subject to
0 <= a_i <= 1/(nu*n) and sum(a) = 1. Features are standardized before
training; the decision is f(x) = sum_i a_i K(x_i, x) - rho, inlier iff
f(x) >= 0. Convergence when the max KKT violation drops below 1e-4 or
after 10,000 pair updates.
"""

from __future__ import annotations

import numpy as np


class DegenerateData(ValueError):
    pass


class ArityMismatch(ValueError):
    pass


class OneClassSvm:
    def __init__(self, support_vectors, dual_coefs, rho, gamma, nu, means, stds):
        self.support_vectors = np.asarray(support_vectors, dtype=float)
        self.dual_coefs = np.asarray(dual_coefs, dtype=float)
        self.rho = float(rho)
        self.gamma = float(gamma)
        self.nu = float(nu)
        self.means = np.asarray(means, dtype=float)
        self.stds = np.asarray(stds, dtype=float)
        self.kkt_violation = None
        self.n_iter = None

    def _standardize(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.means.shape[0]:
            raise ArityMismatch(
                f"expected {self.means.shape[0]} features, got {X.shape[1]}"
            )
        return (X - self.means) / self.stds

    def decision_function(self, X):
        Z = self._standardize(X)
        # K(sv, z) for every z
        d2 = (
            np.sum(self.support_vectors**2, axis=1)[:, None]
            + np.sum(Z**2, axis=1)[None, :]
            - 2.0 * self.support_vectors @ Z.T
        )
        K = np.exp(-self.gamma * np.maximum(d2, 0.0))
        return self.dual_coefs @ K - self.rho

    def predict(self, X):
        """+1 inlier (positive class), 0 outlier."""
        return (self.decision_function(X) >= 0.0).astype(int)


def train_ocsvm(
    X,
    nu: float = 0.5,
    gamma: float | None = None,
    tol: float = 1e-4,
    max_iter: int = 10_000,
) -> OneClassSvm:
    """Train on rows of a single class."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DegenerateData("need >= 2 training rows")
    if not (0.0 < nu <= 1.0):
        raise ValueError("nu must be in (0, 1]")
    n, d = X.shape

    means = X.mean(axis=0)
    stds = X.std(axis=0)
    if np.all(stds == 0.0):
        raise DegenerateData("every feature has zero variance")
    stds = np.where(stds == 0.0, 1.0, stds)
    Z = (X - means) / stds

    if gamma is None:
        mean_var = float(Z.var(axis=0).mean())
        gamma = 1.0 / (d * mean_var)

    d2 = (
        np.sum(Z**2, axis=1)[:, None]
        + np.sum(Z**2, axis=1)[None, :]
        - 2.0 * Z @ Z.T
    )
    K = np.exp(-gamma * np.maximum(d2, 0.0))

    C = 1.0 / (nu * n)
    alpha = np.zeros(n)
    n_full = int(np.floor(nu * n))
    alpha[:n_full] = C
    if n_full < n:
        alpha[n_full] = 1.0 - n_full * C  # fractional remainder keeps sum(a) = 1

    g = K @ alpha  # gradient of (1/2) a'Ka
    eps = 1e-12
    violation = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        up = alpha < C - eps  # can grow
        down = alpha > eps  # can shrink
        gi_candidates = np.where(up, g, np.inf)
        gj_candidates = np.where(down, g, -np.inf)
        i = int(np.argmin(gi_candidates))
        j = int(np.argmax(gj_candidates))
        violation = g[j] - g[i]
        if violation < tol:
            break
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        step = violation / eta if eta > eps else min(C - alpha[i], alpha[j])
        step = min(step, C - alpha[i], alpha[j])
        if step <= 0.0:
            break
        alpha[i] += step
        alpha[j] -= step
        g += step * (K[:, i] - K[:, j])

    free = (alpha > eps) & (alpha < C - eps)
    if np.any(free):
        rho = float(g[free].mean())
    else:
        # no free vectors: rho lies between the bound groups
        lower = g[alpha > eps].max() if np.any(alpha > eps) else 0.0
        upper = g[alpha < C - eps].min() if np.any(alpha < C - eps) else lower
        rho = float((lower + upper) / 2.0)
    # back rho off by the solver tolerance so that boundary support
    # vectors (f(x) = 0 up to convergence error) classify as inliers;
    # only the bound-alpha margin errors fall outside, keeping the
    # training-outlier fraction at or below nu
    rho -= tol

    sv_mask = alpha > eps
    model = OneClassSvm(
        support_vectors=Z[sv_mask],
        dual_coefs=alpha[sv_mask],
        rho=rho,
        gamma=gamma,
        nu=nu,
        means=means,
        stds=stds,
    )
    model.kkt_violation = float(violation)
    model.n_iter = it
    return model


def ocsvm_to_dict(model: OneClassSvm) -> dict:
    return {
        "kind": "one_class_svm",
        "support_vectors": model.support_vectors.tolist(),
        "dual_coefs": model.dual_coefs.tolist(),
        "rho": model.rho,
        "gamma": model.gamma,
        "nu": model.nu,
        "means": model.means.tolist(),
        "stds": model.stds.tolist(),
    }


def ocsvm_from_dict(doc: dict) -> OneClassSvm:
    return OneClassSvm(
        support_vectors=doc["support_vectors"],
        dual_coefs=doc["dual_coefs"],
        rho=doc["rho"],
        gamma=doc["gamma"],
        nu=doc["nu"],
        means=doc["means"],
        stds=doc["stds"],
    )
