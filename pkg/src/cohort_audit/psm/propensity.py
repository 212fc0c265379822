"""Propensity scores by logistic regression fitted with IRLS (Newton-Raphson)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..domain import IndividualRecord, validate_records

MAX_ITER = 100
TOL = 1e-8
RIDGE = 1e-8
# Hessians with a condition number above this get the ridge fallback.
COND_LIMIT = 1e12
SEPARATION_EPS = 1e-12


class SingleClass(ValueError):
    pass


class SeparationDetected(ArithmeticError):
    pass


class SingularDesign(ArithmeticError):
    pass


def expit(eta: np.ndarray) -> np.ndarray:
    out = np.empty_like(eta, dtype=float)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    e = np.exp(eta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


@dataclass(frozen=True)
class PropensityModel:
    coefficients: tuple[float, ...]  # intercept first
    converged: bool
    iterations: int
    log_likelihood: float

    def linear_predictor(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        X = X.reshape(X.shape[0], -1) if X.size else np.zeros((len(X), 0))
        beta = np.asarray(self.coefficients)
        return beta[0] + X @ beta[1:]

    def predict(self, X) -> np.ndarray:
        return expit(self.linear_predictor(X))

    def score(self, x: Sequence[float]) -> float:
        return float(self.predict([list(x)])[0])

    def scores(self, records: Sequence[IndividualRecord]) -> dict:
        X = np.array([r.covariates for r in records], dtype=float)
        return dict(zip((r.id for r in records), self.predict(X).tolist()))


def _log_likelihood(eta: np.ndarray, y: np.ndarray) -> float:
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def fit_logistic(X, y, max_iter: int = MAX_ITER, tol: float = TOL,
                 ridge: float = RIDGE) -> PropensityModel:
    """Maximum-likelihood logistic regression of ``y`` (0/1) on ``X`` plus intercept.

    Stops when the largest coefficient change drops below ``tol``. Near-singular
    Newton steps get ``ridge`` added to the Hessian diagonal; with ``ridge=0``
    they raise SingularDesign instead.
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    X = np.asarray(X, dtype=float)
    X = X.reshape(n, -1) if X.size else np.zeros((n, 0))
    if n < 2:
        raise ValueError("need at least two records")
    n_treated = y.sum()
    if n_treated == 0 or n_treated == n:
        raise SingleClass("both treatment classes must be present")
    design = np.hstack([np.ones((n, 1)), X])
    p_dim = design.shape[1]
    beta = np.zeros(p_dim)
    converged = False
    diverging = 0
    it = 0
    for it in range(1, max_iter + 1):
        eta = design @ beta
        mu = expit(eta)
        w = mu * (1.0 - mu)
        hessian = design.T @ (design * w[:, None])
        gradient = design.T @ (y - mu)
        if np.linalg.cond(hessian) > COND_LIMIT:
            if ridge <= 0:
                raise SingularDesign("information matrix is singular; covariates are collinear")
            hessian = hessian + ridge * np.eye(p_dim)
        try:
            step = np.linalg.solve(hessian, gradient)
        except np.linalg.LinAlgError as exc:
            raise SingularDesign(str(exc)) from exc
        if not np.all(np.isfinite(step)):
            raise SingularDesign("Newton step is not finite")
        beta = beta + step
        if np.max(np.abs(step)) < tol:
            converged = True
            break
        mu_new = expit(design @ beta)
        extreme = np.any(np.minimum(mu_new, 1.0 - mu_new) < SEPARATION_EPS)
        growing = np.max(np.abs(beta)) > np.max(np.abs(beta - step))
        diverging = diverging + 1 if (extreme and growing) else 0
        if diverging >= 3:
            raise SeparationDetected(
                f"fitted scores reach 0 or 1 while coefficients diverge (iteration {it})")
    if not converged:
        mu = expit(design @ beta)
        if np.any(np.minimum(mu, 1.0 - mu) < SEPARATION_EPS):
            raise SeparationDetected("no convergence and fitted scores at 0 or 1")
    return PropensityModel(tuple(beta.tolist()), converged, it, _log_likelihood(design @ beta, y))


def fit_propensity(data: Sequence[IndividualRecord], **kwargs) -> PropensityModel:
    """Estimate P(treated | covariates) for a list of records."""
    records = validate_records(data)
    if len(records) < 2:
        raise ValueError("need at least two records")
    X = np.array([r.covariates for r in records], dtype=float)
    y = np.array([1.0 if r.treated else 0.0 for r in records])
    return fit_logistic(X, y, **kwargs)
