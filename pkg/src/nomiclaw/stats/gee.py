"""Logistic GEE with an exchangeable working correlation.

Each cluster (a run) shares one correlation ``alpha`` between any two of its
observations. ``alpha`` and the scale are moment estimates from Pearson
residuals; the reported covariance is the robust sandwich.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from nomiclaw.stats.distributions import norm_two_sided
from nomiclaw.stats.glm import design_matrix, expit, glm_logit


class SingularCovarianceError(np.linalg.LinAlgError):
    pass


@dataclass
class GeeResult:
    names: list[str]
    estimates: np.ndarray
    standard_errors: np.ndarray
    naive_standard_errors: np.ndarray
    alpha: float
    scale: float
    n_clusters: int
    converged: bool
    iterations: int

    @property
    def wald_p(self) -> np.ndarray:
        return np.array([norm_two_sided(b / s) for b, s in zip(self.estimates, self.standard_errors)])

    def table(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "term": self.names,
                "estimate": self.estimates,
                "robust_se": self.standard_errors,
                "z": self.estimates / self.standard_errors,
                "wald_p": self.wald_p,
            }
        )


def _exchangeable_inverse(k: int, alpha: float) -> np.ndarray:
    # (1-a)I + aJ has inverse (I - c J)/(1-a), c = a / (1 + a(k-1))
    denom = 1.0 + alpha * (k - 1)
    if abs(1.0 - alpha) < 1e-12 or abs(denom) < 1e-12:
        raise SingularCovarianceError("singular exchangeable correlation")
    c = alpha / denom
    return (np.eye(k) - c * np.ones((k, k))) / (1.0 - alpha)


def gee_logit_exchangeable(
    X: np.ndarray,
    y: np.ndarray,
    groups: Sequence,
    names: Sequence[str] | None = None,
    *,
    tol: float = 1e-8,
    max_iter: int = 100,
) -> GeeResult:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    groups = np.asarray(groups)
    n, p = X.shape
    names = list(names) if names is not None else [f"x{j}" for j in range(p)]
    labels, first = np.unique(groups, return_index=True)
    labels = labels[np.argsort(first)]
    if len(labels) < 2:
        raise ValueError("need at least two clusters")
    if np.linalg.matrix_rank(X) < p:
        raise SingularCovarianceError("design matrix is rank deficient")
    index = [np.flatnonzero(groups == g) for g in labels]
    n_pairs = sum(len(ix) * (len(ix) - 1) / 2 for ix in index)

    beta = glm_logit(X, y, names).estimates.copy()
    alpha, scale = 0.0, 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        mu = expit(X @ beta)
        sd = np.sqrt(mu * (1 - mu))
        r = (y - mu) / sd
        scale = float(np.sum(r**2) / (n - p))
        if n_pairs > 0:
            cross = sum((r[ix].sum() ** 2 - np.sum(r[ix] ** 2)) / 2.0 for ix in index)
            denom = n_pairs - p if n_pairs > p else n_pairs
            alpha = float(cross / (scale * denom))
        else:
            alpha = 0.0
        bread = np.zeros((p, p))
        score = np.zeros(p)
        for g, ix in zip(labels, index):
            d = X[ix] * (mu[ix] * (1 - mu[ix]))[:, None]
            try:
                rinv = _exchangeable_inverse(len(ix), alpha)
            except SingularCovarianceError:
                raise SingularCovarianceError(f"working covariance singular in cluster {g!r}") from None
            vinv = rinv / np.outer(sd[ix], sd[ix])
            bread += d.T @ vinv @ d
            score += d.T @ vinv @ (y[ix] - mu[ix])
        step = np.linalg.solve(bread, score)
        beta = beta + step
        if np.max(np.abs(step)) < tol:
            converged = True
            break

    mu = expit(X @ beta)
    sd = np.sqrt(mu * (1 - mu))
    bread = np.zeros((p, p))
    meat = np.zeros((p, p))
    for g, ix in zip(labels, index):
        d = X[ix] * (mu[ix] * (1 - mu[ix]))[:, None]
        vinv = _exchangeable_inverse(len(ix), alpha) / np.outer(sd[ix], sd[ix])
        u = d.T @ vinv @ (y[ix] - mu[ix])
        bread += d.T @ vinv @ d
        meat += np.outer(u, u)
    binv = np.linalg.inv(bread)
    robust = binv @ meat @ binv
    return GeeResult(
        names=names,
        estimates=beta,
        standard_errors=np.sqrt(np.diag(robust)),
        naive_standard_errors=np.sqrt(np.diag(binv) * scale),
        alpha=alpha,
        scale=scale,
        n_clusters=len(labels),
        converged=converged,
        iterations=it,
    )


def win_gee(
    table: pd.DataFrame,
    ref: str | None = None,
    include_model: bool = True,
    include_vignette: bool = True,
) -> GeeResult:
    """Win probability clustered on run, with model and vignette covariates."""
    factors = [f for f, on in (("model_id", include_model), ("vignette_id", include_vignette)) if on]
    X, names = design_matrix(table, factors, {"model_id": ref} if ref else None)
    return gee_logit_exchangeable(X, table["won"].astype(float).to_numpy(), table["run_id"].to_numpy(), names)
