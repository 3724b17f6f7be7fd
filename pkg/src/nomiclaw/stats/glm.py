"""Binary logistic regression fitted by iteratively reweighted least squares."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from nomiclaw.stats.distributions import norm_two_sided

logger = logging.getLogger(__name__)

Z95 = 1.96


def expit(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def design_matrix(
    data: pd.DataFrame,
    factors: Sequence[str],
    refs: Mapping[str, str] | None = None,
    intercept: bool = True,
) -> tuple[np.ndarray, list[str]]:
    """Treatment-coded design: intercept plus one dummy per non-reference level.

    Levels are sorted; the reference defaults to the first level.
    """
    refs = dict(refs or {})
    cols, names = [], []
    if intercept:
        cols.append(np.ones(len(data)))
        names.append("(Intercept)")
    for f in factors:
        levels = sorted(data[f].astype(str).unique())
        ref = refs.get(f, levels[0])
        if ref not in levels:
            raise ValueError(f"reference level {ref!r} not present in {f!r}")
        values = data[f].astype(str).to_numpy()
        for lev in levels:
            if lev == ref:
                continue
            cols.append((values == lev).astype(float))
            names.append(f"{f}[{lev}]")
    X = np.column_stack(cols) if cols else np.empty((len(data), 0))
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise ValueError("design matrix is not full rank")
    return X, names


@dataclass
class FitResult:
    names: list[str]
    estimates: np.ndarray
    standard_errors: np.ndarray
    deviance: float
    residual_df: int
    converged: bool
    iterations: int
    cov: np.ndarray

    @property
    def z_values(self) -> np.ndarray:
        return self.estimates / self.standard_errors

    @property
    def p_values(self) -> np.ndarray:
        return np.array([norm_two_sided(z) for z in self.z_values])

    @property
    def odds_ratios(self) -> np.ndarray:
        return np.exp(self.estimates)

    @property
    def ci_low(self) -> np.ndarray:
        return np.exp(self.estimates - Z95 * self.standard_errors)

    @property
    def ci_high(self) -> np.ndarray:
        return np.exp(self.estimates + Z95 * self.standard_errors)

    @property
    def dispersion_ratio(self) -> float:
        return self.deviance / self.residual_df if self.residual_df > 0 else math.nan

    def table(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "term": self.names,
                "estimate": self.estimates,
                "se": self.standard_errors,
                "z": self.z_values,
                "p": self.p_values,
                "odds_ratio": self.odds_ratios,
                "ci_low": self.ci_low,
                "ci_high": self.ci_high,
            }
        )


def bernoulli_deviance(y: np.ndarray, mu: np.ndarray) -> float:
    mu = np.clip(mu, 1e-300, 1 - 1e-16)
    return float(-2.0 * np.sum(y * np.log(mu) + (1 - y) * np.log1p(-mu)))


def glm_logit(
    X: np.ndarray,
    y: np.ndarray,
    names: Sequence[str] | None = None,
    *,
    tol: float = 1e-8,
    max_iter: int = 50,
) -> FitResult:
    """IRLS until the largest coefficient step is below ``tol``.

    Quasi-separated data drive some coefficients off to infinity; the fit
    then stops at ``max_iter`` with ``converged=False`` and the partial
    estimates are returned.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if names is None:
        names = [f"x{j}" for j in range(p)]
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("outcomes must be 0/1")
    beta = np.zeros(p)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        mu = expit(X @ beta)
        w = np.clip(mu * (1 - mu), 1e-12, None)
        z = X @ beta + (y - mu) / w
        xtw = X.T * w
        new = np.linalg.solve(xtw @ X, xtw @ z)
        step = np.max(np.abs(new - beta)) if p else 0.0
        beta = new
        if step < tol:
            converged = True
            break
    if not converged:
        logger.warning("IRLS did not converge after %d iterations (possible separation)", it)
    mu = expit(X @ beta)
    w = mu * (1 - mu)
    cov = np.linalg.pinv((X.T * w) @ X)
    se = np.sqrt(np.diag(cov))
    return FitResult(
        names=list(names),
        estimates=beta,
        standard_errors=se,
        deviance=bernoulli_deviance(y, mu),
        residual_df=n - p,
        converged=converged,
        iterations=it,
        cov=cov,
    )


def win_glm(table: pd.DataFrame, ref: str | None = None, factor: str = "model_id") -> FitResult:
    """Win (1) versus anything else (0) per agent-round, by model."""
    X, names = design_matrix(table, [factor], {factor: ref} if ref else None)
    return glm_logit(X, table["won"].astype(float).to_numpy(), names)
