"""Goodness-of-fit, two-proportion and multiple-comparison routines."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from nomiclaw.stats.distributions import chi2_sf, norm_two_sided


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: float | tuple[float, float] | None
    p_value: float
    adjusted_p: float | None = None
    label: str = ""

    __test__ = False  # keep pytest from collecting this class


def chi_square_gof(observed: Sequence[float], expected_props: Sequence[float] | None = None, label: str = "") -> TestResult:
    """Pearson goodness-of-fit; uniform proportions when none are given."""
    k = len(observed)
    if k < 2:
        raise ValueError("need at least two cells")
    if any(o < 0 for o in observed):
        raise ValueError("observed counts must be non-negative")
    if expected_props is None:
        expected_props = [1.0 / k] * k
    if len(expected_props) != k:
        raise ValueError("observed and expected lengths differ")
    if abs(sum(expected_props) - 1.0) > 1e-9:
        raise ValueError("expected proportions must sum to 1")
    n = sum(observed)
    expected = [p * n for p in expected_props]
    if any(e <= 0 for e in expected):
        raise ValueError("zero expected cell")
    stat = sum((o - e) ** 2 / e for o, e in zip(observed, expected))
    return TestResult(stat, k - 1, chi2_sf(stat, k - 1), label=label)


def two_prop_z(w1: int, n1: int, w2: int, n2: int, label: str = "") -> TestResult:
    """Pooled two-proportion z test, two-sided."""
    if n1 <= 0 or n2 <= 0 or not (0 <= w1 <= n1 and 0 <= w2 <= n2):
        raise ValueError("need 0 <= w <= n and n > 0")
    pooled = (w1 + w2) / (n1 + n2)
    if pooled in (0.0, 1.0):
        raise ValueError("degenerate input: pooled proportion is 0 or 1")
    se = math.sqrt(pooled * (1 - pooled) * (1 / n1 + 1 / n2))
    z = (w1 / n1 - w2 / n2) / se
    return TestResult(z, None, norm_two_sided(z), label=label)


def benjamini_hochberg(p_values: Sequence[float]) -> list[float]:
    """Step-up FDR adjustment; output is in the input order."""
    m = len(p_values)
    if any(not 0.0 <= p <= 1.0 for p in p_values):
        raise ValueError("p-values must lie in [0, 1]")
    order = sorted(range(m), key=lambda i: p_values[i])  # stable
    adjusted = [0.0] * m
    running = 1.0
    for rank in range(m, 0, -1):
        i = order[rank - 1]
        running = min(running, p_values[i] * (m / rank))
        adjusted[i] = min(running, 1.0)
    return adjusted


def pairwise_win_tests(wins: Mapping[str, int], totals: Mapping[str, int]) -> list[TestResult]:
    """All pairwise two-proportion tests with BH-adjusted p-values."""
    pairs = list(itertools.combinations(list(wins), 2))
    raw = []
    for a, b in pairs:
        try:
            raw.append(two_prop_z(wins[a], totals[a], wins[b], totals[b], label=f"{a} vs {b}"))
        except ValueError:
            # both at 0% or both at 100%: no evidence of a difference
            raw.append(TestResult(0.0, None, 1.0, label=f"{a} vs {b}"))
    adj = benjamini_hochberg([r.p_value for r in raw])
    return [TestResult(r.statistic, r.df, r.p_value, q, r.label) for r, q in zip(raw, adj)]
