from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Sequence


class UndefinedKappa(ValueError):
    """Expected agreement is 1, so kappa has no value."""


@dataclass(frozen=True)
class KappaResult:
    p_o: float
    p_e: float
    kappa: float
    n: int


def cohens_kappa(labels_a: Sequence[Hashable], labels_b: Sequence[Hashable]) -> KappaResult:
    """Unweighted Cohen's kappa for two raters over the same items."""
    if len(labels_a) != len(labels_b):
        raise ValueError("label sequences differ in length")
    n = len(labels_a)
    if n == 0:
        raise ValueError("need at least one item")
    p_o = sum(a == b for a, b in zip(labels_a, labels_b)) / n
    ca, cb = Counter(labels_a), Counter(labels_b)
    p_e = sum(ca[k] * cb[k] for k in ca.keys() & cb.keys()) / n**2
    if math.isclose(p_e, 1.0):
        raise UndefinedKappa("expected agreement is 1")
    return KappaResult(p_o, p_e, (p_o - p_e) / (1 - p_e), n)


def kappa_from_table(table: Sequence[Sequence[int]]) -> KappaResult:
    """Kappa from a square confusion matrix (rows rater A, columns rater B)."""
    a, b = [], []
    for i, row in enumerate(table):
        for j, count in enumerate(row):
            a += [i] * count
            b += [j] * count
    return cohens_kappa(a, b)


def theme_persistence_or(
    stage_a: Sequence[str],
    stage_b: Sequence[str],
    codes: Sequence[str],
    method: str = "marginal",
    unknown: str = "UNKNOWN",
) -> dict[str, float | None]:
    """Odds of each theme at stage B relative to stage A.

    ``marginal``: odds_B / odds_A using each stage's label frequencies.
    ``inf`` when the theme is absent at A but present at B, 0 for the
    reverse, ``None`` when absent at both.
    ``conditional``: among paired records, odds of B=theme given A=theme
    over odds of B=theme given A!=theme.
    """
    if len(stage_a) != len(stage_b):
        raise ValueError("stage label sequences must be paired")
    if not stage_a:
        raise ValueError("empty input")
    if method == "marginal":
        a = [x for x in stage_a if x != unknown]
        b = [x for x in stage_b if x != unknown]
        if not a or not b:
            raise ValueError("no known labels at one stage")
        ca, cb = Counter(a), Counter(b)
        return {c: _odds_ratio(ca[c] / len(a), cb[c] / len(b)) for c in codes}
    if method == "conditional":
        pairs = [(x, y) for x, y in zip(stage_a, stage_b) if x != unknown and y != unknown]
        out: dict[str, float | None] = {}
        for c in codes:
            n11 = sum(x == c and y == c for x, y in pairs)
            n10 = sum(x == c and y != c for x, y in pairs)
            n01 = sum(x != c and y == c for x, y in pairs)
            n00 = sum(x != c and y != c for x, y in pairs)
            num, den = n11 * n00, n10 * n01
            if (n11 + n10) == 0 or (n01 + n00) == 0 or (num == 0 and den == 0):
                out[c] = None
            elif den == 0:
                out[c] = math.inf
            else:
                out[c] = num / den
        return out
    raise ValueError(f"unknown method {method!r}")


def _odds_ratio(p_a: float, p_b: float) -> float | None:
    if p_a == 0 and p_b == 0:
        return None
    if p_a == 0:
        return math.inf
    if p_b == 0:
        return 0.0
    if p_a == 1 or p_b == 1:
        if p_a == p_b:
            return 1.0
        return math.inf if p_b == 1 else 0.0
    return (p_b / (1 - p_b)) / (p_a / (1 - p_a))
