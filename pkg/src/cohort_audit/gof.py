"""Chi-squared goodness-of-fit against known category proportions.

The upper-tail probability uses the regularized incomplete gamma function,
evaluated by its power series below ``a + 1`` and by a Lentz continued
fraction above, entirely in log space so huge statistics report a floor
instead of a silent zero.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import Sequence

from .rounding import round_count

P_FLOOR = sys.float_info.min
_LOG_P_FLOOR = math.log(P_FLOOR)
_EPS = 1e-14
_MAX_ITER = 10_000
_TINY = 1e-300


class LengthMismatch(ValueError):
    pass


class ZeroExpectedCell(ValueError):
    pass


@dataclass(frozen=True)
class TailProbability:
    p_value: float
    floor_hit: bool
    log_p: float


@dataclass(frozen=True)
class GofInput:
    observed: tuple[int, ...]
    expected_proportions: tuple[float, ...]

    @property
    def total(self) -> int:
        return sum(self.observed)

    @classmethod
    def from_proportions(cls, observed_proportions: Sequence[float], total: int,
                         expected_proportions: Sequence[float]) -> "GofInput":
        """Build counts from published shares; each count rounds half away from zero."""
        observed = tuple(round_count(p * total) for p in observed_proportions)
        return cls(observed, tuple(expected_proportions))


@dataclass(frozen=True)
class GofResult:
    statistic: float
    df: int
    p_value: float
    p_floor_hit: bool
    observed: tuple[int, ...] = ()
    expected: tuple[float, ...] = ()


def _log_prefactor(a: float, x: float) -> float:
    return -x + a * math.log(x) - math.lgamma(a)


def _lower_series(a: float, x: float) -> float:
    """sum_n x^n / (a (a+1) ... (a+n)), the series for P(a, x) without its prefactor."""
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            return total
    raise ArithmeticError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _upper_fraction(a: float, x: float) -> float:
    """Continued fraction for Q(a, x) without its prefactor (modified Lentz)."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete gamma continued fraction did not converge (a={a}, x={x})")


def log_gamma_q(a: float, x: float) -> float:
    """log Q(a, x), the regularized upper incomplete gamma function."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0:
        return 0.0
    if x < a + 1.0:
        p = math.exp(_log_prefactor(a, x)) * _lower_series(a, x)
        return math.log1p(-p) if p < 1.0 else -math.inf
    return _log_prefactor(a, x) + math.log(_upper_fraction(a, x))


def gamma_q(a: float, x: float) -> float:
    return math.exp(log_gamma_q(a, x))


def upper_tail_p(statistic: float, df: int) -> TailProbability:
    """P(X >= statistic) for X ~ chi-squared(df); floored at the smallest normal double."""
    if statistic < 0 or not math.isfinite(statistic):
        raise ValueError(f"statistic must be finite and >= 0, got {statistic!r}")
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df!r}")
    log_p = log_gamma_q(df / 2.0, statistic / 2.0)
    if log_p < _LOG_P_FLOOR:
        return TailProbability(P_FLOOR, True, log_p)
    return TailProbability(min(1.0, math.exp(log_p)), False, log_p)


def chi_squared_gof(data: GofInput) -> GofResult:
    """Pearson statistic sum((O - E)^2 / E) with E = proportion * total, no continuity correction."""
    observed = tuple(data.observed)
    props = tuple(float(p) for p in data.expected_proportions)
    if len(observed) != len(props):
        raise LengthMismatch(f"{len(observed)} observed counts vs {len(props)} proportions")
    if len(observed) < 2:
        raise LengthMismatch("goodness of fit needs at least two categories")
    if any(o < 0 for o in observed):
        raise ValueError("observed counts must be non-negative")
    if abs(math.fsum(props) - 1.0) > 1e-9:
        raise ValueError(f"expected proportions sum to {math.fsum(props)!r}, not 1")
    total = sum(observed)
    expected = tuple(p * total for p in props)
    if any(not e > 0 for e in expected):
        raise ZeroExpectedCell("every expected count must be positive")
    statistic = math.fsum((o - e) ** 2 / e for o, e in zip(observed, expected))
    df = len(observed) - 1
    tail = upper_tail_p(statistic, df)
    return GofResult(statistic, df, tail.p_value, tail.floor_hit, observed, expected)


def format_p(p_value: float, floor_hit: bool, threshold: float = 1e-5) -> str:
    if floor_hit or p_value < threshold:
        return f"< {threshold:.5f}"
    return f"{p_value:.5f}"
