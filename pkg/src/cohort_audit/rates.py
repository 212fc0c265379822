"""Crude incidence rates, benchmark aggregation, deviations and case projections."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .domain import AnnualRate

DEFAULT_SCALE = 10_000


class ZeroPopulation(ValueError):
    pass


class EmptySeries(ValueError):
    pass


class ZeroBaseline(ValueError):
    pass


@dataclass(frozen=True)
class Rate:
    """``value`` events per ``scale`` persons."""

    value: float
    scale: float = DEFAULT_SCALE

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale!r}")
        if not self.value >= 0:
            raise ValueError(f"rate must be non-negative, got {self.value!r}")

    def to(self, scale: float) -> "Rate":
        return rescale(self, scale)


@dataclass(frozen=True)
class BaselineStats:
    mean: Rate
    sd: Rate
    n_years: int
    ddof: int = 0


@dataclass(frozen=True)
class DeviationResult:
    observed: float
    baseline_mean: float
    baseline_sd: float
    absolute: float
    fraction: float
    # None when the baseline SD is zero (multiples undefined).
    sd_multiples: float | None
    scale: float = DEFAULT_SCALE

    @property
    def percent(self) -> float:
        return 100.0 * self.fraction


def crude_rate(cases: int, population: int, scale: float = DEFAULT_SCALE) -> Rate:
    """New cases per ``scale`` persons at risk."""
    if population <= 0:
        raise ZeroPopulation(f"population must be positive, got {population!r}")
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale!r}")
    return Rate(cases / population * scale, scale)


def rescale(rate: Rate, new_scale: float) -> Rate:
    if not new_scale > 0:
        raise ValueError(f"scale must be positive, got {new_scale!r}")
    if new_scale == rate.scale:
        return rate
    return Rate(rate.value * new_scale / rate.scale, new_scale)


def _as_rate(item, scale: float) -> Rate:
    if isinstance(item, Rate):
        return rescale(item, scale)
    if isinstance(item, AnnualRate):
        return rescale(Rate(item.rate, item.scale), scale)
    return Rate(float(item), scale)


def baseline_stats(
    annual: Sequence[AnnualRate | Rate | float],
    scale: float = DEFAULT_SCALE,
    ddof: int = 0,
) -> BaselineStats:
    """Mean and SD of annual benchmark rates on a common ``scale``.

    Plain numbers are taken to be already on ``scale``. ``ddof=0`` (population
    SD) is the default; pass ``ddof=1`` for the sample SD.
    """
    values = [_as_rate(a, scale).value for a in annual]
    n = len(values)
    if n == 0:
        raise EmptySeries("baseline needs at least one annual rate")
    if n - ddof <= 0:
        raise ValueError(f"ddof={ddof} leaves no degrees of freedom for {n} values")
    # sorted fsum keeps the result independent of year order
    mean = math.fsum(sorted(values)) / n
    var = math.fsum(sorted((v - mean) ** 2 for v in values)) / (n - ddof)
    return BaselineStats(Rate(mean, scale), Rate(math.sqrt(var), scale), n, ddof)


def deviation(observed: Rate, baseline: BaselineStats) -> DeviationResult:
    """Signed gap between a cohort rate and the benchmark mean."""
    mean = baseline.mean.value
    if mean <= 0:
        raise ZeroBaseline("baseline mean must be positive")
    scale = baseline.mean.scale
    obs = rescale(observed, scale).value
    absolute = obs - mean
    sd = baseline.sd.value
    return DeviationResult(
        observed=obs,
        baseline_mean=mean,
        baseline_sd=sd,
        absolute=absolute,
        fraction=absolute / mean,
        sd_multiples=absolute / sd if sd > 0 else None,
        scale=scale,
    )


def project_cases(rate: Rate, population: int) -> float:
    """Expected annual cases if ``rate`` applied to ``population``."""
    if population <= 0:
        raise ZeroPopulation(f"population must be positive, got {population!r}")
    return rate.value * population / rate.scale


def implied_population(rate: Rate, cases: float) -> float:
    """Population at which ``rate`` would produce ``cases`` (inverse projection)."""
    if rate.value <= 0:
        raise ZeroBaseline("cannot back-derive a population from a zero rate")
    return cases * rate.scale / rate.value
