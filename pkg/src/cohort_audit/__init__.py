"""External-validity screening for population-based cohort studies."""

from .domain import (
    AnnualRate,
    BenchmarkBaseline,
    CohortSummary,
    GroupCount,
    IndividualRecord,
    Stratum,
    ValidationError,
    validate_cohort,
)
from .gof import GofInput, GofResult, chi_squared_gof, upper_tail_p
from .rates import Rate, baseline_stats, crude_rate, deviation, project_cases, rescale
from .screening import AuditConfig, Flag

__version__ = "0.1.0"

__all__ = [
    "AnnualRate", "AuditConfig", "BenchmarkBaseline", "CohortSummary", "Flag", "GofInput", "GofResult",
    "GroupCount", "IndividualRecord", "Rate", "Stratum", "ValidationError", "baseline_stats",
    "chi_squared_gof", "crude_rate", "deviation", "project_cases", "rescale", "upper_tail_p",
    "validate_cohort",
]
