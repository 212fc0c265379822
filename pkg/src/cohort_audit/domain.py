"""Shared data vocabulary: cohort counts, strata, benchmarks and per-person records.

Validation collects every violated invariant before raising, so a bad input
table is reported in one pass instead of one error at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

STRATA_TOLERANCE = 1e-9
TOTAL_KEY = "total"


@dataclass(frozen=True)
class Issue:
    path: str
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message} [{self.code}]"


class ValidationError(ValueError):
    """One or more invariants failed. ``issues`` lists all of them."""

    code = "VALIDATION"

    def __init__(self, issues: Sequence[Issue] | str, path: str = ""):
        if isinstance(issues, str):
            issues = [Issue(path, self.code, issues)]
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))


class ParseError(ValueError):
    """Input text could not be parsed; carries file and line context."""

    def __init__(self, message: str, source: str = "", line: int | None = None):
        self.source = source
        self.line = line
        where = source + (f":{line}" if line is not None else "")
        super().__init__(f"{where}: {message}" if where else message)


class NegativeCount(ValidationError):
    code = "NEGATIVE_COUNT"


class CasesExceedPopulation(ValidationError):
    code = "CASES_EXCEED_POPULATION"


class StrataSumMismatch(ValidationError):
    code = "STRATA_SUM_MISMATCH"


class CrossTableConflict(ValidationError):
    code = "CROSS_TABLE_CONFLICT"


_ERROR_CLASSES = {
    cls.code: cls
    for cls in (NegativeCount, CasesExceedPopulation, StrataSumMismatch, CrossTableConflict)
}


def raise_issues(issues: Sequence[Issue]) -> None:
    """Raise the most specific error class that covers every issue."""
    if not issues:
        return
    codes = {i.code for i in issues}
    cls = _ERROR_CLASSES.get(codes.pop(), ValidationError) if len(codes) == 1 else ValidationError
    raise cls(issues)


@dataclass(frozen=True)
class GroupCount:
    name: str
    population: int
    cases: int

    def rate(self, scale: float = 10_000):
        from .rates import crude_rate

        return crude_rate(self.cases, self.population, scale)


@dataclass(frozen=True)
class Stratum:
    label: str
    proportion: float
    count: int | None = None


@dataclass(frozen=True)
class CohortSummary:
    groups: tuple[GroupCount, ...]
    strata_by_group: Mapping[str, tuple[Stratum, ...]] = field(default_factory=dict)
    # Populations restated by a second source table (group name or "total").
    stated_populations: Mapping[str, int] = field(default_factory=dict)

    @property
    def total(self) -> GroupCount:
        return GroupCount(
            TOTAL_KEY,
            sum(g.population for g in self.groups),
            sum(g.cases for g in self.groups),
        )

    def group(self, name: str) -> GroupCount:
        if name == TOTAL_KEY:
            return self.total
        for g in self.groups:
            if g.name == name:
                return g
        raise KeyError(name)


@dataclass(frozen=True)
class AnnualRate:
    year: int
    rate: float
    scale: float = 100_000


@dataclass(frozen=True)
class BenchmarkBaseline:
    annual: tuple[AnnualRate, ...]
    demographic: tuple[Stratum, ...] = ()
    reference_population: int | None = None
    name: str = ""


@dataclass(frozen=True)
class IndividualRecord:
    id: object
    treated: bool
    covariates: tuple[float, ...]
    outcome: bool | None = None


def _is_count(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def normalize_strata(
    strata: Sequence[Stratum], path: str, population: int | None = None
) -> tuple[tuple[Stratum, ...], list[Issue]]:
    """Convert percent-scale proportions to fractions and check they sum to one.

    Any proportion above 1 marks the whole stratification as percent scale.
    """
    issues: list[Issue] = []
    strata = tuple(strata)
    if not strata:
        return strata, [Issue(path, "EMPTY_STRATA", "stratification has no strata")]
    props = [float(s.proportion) for s in strata]
    for i, p in enumerate(props):
        if not math.isfinite(p) or p < 0:
            issues.append(Issue(f"{path}[{i}].proportion", "PROPORTION_RANGE",
                                f"proportion {p!r} is negative or not finite"))
    if issues:
        return strata, issues
    divisor = 100.0 if any(p > 1 for p in props) else 1.0
    props = [p / divisor for p in props]
    for i, p in enumerate(props):
        if p > 1:
            issues.append(Issue(f"{path}[{i}].proportion", "PROPORTION_RANGE",
                                f"proportion {p * divisor!r} exceeds 100%"))
    total = math.fsum(props)
    if abs(total - 1.0) > STRATA_TOLERANCE:
        issues.append(Issue(path, StrataSumMismatch.code,
                            f"proportions sum to {total * divisor:.10g}, expected {divisor:g}"))
    counts = [s.count for s in strata]
    if all(c is not None for c in counts):
        for i, c in enumerate(counts):
            if not _is_count(c) or c < 0:
                issues.append(Issue(f"{path}[{i}].count", NegativeCount.code,
                                    f"count {c!r} is not a non-negative integer"))
        if population is not None and not issues and sum(counts) != population:
            issues.append(Issue(path, StrataSumMismatch.code,
                                f"stratum counts sum to {sum(counts)}, group population is {population}"))
    if issues:
        return strata, issues
    normalized = tuple(replace(s, proportion=p) for s, p in zip(strata, props))
    return normalized, issues


def validate_cohort(raw: CohortSummary) -> CohortSummary:
    """Return a normalized copy of ``raw`` or raise naming every broken invariant."""
    issues: list[Issue] = []
    groups = tuple(raw.groups)
    if not groups:
        issues.append(Issue("groups", "EMPTY_GROUPS", "cohort has no groups"))
    seen: set[str] = set()
    for i, g in enumerate(groups):
        path = f"groups[{i}]"
        if g.name in seen or g.name == TOTAL_KEY:
            issues.append(Issue(f"{path}.name", "DUPLICATE_GROUP",
                                f"group name {g.name!r} is duplicated or reserved"))
        seen.add(g.name)
        ok = True
        for attr in ("population", "cases"):
            v = getattr(g, attr)
            if not _is_count(v) or v < 0:
                issues.append(Issue(f"{path}.{attr}", NegativeCount.code,
                                    f"{attr} {v!r} is not a non-negative integer"))
                ok = False
        if ok and g.cases > g.population:
            issues.append(Issue(f"{path}.cases", CasesExceedPopulation.code,
                                f"cases {g.cases} exceed population {g.population}"))

    summary = CohortSummary(groups, dict(raw.strata_by_group), dict(raw.stated_populations))
    known = seen | {TOTAL_KEY}

    strata_by_group: dict[str, tuple[Stratum, ...]] = {}
    for name, strata in raw.strata_by_group.items():
        path = f"strata.{name}"
        if name not in known:
            issues.append(Issue(path, "UNKNOWN_GROUP", f"strata given for unknown group {name!r}"))
            continue
        population = summary.group(name).population if not issues else None
        normalized, found = normalize_strata(strata, path, population)
        issues.extend(found)
        strata_by_group[name] = normalized

    for name, stated in raw.stated_populations.items():
        path = f"strata.{name}.population"
        if name not in known:
            issues.append(Issue(path, "UNKNOWN_GROUP", f"population stated for unknown group {name!r}"))
            continue
        actual = summary.group(name).population
        if stated != actual:
            issues.append(Issue(path, CrossTableConflict.code,
                                f"population {stated} conflicts with group count {actual}"))

    raise_issues(issues)
    return CohortSummary(groups, strata_by_group, dict(raw.stated_populations))


def validate_benchmark(raw: BenchmarkBaseline) -> BenchmarkBaseline:
    issues: list[Issue] = []
    years = set()
    for i, a in enumerate(raw.annual):
        if not math.isfinite(a.rate) or a.rate < 0:
            issues.append(Issue(f"annual[{i}].rate", "NEGATIVE_RATE", f"rate {a.rate!r} must be >= 0"))
        if not a.scale > 0:
            issues.append(Issue(f"annual[{i}].scale", "INVALID_SCALE", f"scale {a.scale!r} must be > 0"))
        if a.year in years:
            issues.append(Issue(f"annual[{i}].year", "DUPLICATE_YEAR", f"year {a.year} listed twice"))
        years.add(a.year)
    demographic = tuple(raw.demographic)
    if demographic:
        demographic, found = normalize_strata(demographic, "demographic")
        issues.extend(found)
    ref = raw.reference_population
    if ref is not None and (not _is_count(ref) or ref <= 0):
        issues.append(Issue("reference_population", NegativeCount.code,
                            f"reference population {ref!r} must be a positive integer"))
    raise_issues(issues)
    return replace(raw, annual=tuple(raw.annual), demographic=demographic)


def validate_records(records: Iterable[IndividualRecord]) -> list[IndividualRecord]:
    records = list(records)
    issues: list[Issue] = []
    ids: set = set()
    width = len(records[0].covariates) if records else 0
    for i, r in enumerate(records):
        if r.id in ids:
            issues.append(Issue(f"records[{i}].id", "DUPLICATE_ID", f"id {r.id!r} repeats"))
        ids.add(r.id)
        if len(r.covariates) != width:
            issues.append(Issue(f"records[{i}].covariates", "COVARIATE_LENGTH",
                                f"expected {width} covariates, got {len(r.covariates)}"))
    raise_issues(issues)
    return records
