"""Read study and benchmark documents (JSON) into validated domain objects.

A study document may carry ``cohort``, ``benchmark`` and ``reported``
sections, so one file can hold a complete fixture.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..domain import (
    AnnualRate,
    BenchmarkBaseline,
    CohortSummary,
    GroupCount,
    Issue,
    ParseError,
    Stratum,
    ValidationError,
    validate_benchmark,
    validate_cohort,
)


@dataclass(frozen=True)
class Study:
    name: str
    cohort: CohortSummary
    benchmark: BenchmarkBaseline | None = None
    reported: dict = field(default_factory=dict)
    notes: tuple[str, ...] = ()


def read_document(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", str(path)) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg} (column {exc.colno})", str(path), exc.lineno) from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object", str(path), 1)
    return doc


def _rethrow(exc: ValidationError, source: str, prefix: str) -> ValidationError:
    issues = [Issue(f"{source}#{prefix}{i.path}", i.code, i.message) for i in exc.issues]
    return type(exc)(issues)


def _require(obj: Any, key: str, path: str, source: str, kind=None):
    if not isinstance(obj, dict) or key not in obj:
        raise ValidationError([Issue(f"{source}#{path}.{key}".replace("#.", "#"), "MISSING_FIELD",
                                     f"required field {key!r} is missing")])
    value = obj[key]
    if kind is not None and not isinstance(value, kind):
        raise ValidationError([Issue(f"{source}#{path}.{key}".replace("#.", "#"), "WRONG_TYPE",
                                     f"expected {kind.__name__ if isinstance(kind, type) else kind}, "
                                     f"got {type(value).__name__}")])
    return value


def _strata(items: list, path: str, source: str) -> tuple[Stratum, ...]:
    if not isinstance(items, list):
        raise ValidationError([Issue(f"{source}#{path}", "WRONG_TYPE", "strata must be a list")])
    out = []
    for i, s in enumerate(items):
        label = _require(s, "label", f"{path}[{i}]", source, str)
        proportion = _require(s, "proportion", f"{path}[{i}]", source, (int, float))
        out.append(Stratum(label, float(proportion), s.get("count")))
    return tuple(out)


def parse_cohort(section: dict, source: str = "<cohort>") -> CohortSummary:
    groups_raw = _require(section, "groups", "cohort", source, list)
    groups = []
    for i, g in enumerate(groups_raw):
        path = f"cohort.groups[{i}]"
        groups.append(GroupCount(
            str(_require(g, "name", path, source)),
            _require(g, "population", path, source),
            _require(g, "cases", path, source),
        ))
    strata_by_group = {}
    stated = {}
    for name, entry in (section.get("strata") or {}).items():
        path = f"cohort.strata.{name}"
        if isinstance(entry, list):
            strata_by_group[name] = _strata(entry, path, source)
            continue
        strata_by_group[name] = _strata(_require(entry, "strata", path, source), f"{path}.strata", source)
        if "population" in entry:
            stated[name] = entry["population"]
    try:
        return validate_cohort(CohortSummary(tuple(groups), strata_by_group, stated))
    except ValidationError as exc:
        raise _rethrow(exc, source, "cohort.") from None


def parse_benchmark(section: dict, source: str = "<benchmark>") -> BenchmarkBaseline:
    annual = []
    for i, a in enumerate(_require(section, "annual", "benchmark", source, list)):
        path = f"benchmark.annual[{i}]"
        annual.append(AnnualRate(
            int(_require(a, "year", path, source, int)),
            float(_require(a, "rate", path, source, (int, float))),
            float(a.get("per", 100_000)),
        ))
    demographic = _strata(section.get("demographic", []), "benchmark.demographic", source)
    try:
        return validate_benchmark(BenchmarkBaseline(
            tuple(annual), demographic, section.get("reference_population"), str(section.get("name", ""))))
    except ValidationError as exc:
        raise _rethrow(exc, source, "benchmark.") from None


def load_study(path) -> Study:
    doc = read_document(path)
    source = str(path)
    cohort = parse_cohort(_require(doc, "cohort", "", source, dict), source)
    benchmark = parse_benchmark(doc["benchmark"], source) if "benchmark" in doc else None
    return Study(str(doc.get("name", "")), cohort, benchmark,
                 dict(doc.get("reported") or {}), tuple(doc.get("notes") or ()))


def load_benchmark(path) -> BenchmarkBaseline:
    doc = read_document(path)
    return parse_benchmark(_require(doc, "benchmark", "", str(path), dict), str(path))


def load_inputs(cohort_path, benchmark_path=None) -> tuple[CohortSummary, BenchmarkBaseline]:
    """Load a cohort and its benchmark; the benchmark may live in the cohort file."""
    study = load_study_with_benchmark(cohort_path, benchmark_path)
    return study.cohort, study.benchmark


def load_study_with_benchmark(cohort_path, benchmark_path=None) -> Study:
    study = load_study(cohort_path)
    if benchmark_path is not None:
        benchmark = load_benchmark(benchmark_path)
    elif study.benchmark is not None:
        benchmark = study.benchmark
    else:
        raise ValidationError([Issue(f"{cohort_path}#benchmark", "MISSING_FIELD",
                                     "no benchmark given and none embedded in the study file")])
    return Study(study.name, study.cohort, benchmark, study.reported, study.notes)
