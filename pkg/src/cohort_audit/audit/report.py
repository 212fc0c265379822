"""Audit report structure, machine (JSON) serialization and human rendering.

Field names are frozen by ``data/audit_report.schema.json``; bump
``SCHEMA_VERSION`` on any change to them.
"""

from __future__ import annotations

import dataclasses
import json
import types
import typing
from dataclasses import dataclass

from ..rounding import round_half_away
from ..screening import AuditConfig, Flag

SCHEMA_VERSION = "1.0"
SCHEMA_ID = "cohort-audit/report"


@dataclass(frozen=True)
class RateEntry:
    group: str
    cases: int
    population: int
    scale: float
    value: float


@dataclass(frozen=True)
class AnnualEntry:
    year: int
    rate: float
    scale: float
    value: float  # rate at the report scale


@dataclass(frozen=True)
class BaselineEntry:
    annual: tuple[AnnualEntry, ...]
    mean: float
    sd: float
    n_years: int
    ddof: int
    scale: float


@dataclass(frozen=True)
class DeviationEntry:
    observed: float
    baseline_mean: float
    baseline_sd: float
    absolute: float
    fraction: float
    percent: float
    sd_multiples: float | None
    scale: float


@dataclass(frozen=True)
class ProjectionEntry:
    label: str
    rate: float
    scale: float
    population: int
    cases: float


@dataclass(frozen=True)
class ReportedProjectionCheck:
    rate: float
    reported_cases: float
    implied_population: float
    stated_population: int
    projected_cases: float
    relative_difference: float


@dataclass(frozen=True)
class StratumEntry:
    label: str
    observed_proportion: float
    observed_count: int
    expected_proportion: float
    expected_count: float


@dataclass(frozen=True)
class GofEntry:
    source: str  # which stratification supplied the observed counts
    strata: tuple[StratumEntry, ...]
    total: int
    statistic: float
    df: int
    p_value: float
    p_floor_hit: bool
    p_display: str


@dataclass(frozen=True)
class SignatureEntry:
    total: int
    base: int
    base_group: str
    k: int | None
    exact: bool


@dataclass(frozen=True)
class Note:
    code: str
    message: str


@dataclass(frozen=True)
class AuditReport:
    study: str
    config: AuditConfig
    rates: tuple[RateEntry, ...]
    baseline: BaselineEntry | None
    deviation: DeviationEntry | None
    projections: tuple[ProjectionEntry, ...]
    reported_projections: tuple[ReportedProjectionCheck, ...]
    gof: GofEntry | None
    signature: SignatureEntry | None
    flags: tuple[Flag, ...]
    notes: tuple[Note, ...]
    verdict: str
    schema: str = SCHEMA_ID
    schema_version: str = SCHEMA_VERSION

    def rate(self, group: str) -> RateEntry:
        for r in self.rates:
            if r.group == group:
                return r
        raise KeyError(group)

    def flag_codes(self) -> list[str]:
        return [f.code for f in self.flags]

    def to_dict(self) -> dict:
        return to_jsonable(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "AuditReport":
        return from_jsonable(cls, doc)


# -- generic dataclass <-> JSON-able conversion ------------------------------------------

def to_jsonable(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    return obj


def from_jsonable(tp, data):
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        args = typing.get_args(tp)
        if data is None and type(None) in args:
            return None
        non_none = [a for a in args if a is not type(None)]
        if len(non_none) == 1:
            return from_jsonable(non_none[0], data)
        for a in non_none:  # scalar unions such as float | int
            if isinstance(a, type) and isinstance(data, a):
                return data
        return data
    if origin is tuple:
        (inner, *_rest) = typing.get_args(tp)
        return tuple(from_jsonable(inner, v) for v in data)
    if dataclasses.is_dataclass(tp):
        hints = typing.get_type_hints(tp)
        kwargs = {f.name: from_jsonable(hints[f.name], data[f.name])
                  for f in dataclasses.fields(tp) if f.name in data}
        return tp(**kwargs)
    if tp is float and isinstance(data, int) and not isinstance(data, bool):
        return float(data)
    return data


def dumps_machine(obj) -> str:
    """Stable JSON: fixed field order, two-space indent, trailing newline."""
    return json.dumps(to_jsonable(obj), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def parse_machine(text: str) -> AuditReport:
    doc = json.loads(text)
    if doc.get("schema") != SCHEMA_ID:
        raise ValueError(f"not an audit report document: schema={doc.get('schema')!r}")
    return AuditReport.from_dict(doc)


# -- human rendering ------------------------------------------------------------------

def _n(x: float, places: int = 2) -> str:
    return f"{round_half_away(x, places):,.{places}f}"


def _table(rows: list[tuple[str, ...]]) -> list[str]:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    out = []
    for j, r in enumerate(rows):
        out.append(" | ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        if j == 0:
            out.append("-+-".join("-" * w for w in widths))
    return out


def render_human(report: AuditReport) -> str:
    scale = f"{report.config.rate_scale:,.0f}"
    lines = [f"External validity audit: {report.study}" if report.study else "External validity audit",
             f"Verdict: {'PASS' if report.verdict == 'pass' else 'VIOLATIONS'}", ""]

    rows = [("Metric", "Cohort observed", "Benchmark expected", "Inconsistency")]
    dev = report.deviation
    if dev is not None:
        sd = "n/a" if dev.sd_multiples is None else f"{dev.sd_multiples:+.2f} SD"
        rows.append((f"Crude incidence rate (per {scale})", _n(dev.observed), _n(dev.baseline_mean),
                     f"{_n(dev.percent)}% deviation ({_n(dev.absolute)} per {scale}; {sd})"))
    gof = report.gof
    if gof is not None:
        for s in gof.strata:
            gap = 100 * (s.observed_proportion - s.expected_proportion)
            if round_half_away(gap, 2) == 0:
                gap_text = "none"
            else:
                gap_text = f"{_n(abs(gap))} pp {'under' if gap < 0 else 'over'}-representation"
            rows.append((f"Share aged {s.label}", f"{_n(100 * s.observed_proportion)}%",
                         f"{_n(100 * s.expected_proportion)}%", gap_text))
        rows.append((f"Chi-squared (df {gof.df})", _n(gof.statistic), "N/A", f"p {gof.p_display}"))
    if len(rows) > 1:
        lines += _table(rows) + [""]

    lines.append("Rates (cases / population x scale):")
    for r in report.rates:
        lines.append(f"  {r.group}: {r.cases:,} / {r.population:,} x {r.scale:,.0f} = {_n(r.value)}")
    if report.baseline is not None:
        b = report.baseline
        vals = ", ".join(_n(a.value) for a in b.annual)
        kind = "population" if b.ddof == 0 else "sample"
        lines.append(f"Benchmark: mean({vals}) = {_n(b.mean)}; {kind} SD = {_n(b.sd)} "
                     f"over {b.n_years} year(s), per {b.scale:,.0f}")
    if dev is not None:
        lines.append(f"Deviation: {_n(dev.observed, 4)} - {_n(dev.baseline_mean, 4)} = {_n(dev.absolute, 4)}; "
                     f"{_n(dev.absolute, 4)} / {_n(dev.baseline_mean, 4)} x 100 = {_n(dev.percent)}%")
    for p in report.projections:
        lines.append(f"Projection ({p.label}): {_n(p.rate)} per {p.scale:,.0f} x {p.population:,} "
                     f"= {p.cases:,.0f} cases")
    for c in report.reported_projections:
        lines.append(f"Reported projection {c.reported_cases:,.0f} at {_n(c.rate)}: implies population "
                     f"{c.implied_population:,.0f} (stated {c.stated_population:,}; "
                     f"{100 * c.relative_difference:+.3f}% vs projection {c.projected_cases:,.0f})")
    if gof is not None:
        obs = ", ".join(f"{s.label}: {s.observed_count:,}" for s in gof.strata)
        exp = ", ".join(f"{s.label}: {s.expected_count:,.1f}" for s in gof.strata)
        lines.append(f"Goodness of fit ({gof.source}): observed [{obs}] vs expected [{exp}], "
                     f"total {gof.total:,}")
    if report.signature is not None:
        s = report.signature
        rel = f"= {s.k + 1} x" if s.exact else "is not an integer multiple of"
        lines.append(f"Size signature: total {s.total:,} {rel} {s.base_group} {s.base:,}")

    lines += ["", "Flags:"]
    if not report.flags:
        lines.append("  none")
    for f in report.flags:
        lines.append(f"  [{f.severity.upper()}] {f.code}: {f.message} "
                     f"({f.metric} = {f.value!r}, threshold {f.threshold!r})")
    if report.notes:
        lines += ["", "Notes:"]
        lines += [f"  - {n.code}: {n.message}" for n in report.notes]
    return "\n".join(lines) + "\n"


def render_report(report: AuditReport, format: str = "human") -> str:
    if format in ("machine", "json"):
        return dumps_machine(report)
    if format == "human":
        return render_human(report)
    raise ValueError(f"unknown format {format!r}")
