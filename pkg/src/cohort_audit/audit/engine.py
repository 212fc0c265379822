"""Compose rates, benchmark deviation, demographic fit and size signature into one report."""

from __future__ import annotations

from typing import Mapping, Sequence

from ..domain import TOTAL_KEY, BenchmarkBaseline, CohortSummary, Stratum
from ..gof import GofInput, GofResult, chi_squared_gof, format_p
from ..psm.signature import detect_ratio_signature
from ..rates import Rate, baseline_stats, crude_rate, deviation, implied_population, project_cases
from ..rounding import round_count, round_half_away
from ..screening import (
    AuditConfig,
    external_validity_flag,
    ratio_signature_flag,
    structural_bias_flag,
    verdict,
)
from .report import (
    AnnualEntry,
    AuditReport,
    BaselineEntry,
    DeviationEntry,
    GofEntry,
    Note,
    ProjectionEntry,
    RateEntry,
    ReportedProjectionCheck,
    SignatureEntry,
    StratumEntry,
)

# Reported projections whose implied populations differ by more than this are noted.
POPULATION_AGREEMENT = 5e-4


def _counts(strata: Sequence[Stratum], population: int) -> list[int]:
    if all(s.count is not None for s in strata):
        return [int(s.count) for s in strata]
    return [round_count(s.proportion * population) for s in strata]


def _observed_strata(cohort: CohortSummary):
    """(source, labels, proportions, counts) for the cohort-wide age structure, or None."""
    if TOTAL_KEY in cohort.strata_by_group:
        strata = cohort.strata_by_group[TOTAL_KEY]
        counts = _counts(strata, cohort.total.population)
        return TOTAL_KEY, [s.label for s in strata], [s.proportion for s in strata], counts
    per_group = [cohort.strata_by_group.get(g.name) for g in cohort.groups]
    if not per_group or any(s is None for s in per_group):
        return None
    labels = [s.label for s in per_group[0]]
    if any([s.label for s in strata] != labels for strata in per_group):
        return None
    counts = [0] * len(labels)
    for g, strata in zip(cohort.groups, per_group):
        for i, c in enumerate(_counts(strata, g.population)):
            counts[i] += c
    total = sum(counts)
    return "sum of groups", labels, [c / total for c in counts], counts


def _gof(cohort: CohortSummary, benchmark: BenchmarkBaseline,
         notes: list[Note]) -> tuple[GofEntry, GofResult] | tuple[None, None]:
    if not benchmark.demographic:
        notes.append(Note("GOF_SKIPPED", "benchmark has no demographic proportions"))
        return None, None
    observed = _observed_strata(cohort)
    if observed is None:
        notes.append(Note("GOF_SKIPPED", "cohort has no complete age stratification"))
        return None, None
    source, labels, props, counts = observed
    expected = {s.label: s.proportion for s in benchmark.demographic}
    if sorted(labels) != sorted(expected):
        notes.append(Note("GOF_SKIPPED", f"stratum labels {labels} do not match benchmark {sorted(expected)}"))
        return None, None
    exp_props = [expected[l] for l in labels]
    result = chi_squared_gof(GofInput(tuple(counts), tuple(exp_props)))
    if source == TOTAL_KEY and sum(counts) != cohort.total.population:
        notes.append(Note("GOF_ROUNDING", f"counts rounded from proportions sum to {sum(counts):,}, "
                                          f"cohort total is {cohort.total.population:,}"))
    strata = tuple(StratumEntry(l, p, c, q, e)
                   for l, p, c, q, e in zip(labels, props, counts, exp_props, result.expected))
    entry = GofEntry(source, strata, sum(counts), result.statistic, result.df, result.p_value,
                     result.p_floor_hit, format_p(result.p_value, result.p_floor_hit))
    return entry, result


def _check_reported(reported: Mapping, rates: Sequence[RateEntry], dev: DeviationEntry | None,
                    gof: GofEntry | None, notes: list[Note]) -> None:
    by_group = {r.group: r for r in rates}
    for group, value in (reported.get("rates") or {}).items():
        entry = by_group.get(group)
        if entry is None:
            notes.append(Note("REPORTED_UNKNOWN_GROUP", f"reported rate for unknown group {group!r}"))
            continue
        shown = round_half_away(entry.value, 2)
        if shown != round_half_away(float(value), 2):
            notes.append(Note("REPORTED_RATE_MISMATCH",
                              f"{group}: reported {value}, recomputed {entry.value:.4f} ({shown:.2f} at 2 dp)"))
    if dev is not None:
        for key, computed in (("deviation_percent", dev.percent), ("deviation_absolute", dev.absolute)):
            if key in reported and round_half_away(computed, 2) != round_half_away(float(reported[key]), 2):
                notes.append(Note("REPORTED_DEVIATION_MISMATCH",
                                  f"{key}: reported {reported[key]}, recomputed {computed:.4f} "
                                  f"from unrounded rates"))
    if gof is not None and "chi_squared" in reported:
        stated = float(reported["chi_squared"])
        rel = (gof.statistic - stated) / stated
        if abs(rel) > 1e-3:
            notes.append(Note("REPORTED_CHI_SQUARED_MISMATCH",
                              f"reported {stated:,.0f}, recomputed {gof.statistic:,.2f} ({100 * rel:+.2f}%) "
                              f"from the published rounded proportions"))


def _check_projections(reported: Mapping, stated: int | None, scale: float,
                       notes: list[Note]) -> tuple[ReportedProjectionCheck, ...]:
    items = reported.get("projections") or []
    stated = reported.get("projection_population", stated)
    if not items or stated is None:
        return ()
    checks = []
    for item in items:
        rate = Rate(float(item["rate"]), float(item.get("per", scale)))
        cases = float(item["cases"])
        projected = project_cases(rate, int(stated))
        checks.append(ReportedProjectionCheck(rate.value, cases, implied_population(rate, cases),
                                              int(stated), projected, (cases - projected) / projected))
    pops = [c.implied_population for c in checks] + [float(stated)]
    spread = (max(pops) - min(pops)) / float(stated)
    if spread > POPULATION_AGREEMENT:
        implied = ", ".join(f"{c.implied_population:,.0f}" for c in checks)
        notes.append(Note("PROJECTION_POPULATION_INCONSISTENT",
                          f"reported projections imply populations {implied}, but {int(stated):,} is stated"))
    return tuple(checks)


def run_audit(cohort: CohortSummary, benchmark: BenchmarkBaseline, config: AuditConfig | None = None,
              reported: Mapping | None = None, study: str = "",
              extra_notes: Sequence[str] = ()) -> AuditReport:
    config = config or AuditConfig()
    reported = reported or {}
    scale = config.rate_scale
    notes = [Note("SOURCE_NOTE", n) for n in extra_notes]

    rates = [RateEntry(g.name, g.cases, g.population, scale, crude_rate(g.cases, g.population, scale).value)
             for g in cohort.groups if g.population > 0]
    total = cohort.total
    total_rate = crude_rate(total.cases, total.population, scale)
    rates.append(RateEntry(TOTAL_KEY, total.cases, total.population, scale, total_rate.value))

    baseline_entry = dev_entry = None
    projections = []
    if benchmark.annual:
        stats = baseline_stats(benchmark.annual, scale)
        baseline_entry = BaselineEntry(
            tuple(AnnualEntry(a.year, a.rate, a.scale, a.rate * scale / a.scale) for a in benchmark.annual),
            stats.mean.value, stats.sd.value, stats.n_years, stats.ddof, scale)
        dev = deviation(total_rate, stats)
        dev_entry = DeviationEntry(dev.observed, dev.baseline_mean, dev.baseline_sd, dev.absolute,
                                   dev.fraction, dev.percent, dev.sd_multiples, dev.scale)
        if benchmark.reference_population:
            ref = benchmark.reference_population
            projections = [
                ProjectionEntry("cohort rate", total_rate.value, scale, ref, project_cases(total_rate, ref)),
                ProjectionEntry("benchmark mean", stats.mean.value, scale, ref, project_cases(stats.mean, ref)),
            ]
    else:
        notes.append(Note("DEVIATION_SKIPPED", "benchmark has no annual rates"))

    gof, gof_result = _gof(cohort, benchmark, notes)

    signature = None
    if len(cohort.groups) >= 2:
        base = min(cohort.groups, key=lambda g: g.population)
        if base.population > 0:
            sig = detect_ratio_signature(total.population, base.population)
            signature = SignatureEntry(sig.total, sig.base, base.name, sig.k, sig.exact)

    _check_reported(reported, rates, dev_entry, gof, notes)
    reported_projections = _check_projections(reported, benchmark.reference_population, scale, notes)

    flags = []
    if dev_entry is not None:
        flags.append(external_validity_flag(dev, config))
    if gof_result is not None:
        flags.append(structural_bias_flag(gof_result, config))
    if signature is not None and signature.exact:
        flags.append(ratio_signature_flag(sig))
    flags = tuple(f for f in flags if f is not None)

    return AuditReport(
        study=study,
        config=config,
        rates=tuple(rates),
        baseline=baseline_entry,
        deviation=dev_entry,
        projections=tuple(projections),
        reported_projections=reported_projections,
        gof=gof,
        signature=signature,
        flags=flags,
        notes=tuple(notes),
        verdict=verdict(flags),
    )
