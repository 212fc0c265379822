"""Structured and human output for simulation runs."""

from __future__ import annotations

from ..gof import format_p
from ..simulate import SimResult
from .report import to_jsonable

SIM_SCHEMA_ID = "cohort-audit/simulation-report"
SIM_SCHEMA_VERSION = "1.0"


def simulation_to_dict(r: SimResult) -> dict:
    g, d = r.gof_vs_national, r.deviation_vs_population
    return {
        "schema": SIM_SCHEMA_ID,
        "schema_version": SIM_SCHEMA_VERSION,
        "config": r.config.to_dict(),
        "rng": {"algorithm": "splitmix64", "seed": r.config.seed},
        "population": {
            "size": r.n_population,
            "crude_rate": r.population_cr.value,
            "stratum_shares": list(r.population_stratum_shares),
        },
        "propensity_model": {
            "coefficients": list(r.model.coefficients),
            "converged": r.model.converged,
            "iterations": r.model.iterations,
        },
        "matching": {
            "k": r.config.k,
            "base_group": r.config.base_group,
            "base_size": r.n_base,
            "matched_base": r.n_matched_base,
            "unmatched_base": r.n_unmatched_base,
            "matched_size": r.matched_size,
            "base_group_stratum_shares": list(r.base_group_stratum_shares),
            "signature": to_jsonable(r.signature),
        },
        "matched": {
            "cases": r.matched_cases,
            "crude_rate": r.matched_cr.value,
            "base_crude_rate": r.matched_base_cr.value,
            "partner_crude_rate": r.matched_partner_cr.value,
            "stratum_shares": list(r.matched_stratum_shares),
        },
        "gof": {
            "observed": list(g.observed),
            "expected": list(g.expected),
            "expected_proportions": list(r.config.proportions),
            "statistic": g.statistic,
            "df": g.df,
            "p_value": g.p_value,
            "p_floor_hit": g.p_floor_hit,
        },
        "deviation": {
            "observed": d.observed,
            "baseline_mean": d.baseline_mean,
            "absolute": d.absolute,
            "fraction": d.fraction,
            "percent": d.percent,
        },
        "flags": [f.to_dict() for f in r.flags],
        "notes": list(r.config.notes),
        "verdict": r.verdict,
    }


def render_simulation(r: SimResult) -> str:
    c = r.config
    labels = c.labels
    pct = lambda shares: ", ".join(f"{l} {100 * s:.2f}%" for l, s in zip(labels, shares))
    g, d = r.gof_vs_national, r.deviation_vs_population
    lines = [
        f"Simulation: n = {r.n_population:,}, seed {c.seed} (splitmix64), sampling {c.sampling}",
        f"Verdict: {'PASS' if r.verdict == 'pass' else 'VIOLATIONS'}",
        "",
        f"Population: crude rate {r.population_cr.value:.2f} per 10,000; {pct(r.population_stratum_shares)}",
        f"Uptake by stratum: {', '.join(f'{l} {u:.3f}' for l, u in zip(labels, c.vaccination_uptake_by_stratum))}",
        f"Incidence per 10,000 by stratum: "
        f"{', '.join(f'{l} {x:.2f}' for l, x in zip(labels, c.incidence_per_10k_by_stratum))}",
        f"Base group ({c.base_group}): {r.n_base:,} individuals; {pct(r.base_group_stratum_shares)}",
        f"Matched 1:{c.k}: {r.n_matched_base:,} base + partners = {r.matched_size:,} "
        f"({r.n_unmatched_base:,} base unmatched)",
        f"Matched cohort: {pct(r.matched_stratum_shares)}",
        f"Matched crude rate: {r.matched_cases:,} / {r.matched_size:,} x 10,000 = {r.matched_cr.value:.2f} "
        f"(base {r.matched_base_cr.value:.2f}, partners {r.matched_partner_cr.value:.2f})",
        f"Deviation vs population: {d.absolute:+.2f} per 10,000 = {d.percent:+.2f}%",
        f"Goodness of fit vs population shares: chi-squared {g.statistic:,.2f} (df {g.df}), "
        f"p {format_p(g.p_value, g.p_floor_hit)}",
        "",
        "Flags:",
    ]
    lines += [f"  [{f.severity.upper()}] {f.code}: {f.message}" for f in r.flags] or ["  none"]
    if c.notes:
        lines += ["", "Notes:"] + [f"  - {n}" for n in c.notes]
    return "\n".join(lines) + "\n"
