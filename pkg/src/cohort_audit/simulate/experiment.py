"""End-to-end run: population -> propensity -> 1:k matching -> rate and structure checks."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from ..gof import GofInput, GofResult, chi_squared_gof
from ..psm.matching import MatchedCohort, match_arrays
from ..psm.propensity import PropensityModel, fit_logistic
from ..psm.signature import RatioSignature, detect_ratio_signature
from ..rates import BaselineStats, DeviationResult, Rate, crude_rate, deviation
from ..screening import AuditConfig, Flag, external_validity_flag, structural_bias_flag, verdict
from .population import Population, SimConfig, generate_population


@dataclass(frozen=True)
class SimResult:
    config: SimConfig
    population_cr: Rate
    matched_cr: Rate
    matched_stratum_shares: tuple[float, ...]
    base_group_stratum_shares: tuple[float, ...]
    population_stratum_shares: tuple[float, ...]
    gof_vs_national: GofResult
    deviation_vs_population: DeviationResult
    model: PropensityModel
    n_population: int
    n_base: int
    n_matched_base: int
    n_unmatched_base: int
    matched_size: int
    matched_cases: int
    # crude rates inside the matched cohort: base members vs partners
    matched_base_cr: Rate
    matched_partner_cr: Rate
    signature: RatioSignature
    flags: tuple[Flag, ...]

    @property
    def verdict(self) -> str:
        return verdict(self.flags)


def _shares(counts) -> tuple[float, ...]:
    total = sum(counts)
    return tuple(c / total for c in counts) if total else tuple(0.0 for _ in counts)


def default_config(**overrides) -> SimConfig:
    """Bundled configuration calibrated to the published endpoints."""
    doc = json.loads(resources.files("cohort_audit.data").joinpath("default_simulation.json").read_text())
    doc = dict(doc["simulation"], **overrides)
    return SimConfig.from_dict(doc)


def match_population(pop: Population, config: SimConfig) -> tuple[PropensityModel, MatchedCohort]:
    X = pop.covariates()
    model = fit_logistic(X, pop.treated.astype(float))
    scores = model.predict(X)
    base_is_treated = config.base_group == "treated"
    is_base = pop.treated if base_is_treated else ~pop.treated
    cohort = match_arrays(pop.ids, scores, is_base, config.k, config.caliper,
                          base_is_treated=base_is_treated)
    return model, cohort


def run_paradox_experiment(config: SimConfig, audit: AuditConfig | None = None) -> SimResult:
    audit = audit or AuditConfig()
    pop = generate_population(config)
    model, cohort = match_population(pop, config)

    base_rows = np.asarray(cohort.matched_base, dtype=np.int64)
    partner_rows = np.asarray(cohort.partners, dtype=np.int64)
    # ids equal row positions in a generated population; partners count once per use
    rows = np.concatenate([base_rows, partner_rows])
    m = len(pop.labels)
    matched_counts = np.bincount(pop.stratum[rows], minlength=m).tolist()
    matched_size = int(rows.size)
    matched_cases = int(pop.outcome[rows].sum())
    if matched_size == 0:
        raise ValueError("matching produced an empty cohort")

    population_cr = crude_rate(int(pop.outcome.sum()), len(pop))
    matched_cr = crude_rate(matched_cases, matched_size)
    base_mask = pop.treated if cohort.base_is_treated else ~pop.treated

    gof = chi_squared_gof(GofInput(tuple(matched_counts), config.proportions))
    reference = BaselineStats(population_cr, Rate(0.0), 1)
    dev = deviation(matched_cr, reference)
    flags = tuple(f for f in (external_validity_flag(dev, audit), structural_bias_flag(gof, audit)) if f)

    return SimResult(
        config=config,
        population_cr=population_cr,
        matched_cr=matched_cr,
        matched_stratum_shares=_shares(matched_counts),
        base_group_stratum_shares=_shares(pop.stratum_counts(base_mask)),
        population_stratum_shares=_shares(pop.stratum_counts()),
        gof_vs_national=gof,
        deviation_vs_population=dev,
        model=model,
        n_population=len(pop),
        n_base=int(base_mask.sum()),
        n_matched_base=len(cohort.pairs),
        n_unmatched_base=len(cohort.unmatched_base),
        matched_size=matched_size,
        matched_cases=matched_cases,
        matched_base_cr=crude_rate(int(pop.outcome[base_rows].sum()), max(base_rows.size, 1)),
        matched_partner_cr=crude_rate(int(pop.outcome[partner_rows].sum()), max(partner_rows.size, 1)),
        signature=detect_ratio_signature(matched_size, max(len(cohort.pairs), 1)),
        flags=flags,
    )
