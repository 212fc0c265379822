"""Screening thresholds and the flags they raise."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .gof import GofResult
from .psm.signature import RatioSignature
from .rates import DEFAULT_SCALE, DeviationResult

INFO, WARNING, VIOLATION = "info", "warning", "violation"
SEVERITY_RANK = {INFO: 0, WARNING: 1, VIOLATION: 2}

STROBE21 = "STROBE21_EXTERNAL_VALIDITY"
STROBE12 = "STROBE12_STRUCTURAL_BIAS"
RATIO_SIGNATURE = "PSM_RATIO_SIGNATURE"


@dataclass(frozen=True)
class AuditConfig:
    # These defaults are this tool's choice; no published cutoff exists.
    cr_deviation_sd_threshold: float = 2.0
    cr_deviation_pct_threshold: float = 0.10
    gof_alpha: float = 0.001
    rate_scale: float = DEFAULT_SCALE

    def __post_init__(self):
        if not self.cr_deviation_sd_threshold > 0:
            raise ValueError("cr_deviation_sd_threshold must be > 0")
        if not self.cr_deviation_pct_threshold > 0:
            raise ValueError("cr_deviation_pct_threshold must be > 0")
        if not 0 < self.gof_alpha < 0.5:
            raise ValueError("gof_alpha must lie in (0, 0.5)")
        if not self.rate_scale > 0:
            raise ValueError("rate_scale must be > 0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Flag:
    code: str
    severity: str
    metric: str
    value: float | int | None
    threshold: float | int | None
    message: str

    def to_dict(self) -> dict:
        return asdict(self)


def external_validity_flag(dev: DeviationResult, config: AuditConfig) -> Flag | None:
    """Violation when the rate gap exceeds the relative OR the SD-multiple threshold."""
    pct_hit = abs(dev.fraction) > config.cr_deviation_pct_threshold
    sd_hit = dev.sd_multiples is not None and abs(dev.sd_multiples) > config.cr_deviation_sd_threshold
    if not (pct_hit or sd_hit):
        return None
    parts = []
    if pct_hit:
        parts.append(f"|{dev.percent:+.2f}%| > {100 * config.cr_deviation_pct_threshold:g}%")
    if sd_hit:
        parts.append(f"|{dev.sd_multiples:+.2f} SD| > {config.cr_deviation_sd_threshold:g} SD")
    if pct_hit:
        metric, value, threshold = "deviation.fraction", dev.fraction, config.cr_deviation_pct_threshold
    else:
        metric, value, threshold = "deviation.sd_multiples", dev.sd_multiples, config.cr_deviation_sd_threshold
    return Flag(
        STROBE21, VIOLATION, metric, value, threshold,
        f"cohort rate {dev.observed:.4f} vs benchmark {dev.baseline_mean:.4f} per "
        f"{dev.scale:,.0f}: " + " and ".join(parts),
    )


def structural_bias_flag(gof: GofResult, config: AuditConfig) -> Flag | None:
    if not gof.p_value < config.gof_alpha:
        return None
    p_text = "below the double-precision floor" if gof.p_floor_hit else f"{gof.p_value:.3g}"
    return Flag(
        STROBE12, VIOLATION, "gof.p_value", gof.p_value, config.gof_alpha,
        f"demographic structure departs from benchmark: chi-squared {gof.statistic:.2f} "
        f"(df {gof.df}), p {p_text} < alpha {config.gof_alpha:g}",
    )


def ratio_signature_flag(sig: RatioSignature) -> Flag | None:
    if not sig.exact:
        return None
    return Flag(
        RATIO_SIGNATURE, INFO, "signature.k", sig.k, sig.k + 1,
        f"total {sig.total} = {sig.k + 1} x smallest group {sig.base}: "
        f"consistent with 1:{sig.k} matching from that group",
    )


def verdict(flags) -> str:
    worst = max((SEVERITY_RANK[f.severity] for f in flags), default=0)
    return "violations" if worst >= SEVERITY_RANK[VIOLATION] else "pass"
