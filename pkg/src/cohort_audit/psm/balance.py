"""Standardized mean differences before and after matching."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..domain import IndividualRecord
from .matching import MatchedCohort
from .propensity import PropensityModel


class UnknownId(KeyError):
    pass


@dataclass(frozen=True)
class BalanceRow:
    name: str
    smd_before: float
    smd_after: float
    # True when a group has zero variance on both sides but the means differ
    flag_before: bool = False
    flag_after: bool = False


@dataclass(frozen=True)
class BalanceReport:
    rows: tuple[BalanceRow, ...]

    def max_abs_after(self) -> float:
        return max((abs(r.smd_after) for r in self.rows), default=0.0)


def smd(treated: np.ndarray, control: np.ndarray) -> tuple[float, bool]:
    """(mean_t - mean_c) / sqrt((var_t + var_c) / 2) with sample variances.

    Returns ``(value, flagged)``. Equal means with zero spread give 0; unequal
    means with zero spread give a signed infinity and ``flagged=True``.
    """
    treated = np.asarray(treated, dtype=float)
    control = np.asarray(control, dtype=float)
    if treated.size == 0 or control.size == 0:
        return math.nan, True
    diff = float(treated.mean() - control.mean())
    var_t = float(treated.var(ddof=1)) if treated.size > 1 else 0.0
    var_c = float(control.var(ddof=1)) if control.size > 1 else 0.0
    pooled = math.sqrt((var_t + var_c) / 2.0)
    if pooled == 0.0:
        if diff == 0.0:
            return 0.0, False
        return math.copysign(math.inf, diff), True
    return diff / pooled, False


def balance(data: Sequence[IndividualRecord], model: PropensityModel | None,
            cohort: MatchedCohort, names: Sequence[str] | None = None) -> BalanceReport:
    """SMD per covariate (and for the linear propensity score when ``model`` is given)."""
    by_id = {r.id: r for r in data}
    matched = cohort.matched_ids()
    unknown = [i for i in matched if i not in by_id]
    if unknown:
        raise UnknownId(f"matched ids not in data: {unknown[:5]}")
    n_cov = len(data[0].covariates) if data else 0
    names = list(names) if names is not None else [f"x{j}" for j in range(n_cov)]
    X_all = np.array([r.covariates for r in data], dtype=float).reshape(len(data), n_cov)
    z_all = np.array([r.treated for r in data], dtype=bool)
    index = {r.id: i for i, r in enumerate(data)}
    # Count reused partners once per use so the after-SMD reflects the analysed cohort.
    rows_after = [index[b] for b in cohort.matched_base] + [index[p] for p in cohort.partners]
    X_after, z_after = X_all[rows_after], z_all[rows_after]
    columns = [(name, X_all[:, j], X_after[:, j]) for j, name in enumerate(names)]
    if model is not None:
        lp = model.linear_predictor(X_all)
        columns.append(("propensity_logit", lp, lp[rows_after]))
    rows = []
    for name, before, after in columns:
        b, fb = smd(before[z_all], before[~z_all])
        a, fa = smd(after[z_after], after[~z_after])
        rows.append(BalanceRow(name, b, a, fb, fa))
    return BalanceReport(tuple(rows))
