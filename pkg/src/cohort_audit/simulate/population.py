"""Synthetic age-stratified populations with stratum-specific uptake and incidence."""

from __future__ import annotations

import json
import math
from collections.abc import Sequence as SequenceABC
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..domain import IndividualRecord
from ..rates import Rate
from ..rounding import round_count
from .rng import SplitMix64

SAMPLING_SCHEMES = ("exact", "bernoulli")
BASE_GROUPS = ("treated", "untreated")


class InvalidConfig(ValueError):
    pass


class SingularSystem(ArithmeticError):
    pass


@dataclass(frozen=True)
class SimConfig:
    population_size: int
    age_strata: tuple[tuple[str, float], ...]
    incidence_per_10k_by_stratum: tuple[float, ...]
    vaccination_uptake_by_stratum: tuple[float, ...]
    k: int = 4
    base_group: str = "untreated"
    seed: int = 2026
    # "exact": a random subset of exactly round(p * n) per stratum;
    # "bernoulli": independent draws with probability p.
    sampling: str = "exact"
    caliper: float | None = None
    notes: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        problems = []
        n_strata = len(self.age_strata)
        if not isinstance(self.population_size, int) or self.population_size < 1:
            problems.append("population_size must be a positive integer")
        if n_strata < 2:
            problems.append("need at least two age strata")
        props = [p for _, p in self.age_strata]
        if any(not 0 <= p <= 1 for p in props) or abs(math.fsum(props) - 1) > 1e-9:
            problems.append(f"stratum proportions must lie in [0, 1] and sum to 1, got {props}")
        for name, values in (("incidence_per_10k_by_stratum", self.incidence_per_10k_by_stratum),
                             ("vaccination_uptake_by_stratum", self.vaccination_uptake_by_stratum)):
            if len(values) != n_strata:
                problems.append(f"{name} needs {n_strata} values, got {len(values)}")
        if any(not 0 <= r <= 10_000 for r in self.incidence_per_10k_by_stratum):
            problems.append("incidence per 10,000 must lie in [0, 10000]")
        if any(not 0 <= u <= 1 for u in self.vaccination_uptake_by_stratum):
            problems.append("uptake fractions must lie in [0, 1]")
        if not isinstance(self.k, int) or self.k < 1:
            problems.append("k must be a positive integer")
        if self.base_group not in BASE_GROUPS:
            problems.append(f"base_group must be one of {BASE_GROUPS}")
        if self.sampling not in SAMPLING_SCHEMES:
            problems.append(f"sampling must be one of {SAMPLING_SCHEMES}")
        if not isinstance(self.seed, int) or self.seed < 0:
            problems.append("seed must be a non-negative integer")
        if problems:
            raise InvalidConfig("; ".join(problems))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.age_strata)

    @property
    def proportions(self) -> tuple[float, ...]:
        return tuple(p for _, p in self.age_strata)

    def to_dict(self) -> dict:
        return {
            "population_size": self.population_size,
            "age_strata": [{"label": l, "proportion": p} for l, p in self.age_strata],
            "incidence_per_10k_by_stratum": list(self.incidence_per_10k_by_stratum),
            "vaccination_uptake_by_stratum": list(self.vaccination_uptake_by_stratum),
            "k": self.k,
            "base_group": self.base_group,
            "seed": self.seed,
            "sampling": self.sampling,
            "caliper": self.caliper,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "SimConfig":
        """Build from a config document.

        ``incidence_per_10k_by_stratum`` may be replaced by a ``calibration``
        block (``population_cr``, ``matched_cr``, ``matched_shares``) that is
        solved with :func:`calibrate_rates`.
        """
        try:
            strata = tuple((str(s["label"]), float(s["proportion"])) for s in doc["age_strata"])
            props = [p for _, p in strata]
            notes: list[str] = []
            if "incidence_per_10k_by_stratum" in doc:
                incidence = tuple(float(r) for r in doc["incidence_per_10k_by_stratum"])
            elif "calibration" in doc:
                cal = doc["calibration"]
                incidence = calibrate_rates(
                    Rate(float(cal["population_cr"])), props,
                    Rate(float(cal["matched_cr"])), [float(q) for q in cal["matched_shares"]],
                )
                notes.append("stratum incidence back-solved from population and matched-cohort rates")
            else:
                raise InvalidConfig("config needs incidence_per_10k_by_stratum or calibration")
            caliper = doc.get("caliper")
            return cls(
                population_size=int(doc["population_size"]),
                age_strata=strata,
                incidence_per_10k_by_stratum=incidence,
                vaccination_uptake_by_stratum=tuple(float(u) for u in doc["vaccination_uptake_by_stratum"]),
                k=int(doc.get("k", 4)),
                base_group=str(doc.get("base_group", "untreated")),
                seed=int(doc.get("seed", 2026)),
                sampling=str(doc.get("sampling", "exact")),
                caliper=None if caliper is None else float(caliper),
                notes=tuple(notes) + tuple(doc.get("notes", ())),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidConfig(f"malformed simulation config: {exc!r}") from None


def load_sim_config(path) -> SimConfig:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        doc = json.load(fh)
    return SimConfig.from_dict(doc.get("simulation", doc))


def calibrate_rates(
    overall_cr: Rate,
    shares: Sequence[float],
    matched_cr: Rate | None = None,
    matched_shares: Sequence[float] | None = None,
    *,
    known: Mapping[int, float] | None = None,
) -> tuple[float, float]:
    """Per-10,000 stratum rates consistent with two crude rates (two strata).

    Solves ``sum(p_i r_i) = overall`` together with ``sum(q_i r_i) = matched``;
    alternatively fix one stratum rate through ``known={index: rate}``.
    """
    p = [float(s) for s in shares]
    if len(p) != 2:
        raise InvalidConfig("calibration supports exactly two strata")
    overall = overall_cr.to(10_000).value
    if known is not None:
        if len(known) != 1:
            raise InvalidConfig("fix exactly one stratum rate")
        (i, r_known), = known.items()
        j = 1 - i
        if p[j] == 0:
            raise SingularSystem("free stratum has zero share")
        rates = [0.0, 0.0]
        rates[i] = float(r_known)
        rates[j] = (overall - p[i] * r_known) / p[j]
    else:
        if matched_cr is None or matched_shares is None:
            raise InvalidConfig("need matched_cr and matched_shares, or known")
        q = [float(s) for s in matched_shares]
        if len(q) != 2:
            raise InvalidConfig("calibration supports exactly two strata")
        if q[0] + q[1] > 1.5:  # percent scale
            q = [v / 100 for v in q]
        target = matched_cr.to(10_000).value
        det = p[0] * q[1] - p[1] * q[0]
        if abs(det) < 1e-12:
            raise SingularSystem("population and matched shares are identical")
        rates = [
            (overall * q[1] - target * p[1]) / det,
            (p[0] * target - q[0] * overall) / det,
        ]
    if any(r < 0 for r in rates):
        raise InvalidConfig(f"calibration gives a negative stratum rate: {rates}")
    return rates[0], rates[1]


def apportion(total: int, proportions: Sequence[float]) -> list[int]:
    """Largest-remainder split of ``total``; remainder ties go to the earlier stratum."""
    raw = [p * total for p in proportions]
    counts = [math.floor(r) for r in raw]
    short = total - sum(counts)
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[:short]:
        counts[i] += 1
    return counts


class Population(SequenceABC):
    """Columnar population; indexing yields :class:`IndividualRecord`."""

    def __init__(self, ids: np.ndarray, stratum: np.ndarray, treated: np.ndarray,
                 outcome: np.ndarray, labels: Sequence[str]):
        self.ids = ids
        self.stratum = stratum
        self.treated = treated
        self.outcome = outcome
        self.labels = tuple(labels)

    def __len__(self) -> int:
        return int(self.ids.shape[0])

    def covariates(self) -> np.ndarray:
        """Dummy indicators for strata 1..m-1 (stratum 0 is the reference)."""
        m = len(self.labels)
        return (self.stratum[:, None] == np.arange(1, m)[None, :]).astype(float)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        x = [float(self.stratum[i] == s) for s in range(1, len(self.labels))]
        return IndividualRecord(int(self.ids[i]), bool(self.treated[i]),
                                tuple(float(v) for v in x), bool(self.outcome[i]))

    def stratum_counts(self, mask: np.ndarray | None = None) -> list[int]:
        s = self.stratum if mask is None else self.stratum[mask]
        return np.bincount(s, minlength=len(self.labels)).tolist()

    def fingerprint(self) -> bytes:
        return b"".join(a.astype("<i8").tobytes() for a in (self.ids, self.stratum, self.treated, self.outcome))


def _assign(rng: SplitMix64, stratum: np.ndarray, probs: Sequence[float], scheme: str) -> np.ndarray:
    u = rng.uniforms(stratum.shape[0])
    if scheme == "bernoulli":
        return u < np.asarray(probs)[stratum]
    out = np.zeros(stratum.shape[0], dtype=bool)
    for s, p in enumerate(probs):
        members = np.flatnonzero(stratum == s)
        m = round_count(p * members.size)
        # the m members with the smallest uniforms; stable sort breaks ties by position
        chosen = members[np.argsort(u[members], kind="stable")[:m]]
        out[chosen] = True
    return out


def generate_population(config: SimConfig) -> Population:
    """Deterministic given ``config.seed``.

    Stratum sizes are apportioned, not sampled. Treatment uses the first n
    uniforms of the stream and outcomes the next n.
    """
    n = config.population_size
    sizes = apportion(n, config.proportions)
    stratum = np.repeat(np.arange(len(sizes)), sizes)
    rng = SplitMix64(config.seed)
    treated = _assign(rng, stratum, config.vaccination_uptake_by_stratum, config.sampling)
    risk = [r / 10_000 for r in config.incidence_per_10k_by_stratum]
    outcome = _assign(rng, stratum, risk, config.sampling)
    return Population(np.arange(n, dtype=np.int64), stratum, treated, outcome, config.labels)
