import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cohort_audit.rates import Rate
from cohort_audit.simulate import (
    InvalidConfig,
    SimConfig,
    SingularSystem,
    SplitMix64,
    apportion,
    calibrate_rates,
    default_config,
    generate_population,
    run_paradox_experiment,
)
from cohort_audit.simulate.rng import splitmix64_scalar

STRATA = [{"label": "<65", "proportion": 0.82}, {"label": ">=65", "proportion": 0.18}]


def test_splitmix64_reference_vectors():
    # first outputs of the reference generator seeded with 0
    assert [int(v) for v in SplitMix64(0).next_u64(3)] == [
        0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


@given(st.integers(0, 2**64 - 1), st.integers(1, 50))
def test_vectorized_stream_matches_scalar(seed, n):
    state, expected = seed, []
    for _ in range(n):
        state, out = splitmix64_scalar(state)
        expected.append(out)
    rng = SplitMix64(seed)
    head = rng.next_u64(n // 2)
    tail = rng.next_u64(n - n // 2)
    assert [int(v) for v in np.concatenate([head, tail])] == expected


def test_uniforms_in_unit_interval():
    u = SplitMix64(7).uniforms(10_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.01


@given(st.integers(0, 10**7), st.lists(st.integers(1, 100), min_size=1, max_size=6))
def test_apportion_sums_to_total(total, weights):
    props = [w / sum(weights) for w in weights]
    counts = apportion(total, props)
    assert sum(counts) == total
    assert all(abs(c - p * total) < 1 for c, p in zip(counts, props))


def test_apportion_exact_split():
    assert apportion(100_000, [0.82, 0.18]) == [82_000, 18_000]


def test_calibration_examples():
    young, old = calibrate_rates(Rate(52.46), [0.82, 0.18], Rate(40.78), [0.8785, 0.1215])
    assert young == pytest.approx(16.52, abs=0.01) and old == pytest.approx(216.18, abs=0.01)
    assert 0.82 * young + 0.18 * old == pytest.approx(52.46, abs=1e-9)
    assert 0.8785 * young + 0.1215 * old == pytest.approx(40.78, abs=1e-9)
    assert calibrate_rates(Rate(52.46), [0.82, 0.18], known={0: 30.0})[1] == pytest.approx(154.78, abs=0.01)
    with pytest.raises(SingularSystem):
        calibrate_rates(Rate(50.0), [0.82, 0.18], Rate(50.0), [0.82, 0.18])


@given(st.floats(0, 500), st.floats(0.01, 0.99))
def test_equal_rates_are_shares_free(r, p):
    young, old = calibrate_rates(Rate(r), [p, 1 - p], known={0: r})
    assert old == pytest.approx(r, rel=1e-9, abs=1e-9)


def _config(**kw):
    doc = {"population_size": 100_000, "age_strata": STRATA, "incidence_per_10k_by_stratum": [16.52, 216.18],
           "vaccination_uptake_by_stratum": [0.889, 0.930], "seed": 11}
    doc.update(kw)
    return SimConfig.from_dict(doc)


def test_population_sizes_and_determinism():
    cfg = _config()
    pop = generate_population(cfg)
    assert pop.stratum_counts() == [82_000, 18_000]
    assert pop.fingerprint() == generate_population(cfg).fingerprint()
    assert pop.fingerprint() != generate_population(_config(seed=12)).fingerprint()
    rec = pop[5]
    assert rec.id == 5 and rec.covariates == (0.0,)


def test_full_uptake_leaves_no_untreated():
    pop = generate_population(_config(vaccination_uptake_by_stratum=[1.0, 1.0]))
    assert not (~pop.treated).any()


def test_invalid_config():
    with pytest.raises(InvalidConfig):
        _config(vaccination_uptake_by_stratum=[1.2, 0.5])
    with pytest.raises(InvalidConfig):
        _config(age_strata=[{"label": "a", "proportion": 0.5}])


@pytest.mark.parametrize("sampling", ["exact", "bernoulli"])
def test_outcomes_reproduce_configured_incidence(sampling):
    cfg = _config(population_size=200_000, sampling=sampling)
    pop = generate_population(cfg)
    for s, rate in enumerate(cfg.incidence_per_10k_by_stratum):
        members = pop.stratum == s
        n, p = int(members.sum()), rate / 10_000
        observed = pop.outcome[members].sum() / n
        assert abs(observed - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_matched_cohort_inherits_base_structure():
    r = run_paradox_experiment(_config(population_size=200_000))
    assert r.n_unmatched_base == 0
    for m, b in zip(r.matched_stratum_shares, r.base_group_stratum_shares):
        assert abs(m - b) < 0.005
    assert r.signature.exact and r.signature.k == 4
    assert r.matched_size == 5 * r.n_base


def test_higher_elderly_uptake_lowers_share_and_rate():
    runs = [run_paradox_experiment(_config(population_size=200_000,
                                           vaccination_uptake_by_stratum=[0.889, u]))
            for u in (0.90, 0.93, 0.96)]
    shares = [r.matched_stratum_shares[1] for r in runs]
    rates = [r.matched_cr.value for r in runs]
    assert shares == sorted(shares, reverse=True)
    assert rates == sorted(rates, reverse=True)


def test_equal_uptake_raises_no_alarm():
    for sampling in ("exact", "bernoulli"):
        r = run_paradox_experiment(_config(vaccination_uptake_by_stratum=[0.9, 0.9], sampling=sampling))
        assert r.gof_vs_national.p_value > 0.01
        assert r.flags == ()


def test_default_config_matches_bundled_calibration():
    cfg = default_config()
    assert cfg.population_size == 1_000_000 and cfg.k == 4 and cfg.base_group == "untreated"
    assert cfg.incidence_per_10k_by_stratum == pytest.approx((16.5215, 216.1797), abs=1e-3)
