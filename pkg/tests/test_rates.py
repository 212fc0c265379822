import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cohort_audit.domain import AnnualRate
from cohort_audit.rates import (
    EmptySeries,
    Rate,
    ZeroPopulation,
    baseline_stats,
    crude_rate,
    deviation,
    implied_population,
    project_cases,
    rescale,
)
from cohort_audit.rounding import round_count, round_half_away


@pytest.mark.parametrize("cases,population,expected,tol", [
    (12_133, 2_975_035, 40.78, 0.005),
    (1_989, 595_007, 33.43, 0.005),
    (0, 1_000_000, 0.0, 0.0),
])
def test_crude_rate(cases, population, expected, tol):
    assert crude_rate(cases, population).value == pytest.approx(expected, abs=tol)


def test_vaccinated_rate_exact_division():
    # long division: 10144 / 2380028 * 10000 = 42.62134...
    assert crude_rate(10_144, 2_380_028).value == pytest.approx(42.621347, abs=1e-6)
    assert round_half_away(crude_rate(10_144, 2_380_028).value, 2) == 42.62


def test_zero_population():
    with pytest.raises(ZeroPopulation):
        crude_rate(1, 0)


def test_rescale_examples():
    assert rescale(Rate(482.9, 100_000), 10_000).value == pytest.approx(48.29, abs=1e-12)
    assert rescale(Rate(55.02, 10_000), 100_000).value == pytest.approx(550.2, abs=1e-9)
    r = Rate(7.5, 1000)
    assert rescale(r, 1000) == r


def test_baseline_examples():
    b = baseline_stats([48.29, 54.06, 55.02])
    assert b.mean.value == pytest.approx(52.46, abs=0.005)
    assert b.sd.value == pytest.approx(2.97, abs=0.005)
    single = baseline_stats([50.0])
    assert (single.mean.value, single.sd.value) == (50.0, 0.0)
    b = baseline_stats([10, 20, 30])
    assert b.mean.value == 20
    assert b.sd.value == pytest.approx(math.sqrt(200 / 3), abs=1e-12)
    assert b.sd.value == pytest.approx(8.1650, abs=1e-4)


def test_baseline_accepts_annual_rates_on_other_scales():
    annual = [AnnualRate(2020, 482.9), AnnualRate(2021, 540.6), AnnualRate(2022, 550.2)]
    assert baseline_stats(annual).mean.value == pytest.approx(52.456667, abs=1e-6)


def test_sample_sd_option():
    assert baseline_stats([10, 20, 30], ddof=1).sd.value == pytest.approx(10.0)


def test_empty_baseline():
    with pytest.raises(EmptySeries):
        baseline_stats([])


def test_deviation_examples():
    d = deviation(Rate(40.78), baseline_stats([52.46]))
    assert d.absolute == pytest.approx(-11.68, abs=1e-9)
    assert d.percent == pytest.approx(-22.26, abs=0.05)
    assert d.sd_multiples is None  # zero-spread baseline
    d = deviation(Rate(52.46), baseline_stats([52.46]))
    assert (d.absolute, d.percent) == (0.0, 0.0)
    d = deviation(Rate(40.78), baseline_stats([48.29, 54.06, 55.02]))
    assert d.sd_multiples == pytest.approx(-11.68 / 2.97, abs=0.02)


def test_deviation_rescales_observed():
    d = deviation(Rate(407.8, 100_000), baseline_stats([52.46]))
    assert d.observed == pytest.approx(40.78)


def test_projection_examples():
    assert project_cases(Rate(40.78), 51_710_000) == pytest.approx(210_873, abs=500)
    assert project_cases(Rate(0.0), 12345) == 0
    assert project_cases(Rate(52.46), 51_770_000) == pytest.approx(271_586, abs=1)
    assert implied_population(Rate(40.78), 210_873) == pytest.approx(51_709_906.8, abs=0.1)


def test_rounding_half_away_from_zero():
    assert round_half_away(2.675, 2) == 2.68  # binary float would give 2.67
    assert round_half_away(-0.125, 2) == -0.13
    assert round_count(2.5) == 3 and round_count(-2.5) == -3


def test_mixture_identity_on_published_counts():
    groups = [(1_989, 595_007), (10_144, 2_380_028)]
    total = crude_rate(12_133, 2_975_035).value
    weighted = sum(crude_rate(c, n).value * n for c, n in groups) / 2_975_035
    assert weighted == pytest.approx(total, rel=1e-9)


counts = st.integers(1, 10**7).flatmap(lambda n: st.tuples(st.integers(0, n), st.just(n)))


@given(counts, st.integers(1, 1000))
def test_linearity(cn, a):
    c, n = cn
    assert crude_rate(a * c, a * n).value == pytest.approx(crude_rate(c, n).value, rel=1e-12)


@given(st.floats(0, 1e6), st.floats(1, 1e7), st.floats(1, 1e7))
def test_rescale_roundtrip(v, s1, s2):
    back = rescale(rescale(Rate(v, s1), s2), s1).value
    assert back == pytest.approx(v, rel=1e-12, abs=1e-300)


@given(st.lists(st.floats(0, 1e4), min_size=1, max_size=12), st.randoms())
def test_baseline_permutation_invariant(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert baseline_stats(values) == baseline_stats(shuffled)


@given(counts)
def test_projection_inverts_crude_rate(cn):
    c, n = cn
    assert project_cases(crude_rate(c, n), n) == pytest.approx(c, abs=1e-6)
