import pytest
from hypothesis import given
from hypothesis import strategies as st

from cohort_audit.domain import (
    CasesExceedPopulation,
    CohortSummary,
    CrossTableConflict,
    GroupCount,
    IndividualRecord,
    NegativeCount,
    Stratum,
    StrataSumMismatch,
    ValidationError,
    validate_cohort,
    validate_records,
)


def _study(**stated):
    groups = (GroupCount("unvaccinated", 595_007, 1_989), GroupCount("vaccinated", 2_380_028, 10_144))
    strata = {"total": (Stratum("<65", 87.85), Stratum(">=65", 12.15))}
    return CohortSummary(groups, strata, stated)


def test_totals_from_groups():
    c = validate_cohort(_study())
    assert (c.total.population, c.total.cases) == (2_975_035, 12_133)


def test_percent_strata_are_normalized():
    c = validate_cohort(_study())
    assert [s.proportion for s in c.strata_by_group["total"]] == pytest.approx([0.8785, 0.1215])


def test_zero_case_group_is_valid():
    c = validate_cohort(CohortSummary((GroupCount("n", 100, 0),)))
    assert (c.total.population, c.total.cases) == (100, 0)


def test_cases_exceed_population():
    with pytest.raises(CasesExceedPopulation) as err:
        validate_cohort(CohortSummary((GroupCount("n", 10, 11),)))
    assert err.value.issues[0].path == "groups[0].cases"


def test_negative_count():
    with pytest.raises(NegativeCount):
        validate_cohort(CohortSummary((GroupCount("n", -1, 0),)))


def test_empty_groups_rejected():
    with pytest.raises(ValidationError):
        validate_cohort(CohortSummary(()))


def test_strata_must_sum_to_one():
    bad = CohortSummary((GroupCount("a", 100, 1),), {"a": (Stratum("x", 0.5), Stratum("y", 0.4))})
    with pytest.raises(StrataSumMismatch) as err:
        validate_cohort(bad)
    assert err.value.issues[0].path == "strata.a"


def test_stratum_counts_must_sum_to_population():
    bad = CohortSummary((GroupCount("a", 100, 1),), {"a": (Stratum("x", 0.5, 50), Stratum("y", 0.5, 49))})
    with pytest.raises(StrataSumMismatch):
        validate_cohort(bad)


def test_cross_table_population_conflict():
    # one table gives 595,007 for this group, another 595,507
    with pytest.raises(CrossTableConflict) as err:
        validate_cohort(_study(unvaccinated=595_507))
    assert "595507" in str(err.value)


def test_consistent_stated_population_accepted():
    validate_cohort(_study(unvaccinated=595_007, total=2_975_035))


def test_every_issue_is_reported():
    bad = CohortSummary((GroupCount("a", 10, 11), GroupCount("b", -5, 0)))
    with pytest.raises(ValidationError) as err:
        validate_cohort(bad)
    assert len(err.value.issues) == 2


def test_unknown_strata_group():
    bad = CohortSummary((GroupCount("a", 10, 1),), {"zz": (Stratum("x", 1.0),)})
    with pytest.raises(ValidationError):
        validate_cohort(bad)


def test_records_need_unique_ids_and_equal_width():
    recs = [IndividualRecord(1, True, (1.0,)), IndividualRecord(1, False, (1.0, 2.0))]
    with pytest.raises(ValidationError) as err:
        validate_records(recs)
    assert {i.code for i in err.value.issues} == {"DUPLICATE_ID", "COVARIATE_LENGTH"}


groups_st = st.lists(
    st.tuples(st.integers(0, 10**7), st.integers(0, 10**7)).map(lambda t: (max(t), min(t))),
    min_size=1, max_size=6,
)


@given(groups_st, st.randoms())
def test_validation_idempotent_and_totals_order_free(pairs, rnd):
    groups = tuple(GroupCount(f"g{i}", n, c) for i, (n, c) in enumerate(pairs))
    once = validate_cohort(CohortSummary(groups))
    assert validate_cohort(once) == once
    shuffled = list(groups)
    rnd.shuffle(shuffled)
    assert validate_cohort(CohortSummary(tuple(shuffled))).total == once.total
