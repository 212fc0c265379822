import math

import numpy as np
import pytest

from cohort_audit.domain import IndividualRecord, ParseError
from cohort_audit.psm import UnknownId, balance, fit_propensity, match_one_to_k, smd
from cohort_audit.psm.matching import MatchedCohort
from cohort_audit.psm.tabular import read_records, write_matched


def test_identical_distributions_give_zero():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    value, flagged = smd(x, x.copy())
    assert abs(value) < 1e-12 and not flagged


def test_unit_mean_gap_with_unit_pooled_variance():
    # sample variance of each group is 1, means differ by 1
    t = 1.0 + np.array([-1, 1]) / math.sqrt(2)
    c = 0.0 + np.array([-1, 1]) / math.sqrt(2)
    assert smd(t, c)[0] == pytest.approx(1.0, abs=1e-12)


def test_zero_spread_cases():
    assert smd(np.ones(3), np.ones(4)) == (0.0, False)
    value, flagged = smd(np.ones(3), np.zeros(4))
    assert value == math.inf and flagged


def _dataset():
    recs = []
    for i in range(40):
        x = (i % 10) / 10
        recs.append(IndividualRecord(f"r{i}", i % 4 == 0 or x > 0.7, (x,)))
    return recs


def test_matching_improves_balance():
    recs = _dataset()
    model = fit_propensity(recs)
    scores = model.scores(recs)
    base = [r.id for r in recs if r.treated]
    pool = [r.id for r in recs if not r.treated]
    cohort = match_one_to_k(scores, base, pool, 1, base_is_treated=True)
    report = balance(recs, model, cohort, ["x"])
    assert [r.name for r in report.rows] == ["x", "propensity_logit"]
    assert abs(report.rows[0].smd_after) < abs(report.rows[0].smd_before)
    assert report.max_abs_after() == max(abs(r.smd_after) for r in report.rows)


def test_unknown_matched_id():
    recs = _dataset()
    cohort = MatchedCohort((("nobody", ("r1",)),), (), 1)
    with pytest.raises(UnknownId):
        balance(recs, None, cohort)


def test_tabular_roundtrip(tmp_path):
    src = tmp_path / "people.csv"
    src.write_text("id,treated,age,outcome\na,1,70,0\nb,0,71,1\nc,0,30,0\n")
    recs, names = read_records(src)
    assert names == ["age"] and recs[0] == IndividualRecord("a", True, (70.0,), False)
    cohort = match_one_to_k({"a": 0.7, "b": 0.71, "c": 0.3}, ["a"], ["b", "c"], 1)
    out = tmp_path / "matched.csv"
    assert write_matched(out, recs, names, cohort) == 2
    assert out.read_text().splitlines() == [
        "id,treated,age,outcome,match_group,role", "a,1,70.0,0,1,base", "b,0,71.0,1,1,partner"]


def test_tabular_errors_carry_line(tmp_path):
    src = tmp_path / "bad.tsv"
    src.write_text("id\ttreated\tx\n1\t1\t0.5\n2\tyes\t0.1\n")
    with pytest.raises(ParseError) as err:
        read_records(src)
    assert err.value.line == 3
