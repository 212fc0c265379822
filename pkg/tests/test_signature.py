import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cohort_audit.psm import detect_ratio_signature


@pytest.mark.parametrize("total,base,k,exact", [
    (2_975_035, 595_007, 4, True),
    (100, 50, 1, True),
    (101, 50, None, False),
    (50, 50, None, False),
])
def test_examples(total, base, k, exact):
    sig = detect_ratio_signature(total, base)
    assert (sig.k, sig.exact) == (k, exact)


@given(st.integers(1, 10**9), st.integers(1, 1000))
@settings(max_examples=1000)
def test_exact_for_every_multiple(a, k):
    sig = detect_ratio_signature(a * (k + 1), a)
    assert sig.exact and sig.k == k


@given(st.integers(2, 10**9), st.integers(1, 1000), st.data())
@settings(max_examples=200)
def test_not_exact_off_multiple(a, k, data):
    r = data.draw(st.integers(1, a - 1))
    assert not detect_ratio_signature(a * (k + 1) + r, a).exact


def test_rejects_bad_sizes():
    with pytest.raises(ValueError):
        detect_ratio_signature(5, 0)
