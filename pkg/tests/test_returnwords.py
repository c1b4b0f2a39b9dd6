import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lyaprank.errors import NoZeroSymbol
from lyaprank.mirsky import BFreeSet
from lyaprank.returnwords import (
    FrequencyTable,
    consistency_residuals,
    decompose,
    empirical_cylinder_frequencies,
    empirical_exact_frequencies,
    empirical_frequency,
    return_word_stats,
    zero_frequency_decay,
)
from lyaprank.sequences import (
    FIBONACCI,
    THUE_MORSE,
    bfree_characteristic,
    counterexample_sequence,
    substitution_fixed_point,
)

from strategies import words_with_zero


def test_decompose_thue_morse_prefix():
    d = decompose("0110100110")
    assert d.head == ()
    assert d.head_zeros == 1
    assert d.blocks == [((1, 1), 1), ((1,), 2), ((1, 1), 1)]
    assert d.residual == ()


def test_decompose_with_head_and_residual():
    d = decompose("2100120011")
    assert d.head == (2, 1)
    assert d.head_zeros == 2
    assert d.blocks == [((1, 2), 2)]
    assert d.residual == (1, 1)
    assert d.zero_count == 4


def test_decompose_requires_zero():
    with pytest.raises(NoZeroSymbol):
        decompose("1211")
    with pytest.raises(NoZeroSymbol):
        empirical_exact_frequencies(np.ones(5, dtype=int))


@given(words_with_zero())
def test_reassembly(w):
    d = decompose(w)
    assert d.reassemble() == tuple(w)
    assert all(0 not in rw and rw and t >= 1 for rw, t in d.blocks)
    assert 0 not in d.head and 0 not in d.residual


@given(words_with_zero())
def test_length_identity(w):
    st_ = return_word_stats(w)
    assert st_.accounted_length() == len(w)
    assert st_.zero_count == w.count(0)


@given(words_with_zero(), st.integers(1, 5))
def test_length_identity_with_truncation(w, cap):
    st_ = return_word_stats(w, max_return_len=cap)
    assert st_.accounted_length() == len(w)


@given(words_with_zero(max_size=300))
def test_empirical_table_length_bound(w):
    # sum |w| F_w <= 1 - rho0 for the empirical table (blocks are disjoint)
    t = empirical_exact_frequencies(w, max_return_len=10 ** 6)
    assert t.length_gap() >= -1e-12


@given(words_with_zero())
def test_exact_counts_match_sliding_counts(w):
    x = np.array(w)
    t = empirical_exact_frequencies(x, max_return_len=10 ** 6)
    for rw, f in t.exact.items():
        assert math.isclose(f, empirical_frequency(x, (0,) + rw + (0,)))


def test_empirical_frequency_example():
    assert empirical_frequency("0101", "01") == 0.5


def test_empirical_exact_example():
    t = empirical_exact_frequencies("010010")
    assert t.exact == {(1,): pytest.approx(2 / 6)}
    assert t.rho0 == pytest.approx(4 / 6)


def test_all_zero_prefix_gives_empty_table():
    t = empirical_exact_frequencies(np.zeros(50, dtype=int))
    assert t.exact == {}
    assert t.rho0 == 1.0


def test_thue_morse_empirical_frequencies():
    x = substitution_fixed_point(THUE_MORSE, 1 << 16)
    t = empirical_exact_frequencies(x)
    assert abs(t.exact[(1,)] - 1 / 6) < 0.01
    assert abs(t.exact[(1, 1)] - 1 / 6) < 0.01
    assert set(t.exact) == {(1,), (1, 1)}
    assert abs(empirical_frequency(x, "11") - 1 / 6) < 0.01


def test_fibonacci_empirical_frequencies():
    x = substitution_fixed_point(FIBONACCI, 10 ** 6)
    t = empirical_exact_frequencies(x)
    assert set(t.exact) == {(1,)}
    assert abs(t.exact[(1,)] - (3 - math.sqrt(5)) / 2) < 1e-5
    assert abs(t.rho0 - (math.sqrt(5) - 1) / 2) < 1e-5


def test_squarefree_empirical_frequencies():
    x = bfree_characteristic(BFreeSet.squarefree(), 10 ** 7)
    # symbol 0 is a non-squarefree integer; return words are runs of ones
    t = empirical_exact_frequencies(x)
    assert abs(t.exact[(1, 1, 1)] - 0.125487) < 1e-3
    assert abs(t.exact[(1,)] - 0.0881459) < 1e-3
    assert abs(t.rho0 - (1 - 6 / math.pi ** 2)) < 1e-3


def test_truncation_is_reported():
    t = empirical_exact_frequencies("0111110110", max_return_len=3)
    assert t.exact == {(1, 1): pytest.approx(0.1)}
    assert t.meta["untabulated_blocks"] == 1


def test_vanishing_zero_frequency_flag():
    x = counterexample_sequence(2 * 10 ** 6)
    ratio = zero_frequency_decay(x)
    assert 0.45 < ratio < 0.55
    assert empirical_exact_frequencies(x).meta["rho0_vanishing"]
    fib = substitution_fixed_point(FIBONACCI, 10 ** 5)
    assert not empirical_exact_frequencies(fib).meta["rho0_vanishing"]


def test_frequency_table_validation():
    with pytest.raises(ValueError):
        FrequencyTable(1.5, {}, "x")
    with pytest.raises(ValueError):
        FrequencyTable(0.5, {(1,): -0.1}, "x")
    with pytest.raises(ValueError):
        FrequencyTable(0.5, {(1, 0): 0.1}, "x")


def test_max_discrepancy_and_rows():
    a = FrequencyTable(0.5, {(1,): 0.2, (1, 1): 0.1}, "a")
    b = FrequencyTable(0.5, {(1,): 0.25}, "b")
    assert a.max_discrepancy(b) == pytest.approx(0.1)
    assert a.rows() == [("1", 0.2), ("11", 0.1)]


def test_consistency_residuals_vanish_for_thue_morse():
    x = substitution_fixed_point(THUE_MORSE, 1 << 18)
    t = empirical_exact_frequencies(x)
    cyl = empirical_cylinder_frequencies(x, t.exact)
    res = consistency_residuals(t, cyl)
    assert max(abs(r) for r in res.values()) < 1e-4
