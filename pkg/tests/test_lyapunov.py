import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from lyaprank.errors import DimensionMismatch, NoConvergence, RankOneViolation
from lyaprank.lyapunov import (
    ANNIHILATING_WORD,
    LAMBDA_ZERO,
    HypothesisWarning,
    MatrixFamily,
    RankOneMatrix,
    all_rank_one_lyapunov,
    bernoulli_frequency_table,
    bernoulli_lyapunov,
    closed_form_lyapunov,
    counterexample_family,
    direct_estimate,
    markov_lyapunov,
    quantum_rotation_lyapunov,
    random_positive_family,
    rotation_family,
    spectral_radius,
    word_matrix_contraction,
)
from lyaprank.returnwords import FrequencyTable, empirical_exact_frequencies
from lyaprank.sequences import (
    FIBONACCI,
    THUE_MORSE,
    TRIBONACCI,
    BernoulliSource,
    CounterexampleSource,
    ExplicitSource,
    MarkovSource,
    SubstitutionSource,
)
from lyaprank.substanalysis import exact_frequencies_via_durand

SQRT5 = math.sqrt(5)
ONE = np.ones(2)

vectors = hnp.arrays(float, 3, elements=st.floats(-3, 3, allow_nan=False))
matrices = hnp.arrays(float, (3, 3), elements=st.floats(-2, 2, allow_nan=False))


def beta_pair(beta):
    return MatrixFamily(RankOneMatrix(ONE, ONE), [np.array([[1.0, 1.0], [1.0, math.exp(beta)]])])


def test_word_contractions():
    fam = beta_pair(0.7)
    e = math.exp(0.7)
    assert word_matrix_contraction(fam, (1,)) == pytest.approx(3 + e)
    assert word_matrix_contraction(fam, (1, 1)) == pytest.approx(5 + 2 * e + e * e)


@given(vectors, vectors, matrices)
def test_rank_one_algebra(u, v, A):
    # (u v') A (u v') = (v' A u) (u v')
    R = RankOneMatrix(u, v)
    lhs = R.dense() @ A @ R.dense()
    rhs = (v @ A @ u) * R.dense()
    assert np.allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(lhs).max()))


@given(vectors, vectors)
def test_rank_one_frobenius(u, v):
    R = RankOneMatrix(u, v)
    assert np.linalg.norm(R.dense()) == pytest.approx(np.linalg.norm(u) * np.linalg.norm(v), abs=1e-9)


def test_from_dense_round_trip_and_violation():
    u, v = np.array([1.0, -2.0, 0.5]), np.array([0.3, 1.0, 2.0])
    R = RankOneMatrix.from_dense(np.outer(u, v))
    assert np.allclose(R.dense(), np.outer(u, v))
    assert R.lam == pytest.approx(v @ u)
    with pytest.raises(RankOneViolation):
        RankOneMatrix.from_dense(np.eye(2))
    with pytest.raises(DimensionMismatch):
        RankOneMatrix(np.ones(2), np.ones(3))
    with pytest.raises(DimensionMismatch):
        MatrixFamily(RankOneMatrix(ONE, ONE), [np.eye(3)])


def test_family_flags():
    fam = counterexample_family()
    assert fam.all_nonnegative and fam.others_invertible
    fam2 = MatrixFamily(RankOneMatrix(ONE, ONE), [np.array([[1.0, 1.0], [1.0, 1.0]])])
    assert not fam2.others_invertible


def test_fibonacci_closed_form_matches_formula():
    fam = random_positive_family(3, 2, 5)
    t = exact_frequencies_via_durand(FIBONACCI)
    L = closed_form_lyapunov(fam, t).value
    u, v, A = fam.A0.u, fam.A0.v, fam.others[0]
    ref = (SQRT5 - 2) * math.log(v @ u) + (3 - SQRT5) / 2 * math.log(v @ A @ u)
    assert L == pytest.approx(ref, abs=1e-12)


def test_thue_morse_closed_form_matches_formula():
    fam = random_positive_family(2, 2, 9)
    L = closed_form_lyapunov(fam, exact_frequencies_via_durand(THUE_MORSE)).value
    u, v, A = fam.A0.u, fam.A0.v, fam.others[0]
    ref = (math.log(v @ u) + math.log(v @ A @ u) + math.log(v @ A @ A @ u)) / 6
    assert L == pytest.approx(ref, abs=1e-12)


def test_tribonacci_closed_form_matches_formula():
    rho = max(np.roots([1, -1, -1, -1]).real)
    fam = random_positive_family(3, 3, 2)
    L = closed_form_lyapunov(fam, exact_frequencies_via_durand(TRIBONACCI)).value
    u, v, A1, A2 = fam.A0.u, fam.A0.v, fam.others[0], fam.others[1]
    ref = ((1 / rho - 1 / rho ** 2 - 1 / rho ** 3) * math.log(v @ u)
           + math.log(v @ A1 @ u) / rho ** 2 + math.log(v @ A2 @ u) / rho ** 3)
    assert L == pytest.approx(ref, abs=1e-12)


@pytest.mark.parametrize("sub", [FIBONACCI, THUE_MORSE, TRIBONACCI], ids=lambda s: s.name)
@pytest.mark.parametrize("seed", [0, 1])
def test_closed_form_matches_direct_for_substitutions(sub, seed):
    fam = random_positive_family(3, sub.alphabet_size, seed)
    L = closed_form_lyapunov(fam, exact_frequencies_via_durand(sub)).value
    d = direct_estimate(fam, SubstitutionSource(sub), 10 ** 6)
    assert abs(d.estimate - L) < 1e-4


def test_complex_family():
    rng = np.random.default_rng(4)
    u = rng.normal(size=2) + 1j * rng.normal(size=2)
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    fam = MatrixFamily(RankOneMatrix(u, v), [A])
    L = closed_form_lyapunov(fam, exact_frequencies_via_durand(FIBONACCI)).value
    ref = (SQRT5 - 2) * math.log(abs(v @ u)) + (3 - SQRT5) / 2 * math.log(abs(v @ A @ u))
    assert L == pytest.approx(ref, abs=1e-12)
    d = direct_estimate(fam, SubstitutionSource(FIBONACCI), 10 ** 6)
    assert abs(d.estimate - L) < 1e-4


def test_lambda_zero():
    e1, e2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    fam = MatrixFamily(RankOneMatrix(e1, e2), [np.eye(2) + 0.5])
    out = closed_form_lyapunov(fam, exact_frequencies_via_durand(FIBONACCI))
    assert out.is_neg_inf and out.degenerate_reason == LAMBDA_ZERO
    d = direct_estimate(fam, SubstitutionSource(FIBONACCI), 100)
    assert d.estimate == -math.inf


def test_annihilating_word():
    e1 = np.array([1.0, 0.0])
    fam = MatrixFamily(RankOneMatrix(e1, e1), [np.array([[0.0, 1.0], [1.0, 0.0]])])
    out = closed_form_lyapunov(fam, exact_frequencies_via_durand(FIBONACCI))
    assert out.is_neg_inf and out.degenerate_reason == ANNIHILATING_WORD
    assert direct_estimate(fam, SubstitutionSource(FIBONACCI), 100).estimate == -math.inf


def test_zero_frequency_word_is_ignored():
    e1 = np.array([1.0, 0.0])
    fam = MatrixFamily(RankOneMatrix(e1, e1), [np.array([[0.0, 1.0], [1.0, 0.0]])])
    t = FrequencyTable(0.5, {(1,): 0.0, (1, 1): 0.25}, "test")
    assert closed_form_lyapunov(fam, t).value == pytest.approx(0.0)


def test_breakdown_sums_to_value():
    fam = random_positive_family(2, 2, 3)
    out = closed_form_lyapunov(fam, exact_frequencies_via_durand(THUE_MORSE))
    assert math.fsum(t for _, t in out.breakdown_rows()) == pytest.approx(out.value, abs=1e-14)


def test_counterexample_warns_and_differs():
    fam = counterexample_family()
    n = 2 * 10 ** 6
    x = CounterexampleSource().generate(n)
    # every block 1^k occurs once, so each F_w -> 0; a fixed length cap approximates the limit table
    t = empirical_exact_frequencies(x, max_return_len=64)
    assert max(t.exact.values()) == pytest.approx(1 / n)
    with pytest.warns(HypothesisWarning):
        out = closed_form_lyapunov(fam, t)
    assert "rho0=0; hypotheses not met" in out.warnings
    d = direct_estimate(fam, CounterexampleSource(), n)
    limit = math.log((3 + SQRT5) / 2)
    assert abs(d.estimate - limit) < 1e-2
    assert abs(out.value) < 0.01
    assert d.estimate - out.value > 0.3


def test_bernoulli_degenerate_p():
    fam = random_positive_family(2, 2, 1)
    out = bernoulli_lyapunov(fam, (1.0, 0.0))
    assert out.value == pytest.approx(math.log(fam.A0.lam))


def test_bernoulli_series_vs_truncated_table():
    fam = random_positive_family(2, 3, 6)
    p = (0.5, 0.3, 0.2)
    series = bernoulli_lyapunov(fam, p).value
    table = bernoulli_frequency_table(p, 9)
    assert table.length_gap() < 1e-2
    approx = closed_form_lyapunov(fam, table).value
    assert abs(series - approx) < 0.05


def test_bernoulli_series_vs_direct():
    fam = random_positive_family(2, 2, 11)
    p = (0.4, 0.6)
    series = bernoulli_lyapunov(fam, p).value
    ests = [direct_estimate(fam, BernoulliSource(p, s), 2 * 10 ** 5).estimate for s in range(8)]
    mean, se = np.mean(ests), np.std(ests, ddof=1) / math.sqrt(len(ests))
    assert abs(mean - series) < 4 * se + 1e-3


def test_pincus_scalar_formula():
    # d = 1: L = p0 log|v'u| + sum p0^2 p1^k log|a|^k ... reduces to p0 log|uv| + p1 log|a|
    fam = MatrixFamily(RankOneMatrix(np.array([2.0]), np.array([1.5])), [np.array([[0.7]])])
    p = (0.3, 0.7)
    assert bernoulli_lyapunov(fam, p).value == pytest.approx(
        0.3 * math.log(3.0) + 0.7 * math.log(0.7), abs=1e-10)


def test_markov_series_matches_direct():
    fam = random_positive_family(2, 2, 12)
    P = ((0.7, 0.3), (0.5, 0.5))
    series = markov_lyapunov(fam, P).value
    ests = [direct_estimate(fam, MarkovSource(P, s), 2 * 10 ** 5).estimate for s in range(6)]
    assert abs(np.mean(ests) - series) < 4 * np.std(ests, ddof=1) / math.sqrt(6) + 1e-3


def test_quantum_rotation_matches_markov_series():
    theta, p0, p1 = 0.9, 0.4, 0.6
    P = ((p0, 1 - p0), (1 - p1, p1))
    series = markov_lyapunov(rotation_family(theta), P).value
    closed = quantum_rotation_lyapunov(theta, p0, p1)
    assert closed < 0
    assert closed == pytest.approx(series, abs=1e-10)


def test_all_rank_one():
    rng = np.random.default_rng(0)
    mats = [RankOneMatrix(rng.normal(size=2), rng.normal(size=2)) for _ in range(2)]
    p = (0.5, 0.5)
    L = all_rank_one_lyapunov(mats, p)
    ref = sum(0.25 * math.log(abs(mats[i].u @ mats[j].v)) for i in range(2) for j in range(2))
    assert L == pytest.approx(ref)
    single = all_rank_one_lyapunov(mats[:1], (1.0,))
    assert single == pytest.approx(math.log(abs(mats[0].u @ mats[0].v)))
    orth = RankOneMatrix(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    assert all_rank_one_lyapunov([orth], (1.0,)) == -math.inf


def test_direct_identity_family():
    fam = MatrixFamily(RankOneMatrix(np.array([1.0]), np.array([1.0])), [np.eye(1)])
    assert direct_estimate(fam, BernoulliSource((0.5, 0.5), 0), 1000).estimate == pytest.approx(0.0)
    fam3 = MatrixFamily(RankOneMatrix(np.ones(3), np.ones(3)), [np.eye(3)])
    d = direct_estimate(fam3, ExplicitSource("1" * 500), 500, norm="one")
    assert d.estimate == pytest.approx(0.0, abs=1e-15)


@given(st.integers(0, 10 ** 6), st.integers(50, 3000))
def test_norm_independence(seed, n):
    fam = random_positive_family(3, 2, seed)
    src = BernoulliSource((0.5, 0.5), seed)
    vals = [direct_estimate(fam, src, n, norm=k).estimate for k in ("frobenius", "one", "inf", "sum")]
    assert max(vals) - min(vals) <= math.log(3) / n + 1e-12


def test_direct_trace_reaches_n():
    d = direct_estimate(random_positive_family(2, 2, 0), SubstitutionSource(FIBONACCI), 5000)
    assert d.trace[-1][0] == 5000
    assert d.trace[-1][1] == pytest.approx(d.estimate)


def test_direct_rejects_bad_inputs():
    fam = random_positive_family(2, 2, 0)
    with pytest.raises(ValueError):
        direct_estimate(fam, SubstitutionSource(FIBONACCI), 0)
    with pytest.raises(ValueError):
        direct_estimate(fam, SubstitutionSource(FIBONACCI), 10, norm="spectral")
    with pytest.raises(DimensionMismatch):
        direct_estimate(fam, SubstitutionSource(TRIBONACCI), 10)


def test_spectral_radius():
    assert spectral_radius(np.array([[2.0, 1.0], [1.0, 1.0]])) == pytest.approx((3 + SQRT5) / 2)
    assert spectral_radius(np.zeros((2, 2))) == 0.0
    A = np.array([[1.0, 1.0], [0.0, 1.0]])
    with pytest.raises(NoConvergence):
        spectral_radius(A, tol=1e-14, max_iter=50)


def test_random_family_positive_and_seeded():
    a = random_positive_family(3, 3, 1)
    b = random_positive_family(3, 3, 1)
    assert a.all_nonnegative
    assert np.array_equal(a.matrices(), b.matrices())


def test_no_warning_for_positive_rho0():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        closed_form_lyapunov(random_positive_family(2, 2, 0), exact_frequencies_via_durand(FIBONACCI))
