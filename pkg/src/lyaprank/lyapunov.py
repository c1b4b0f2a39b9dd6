"""Lyapunov exponents of products with one rank-one factor.

With ``A_0 = u v'`` and ``lambda = v'u`` the closed form reads

    L = rho0 log|lambda| + sum_w F_w log(|v' A_w u| / |lambda|)

where ``F_w`` is the exact frequency of the return word ``w`` to 0.
``direct_estimate`` computes ``(1/n) log ||A_{w0} ... A_{w(n-1)}||`` with
per-step renormalisation and serves as the oracle for every closed form.

``-inf`` is represented by the IEEE value together with a
``degenerate_reason`` tag on ``LyapunovValue``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .errors import (
    DimensionMismatch,
    NoConvergence,
    NumericalBreakdown,
    RankOneViolation,
    ZeroMassOnSymbolZero,
)
from .returnwords import FrequencyTable
from .sequences import as_stream, stationary_vector, _check_probability
from .words import Word, as_word, word_str

INVERTIBLE_COND = 1e12
RANK_TOL = 1e-10
SERIES_MASS_TOL = 1e-12
SERIES_MAX_WORDS = 2_000_000

NORMS = {
    "frobenius": _kernels.NORM_FROBENIUS,
    "one": _kernels.NORM_ONE,
    "sum": _kernels.NORM_SUM,
    "inf": _kernels.NORM_INF,
}

LAMBDA_ZERO = "lambdaZero"
ANNIHILATING_WORD = "annihilatingWord"
PRODUCT_ZERO = "productZero"


class HypothesisWarning(UserWarning):
    """The closed form is evaluated outside the hypotheses that justify it."""


@dataclass(frozen=True)
class RankOneMatrix:
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u)
        v = np.asarray(self.v)
        u = u.astype(complex if np.iscomplexobj(u) else float)
        v = v.astype(complex if np.iscomplexobj(v) else float)
        if u.ndim != 1 or v.ndim != 1 or u.size != v.size or u.size == 0:
            raise DimensionMismatch("u and v must be nonempty vectors of equal length")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def dim(self) -> int:
        return self.u.size

    @property
    def lam(self):
        """``v'u`` (plain transpose, no conjugation)."""
        return self.v @ self.u

    def dense(self) -> np.ndarray:
        return np.outer(self.u, self.v)

    @classmethod
    def from_dense(cls, A, tol: float = RANK_TOL) -> "RankOneMatrix":
        """Factor a dense matrix of numerical rank one as ``u v'``."""
        A = np.asarray(A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatch("A_0 must be square")
        U, s, Vh = np.linalg.svd(A)
        if s[0] == 0:
            raise RankOneViolation("A_0 is the zero matrix")
        if s.size > 1 and s[1] > tol * s[0]:
            raise RankOneViolation(
                f"A_0 has numerical rank > 1 (sigma2/sigma1 = {s[1] / s[0]:.3g})")
        u = U[:, 0] * s[0]
        v = Vh[0]
        if not np.iscomplexobj(A):
            u, v = u.real, v.real
        return cls(u, v)


@dataclass
class MatrixFamily:
    """``A_0 = u v'`` plus dense ``A_1, ..., A_{m-1}``."""

    A0: RankOneMatrix
    others: List[np.ndarray]
    all_nonnegative: bool = field(init=False)
    others_invertible: bool = field(init=False)

    def __post_init__(self):
        d = self.A0.dim
        mats = [np.asarray(A) for A in self.others]
        if not mats:
            raise DimensionMismatch("family needs at least one matrix besides A_0")
        for i, A in enumerate(mats, start=1):
            if A.shape != (d, d):
                raise DimensionMismatch(f"A_{i} has shape {A.shape}, expected {(d, d)}")
        cplx = np.iscomplexobj(self.A0.u) or any(np.iscomplexobj(A) for A in mats)
        dt = complex if cplx else float
        self.others = [A.astype(dt) for A in mats]
        self.all_nonnegative = (not cplx) and bool(
            np.all(self.A0.dense() >= 0) and all(np.all(A >= 0) for A in self.others))
        self.others_invertible = all(np.linalg.cond(A) < INVERTIBLE_COND for A in self.others)

    @property
    def dim(self) -> int:
        return self.A0.dim

    @property
    def count(self) -> int:
        return 1 + len(self.others)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.others[0])

    def matrices(self) -> np.ndarray:
        """All ``m`` matrices stacked, ``A_0`` dense first."""
        dt = complex if self.is_complex else float
        return np.stack([self.A0.dense().astype(dt)] + self.others)

    @classmethod
    def from_dense(cls, mats: Sequence, tol: float = RANK_TOL) -> "MatrixFamily":
        mats = [np.asarray(A) for A in mats]
        return cls(RankOneMatrix.from_dense(mats[0], tol), mats[1:])


@dataclass
class LyapunovValue:
    value: float
    rho0_term: float = 0.0
    per_word_terms: Dict[Word, float] = field(default_factory=dict)
    degenerate_reason: Optional[str] = None
    warnings: List[str] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def is_neg_inf(self) -> bool:
        return self.value == -math.inf

    def breakdown_rows(self) -> List[Tuple[str, float]]:
        rows = [("rho0", self.rho0_term)]
        rows += [(word_str(w), t) for w, t in sorted(self.per_word_terms.items(),
                                                     key=lambda kv: (len(kv[0]), kv[0]))]
        return rows


def _neg_inf(reason: str, **meta) -> LyapunovValue:
    return LyapunovValue(-math.inf, -math.inf, {}, reason, [], meta)


def _log_abs_contractions(family: MatrixFamily, words: Sequence[Word]) -> np.ndarray:
    """``log|v' A_w u|`` for each word, with running rescaling."""
    out = np.empty(len(words))
    v, u = family.A0.v, family.A0.u
    for k, w in enumerate(words):
        r = v.copy()
        scale = 0.0
        for c in w:
            r = r @ family.others[c - 1]
            s = np.max(np.abs(r))
            if s == 0:
                break
            r = r / s
            scale += math.log(s)
        val = abs(r @ u)
        out[k] = -math.inf if val == 0 else scale + math.log(val)
    return out


def word_matrix_contraction(family: MatrixFamily, w) -> complex:
    """``v' A_w u`` for a 0-free word ``w`` (``v'u`` for the empty word)."""
    w = as_word(w)
    if 0 in w:
        raise ValueError("word must not contain the symbol 0")
    if any(c >= family.count for c in w):
        raise DimensionMismatch(f"word {word_str(w)} uses a letter outside the family")
    r = family.A0.v
    for c in w:
        r = r @ family.others[c - 1]
    x = r @ family.A0.u
    return x.item() if hasattr(x, "item") else x


def closed_form_lyapunov(family: MatrixFamily, freqs: FrequencyTable) -> LyapunovValue:
    """``rho0 log|v'u| + sum_w F_w log(|v'A_w u| / |v'u|)``."""
    notes = []
    if freqs.rho0 <= 0 or freqs.meta.get("rho0_vanishing"):
        msg = "rho0=0; hypotheses not met"
        warnings.warn(msg, HypothesisWarning, stacklevel=2)
        notes.append(msg)
    lam = abs(family.A0.lam)
    if lam == 0:
        out = _neg_inf(LAMBDA_ZERO)
        out.warnings = notes
        return out
    log_lam = math.log(lam)
    words = sorted(freqs.exact, key=lambda w: (-len(w), w))
    for w in words:
        if any(c >= family.count for c in w):
            raise DimensionMismatch(f"return word {word_str(w)} uses a letter outside the family")
    logs = _log_abs_contractions(family, words)
    terms: Dict[Word, float] = {}
    for w, lg in zip(words, logs):
        F = freqs.exact[w]
        if F <= 0:
            terms[w] = 0.0
            continue
        if lg == -math.inf:
            out = _neg_inf(ANNIHILATING_WORD, word=word_str(w))
            out.warnings = notes
            return out
        terms[w] = F * (lg - log_lam)
    rho0_term = freqs.rho0 * log_lam
    value = math.fsum([rho0_term] + list(terms.values()))
    return LyapunovValue(value, rho0_term, terms, None, notes, {"method": freqs.method})


# ------------------------------------------------------------ series


def _markov_series(family: MatrixFamily, P: np.ndarray, pi0: float,
                   mass_tol: float, max_words: int) -> LyapunovValue:
    """Sum ``F_w log(|v'A_w u|/|v'u|)`` with
    ``F_w = pi0 P[0,w1] P[w1,w2] ... P[wL,0]`` level by level in ``|w|``."""
    lam = abs(family.A0.lam)
    if lam == 0:
        return _neg_inf(LAMBDA_ZERO)
    log_lam = math.log(lam)
    m = family.count
    others = family.others
    u = family.A0.u
    # level state: rows r_w = v'A_w (rescaled), log scale, weight pi0 P[0,w1]...P[w(L-1),wL], last letter
    rows = family.A0.v[None, :]
    scale = np.zeros(1)
    weight = np.array([pi0])
    last = np.zeros(1, dtype=np.int64)
    accounted = pi0 * P[0, 0]  # adjacent zeros carry mass but no term
    terms: List[float] = []
    words_seen = 0
    level = 0
    truncated = False
    while pi0 - accounted > mass_tol * pi0:
        nxt_count = rows.shape[0] * (m - 1)
        if words_seen + nxt_count > max_words:
            truncated = True
            break
        level += 1
        new_rows, new_scale, new_weight, new_last = [], [], [], []
        for c in range(1, m):
            wgt = weight * P[last, c]
            keep = wgt > 0
            if not np.any(keep):
                continue
            r = rows[keep] @ others[c - 1]
            s = np.max(np.abs(r), axis=1)
            zero = s == 0
            s = np.where(zero, 1.0, s)
            new_rows.append(r / s[:, None])
            new_scale.append(scale[keep] + np.log(s))
            new_weight.append(wgt[keep])
            new_last.append(np.full(int(keep.sum()), c))
        if not new_rows:
            break
        rows = np.concatenate(new_rows)
        scale = np.concatenate(new_scale)
        weight = np.concatenate(new_weight)
        last = np.concatenate(new_last)
        words_seen += rows.shape[0]
        F = weight * P[last, 0]
        active = F > 0
        if np.any(active):
            c_abs = np.abs(rows[active] @ u)
            if np.any(c_abs == 0):
                return _neg_inf(ANNIHILATING_WORD, level=level)
            terms.append(math.fsum(F[active] * (scale[active] + np.log(c_abs) - log_lam)))
            accounted += float(F.sum())
    remaining = max(pi0 - accounted, 0.0)
    # crude bound |v'A_w u| <= ||v|| ||u|| D^|w|; bounds the positive part of the tail
    D = max(np.linalg.norm(A, 2) for A in others)
    C0 = math.log(np.linalg.norm(family.A0.v) * np.linalg.norm(u) / lam)
    tail_pos = remaining * max(C0 + (level + 1) * max(math.log(D), 0.0), 0.0) if remaining else 0.0
    rho0_term = pi0 * log_lam
    value = math.fsum([rho0_term] + terms)
    return LyapunovValue(value, rho0_term, {}, None, [], {
        "levels": level,
        "words": words_seen,
        "unaccounted_mass": remaining,
        "tail_bound_positive_part": tail_pos,
        "truncated_by_word_cap": truncated,
    })


def markov_lyapunov(family: MatrixFamily, P, mass_tol: float = SERIES_MASS_TOL,
                    max_words: int = SERIES_MAX_WORDS) -> LyapunovValue:
    """Closed form for a stationary Markov chain with transition matrix ``P``."""
    P = np.asarray(P, dtype=float)
    if P.shape != (family.count, family.count):
        raise DimensionMismatch("transition matrix size must equal the family size")
    pi = stationary_vector(P)
    if pi[0] <= 0:
        raise ZeroMassOnSymbolZero("symbol 0 has stationary probability 0")
    out = _markov_series(family, P, float(pi[0]), mass_tol, max_words)
    out.meta["stationary"] = pi.tolist()
    return out


def bernoulli_lyapunov(family: MatrixFamily, p, mass_tol: float = SERIES_MASS_TOL,
                       max_words: int = SERIES_MAX_WORDS) -> LyapunovValue:
    """``p0 log|v'u| + sum_w p0^2 p_w log(|v'A_w u|/|v'u|)``."""
    p = _check_probability(np.asarray(p, dtype=float))
    if p.size != family.count:
        raise DimensionMismatch("probability vector size must equal the family size")
    if p[0] <= 0:
        raise ZeroMassOnSymbolZero("symbol 0 has probability 0")
    P = np.tile(p, (p.size, 1))
    return _markov_series(family, P, float(p[0]), mass_tol, max_words)


def bernoulli_frequency_table(p, max_len: int) -> FrequencyTable:
    """Truncated table ``F_w = p0^2 p_w`` for ``|w| <= max_len``."""
    from itertools import product
    p = _check_probability(np.asarray(p, dtype=float))
    exact = {}
    for L in range(1, max_len + 1):
        for w in product(range(1, p.size), repeat=L):
            exact[w] = p[0] ** 2 * float(np.prod(p[list(w)]))
    return FrequencyTable(float(p[0]), exact, "bernoulli", {"max_len": max_len})


def quantum_rotation_lyapunov(theta: float, p0: float, p1: float, tol: float = 1e-15) -> float:
    """``sum_{n>=1} pi0 (1-p0) p1^(n-1) (1-p1) log|cos n theta|`` for the
    projection/rotation pair under the two-state Markov measure."""
    if not (0 < p0 < 1 and 0 < p1 < 1):
        raise ValueError("need 0 < p0, p1 < 1")
    pi0 = (1 - p1) / (2 - p0 - p1)
    N = int(math.ceil(math.log(tol) / math.log(p1))) + 1
    n = np.arange(1, N + 1)
    c = np.abs(np.cos(n * theta))
    w = pi0 * (1 - p0) * p1 ** (n - 1) * (1 - p1)
    if np.any((c == 0) & (w > 0)):
        return -math.inf
    return math.fsum(w * np.log(c))


def rotation_family(theta: float) -> MatrixFamily:
    e1 = np.array([1.0, 0.0])
    R = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    return MatrixFamily(RankOneMatrix(e1, e1), [R])


def all_rank_one_lyapunov(mats: Sequence[RankOneMatrix], p) -> float:
    """``sum_{i,j} p_i p_j log|u_i' v_j|`` for i.i.d. rank-one factors."""
    p = _check_probability(np.asarray(p, dtype=float))
    if len(mats) != p.size:
        raise DimensionMismatch("one probability per matrix")
    terms = []
    for i, Ai in enumerate(mats):
        for j, Aj in enumerate(mats):
            w = p[i] * p[j]
            if w == 0:
                continue
            x = abs(Ai.u @ Aj.v)
            if x == 0:
                return -math.inf
            terms.append(w * math.log(x))
    return math.fsum(terms)


# ------------------------------------------------------------ oracle


@dataclass
class DirectEstimate:
    estimate: float
    n: int
    norm: str
    trace: List[Tuple[int, float]]
    degenerate_reason: Optional[str] = None


def _sample_points(n: int, count: int) -> np.ndarray:
    pts = np.unique(np.geomspace(1, n, num=max(count, 2)).astype(np.int64))
    return np.union1d(pts, [n]).astype(np.int64)


def direct_estimate(family: MatrixFamily, omega, n: int, norm: str = "frobenius",
                    samples: int = 64) -> DirectEstimate:
    """``(1/n) log ||A_{w0} ... A_{w(n-1)}||`` with per-step renormalisation."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if norm not in NORMS:
        raise ValueError(f"unknown norm {norm!r}; choose from {sorted(NORMS)}")
    x = np.ascontiguousarray(as_stream(omega).prefix(n), dtype=np.int64)
    if x.size and x.max() >= family.count:
        raise DimensionMismatch("sequence uses a letter outside the family")
    at = _sample_points(n, samples)
    status, log_norm, vals = _kernels.renormalized_product(family.matrices(), x, NORMS[norm], at)
    if status == 2:
        raise NumericalBreakdown("NaN or inf in the running product")
    trace = [(int(k), float(v) / int(k)) for k, v in zip(at, vals)]
    if status == 1:
        return DirectEstimate(-math.inf, n, norm, trace, PRODUCT_ZERO)
    return DirectEstimate(float(log_norm) / n, n, norm, trace)


def spectral_radius(A, tol: float = 1e-10, max_iter: int = 100_000, seed: int = 0) -> float:
    """Dominant eigenvalue modulus by power iteration from a random start.

    The converged growth ratio is cross-checked against the eigenvalues;
    a mismatch (e.g. a slowly converging Jordan block) raises NoConvergence.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch("matrix must be square")
    rng = np.random.Generator(np.random.PCG64(seed))
    x = rng.random(A.shape[0]) + 0.5
    x /= np.linalg.norm(x)
    prev = None
    for _ in range(max_iter):
        y = A @ x
        r = float(np.linalg.norm(y))
        if r == 0:
            return 0.0
        x = y / r
        if prev is not None and abs(r - prev) <= tol * r:
            ref = float(np.max(np.abs(np.linalg.eigvals(A))))
            if abs(r - ref) <= 1e3 * tol * max(ref, 1.0):
                return r
        prev = r
    raise NoConvergence("power iteration for the spectral radius did not converge")


def random_positive_family(d: int, m: int, seed: int) -> MatrixFamily:
    """Seeded family with positive ``u, v`` and positive ``A_1, ..., A_{m-1}``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.uniform(0.5, 1.5, d)
    v = rng.uniform(0.5, 1.5, d)
    others = [rng.uniform(0.1, 1.5, (d, d)) for _ in range(m - 1)]
    return MatrixFamily(RankOneMatrix(u, v), others)


def counterexample_family() -> MatrixFamily:
    one = np.ones(2)
    return MatrixFamily(RankOneMatrix(one, one), [np.array([[2.0, 1.0], [1.0, 1.0]])])
