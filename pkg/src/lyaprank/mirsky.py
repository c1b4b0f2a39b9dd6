"""B-free integers, Mirsky measure and exact frequencies of return words.

A B-free set is given by pairwise coprime generators ``b_1 < b_2 < ...``
with ``sum 1/b_k < inf``. Two families are built in: prime powers
``{p^k}`` (``k = 2`` gives the square-free integers) and finite explicit
lists.

Infinite Euler products are evaluated as an explicit product over small
generators and an analytic tail: for ``b = p^k`` with ``p > P``,

    sum_{p > P} log(1 - t/p^(k s/2)) = -sum_j t^j/j * (P(j k s/2) - sum_{p <= P} p^(-j k s/2))

with ``P(.)`` the prime zeta function (``mpmath.primezeta``).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import gcd
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from .errors import (
    Divergent,
    InvalidBFreeSet,
    MethodDisagreement,
    PrecisionUnreachable,
    TooManyFreePositions,
)
from .returnwords import FrequencyTable

WORKING_DPS = 40
DEFAULT_PRECISION = 1e-12
FINEST_PRECISION = 1e-15  # results are returned as doubles
EXPLICIT_PRIME_BOUND = 200
MAX_FREE_POSITIONS = 20


def primes_up_to(n: int) -> np.ndarray:
    """Sieve of Eratosthenes."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(n ** 0.5) + 1):
        if sieve[p]:
            sieve[p * p:: p] = False
    return np.flatnonzero(sieve).astype(np.int64)


def _iroot_ceil(x: int, k: int) -> int:
    """Smallest integer r >= 0 with r^k >= x."""
    r = max(int(round(x ** (1.0 / k))) - 1, 0)
    while r ** k < x:
        r += 1
    return r


@dataclass(frozen=True)
class BFreeSet:
    """Pairwise coprime generators.

    ``kind == "power"``: all ``p^exponent`` for primes ``p``.
    ``kind == "explicit"``: the finite list ``generators``.
    """

    kind: str
    exponent: int = 2
    generators: Tuple[int, ...] = ()
    name: str = ""

    def __post_init__(self):
        if self.kind == "power":
            if self.exponent < 2:
                raise InvalidBFreeSet("prime powers need exponent >= 2 so that sum 1/b converges")
        elif self.kind == "explicit":
            g = tuple(int(b) for b in self.generators)
            if not g:
                raise InvalidBFreeSet("explicit generator list is empty")
            if any(b < 2 for b in g):
                raise InvalidBFreeSet("generators must be >= 2")
            if list(g) != sorted(set(g)):
                raise InvalidBFreeSet("generators must be strictly increasing")
            for a, b in combinations(g, 2):
                if gcd(a, b) != 1:
                    raise InvalidBFreeSet(f"generators {a} and {b} are not coprime")
            object.__setattr__(self, "generators", g)
        else:
            raise InvalidBFreeSet(f"unknown B-free family {self.kind!r}")

    @classmethod
    def squarefree(cls) -> "BFreeSet":
        return cls("power", 2, (), "squarefree")

    @classmethod
    def kfree(cls, k: int) -> "BFreeSet":
        return cls("power", k, (), f"{k}-free")

    @classmethod
    def explicit(cls, generators: Iterable[int]) -> "BFreeSet":
        return cls("explicit", 2, tuple(generators), "explicit")

    @property
    def is_finite(self) -> bool:
        return self.kind == "explicit"

    @property
    def first(self) -> int:
        return 2 ** self.exponent if self.kind == "power" else self.generators[0]

    def generators_up_to(self, hi: int) -> np.ndarray:
        if self.kind == "explicit":
            g = np.asarray(self.generators, dtype=np.int64)
            return g[g <= hi]
        p = primes_up_to(_iroot_ceil(hi + 1, self.exponent))
        b = p ** self.exponent
        return b[b <= hi]

    def generators_between(self, lo: int, hi: int) -> np.ndarray:
        """Generators ``b`` with ``lo < b <= hi``."""
        g = self.generators_up_to(hi)
        return g[g > lo]

    def tail_bound(self, cutoff: int) -> float:
        """``sum_{b > cutoff} 1/b``."""
        if self.kind == "explicit":
            return float(sum(1.0 / b for b in self.generators if b > cutoff))
        P = _iroot_ceil(cutoff + 1, self.exponent) - 1  # largest p with p^k <= cutoff
        return float(_prime_power_tail(self.exponent, max(P, 1)))


def _prime_power_tail(exponent: float, P: int) -> mpmath.mpf:
    """``sum_{p > P} p^(-exponent)``."""
    with mpmath.workdps(WORKING_DPS):
        head = mpmath.fsum(mpmath.mpf(int(p)) ** (-exponent) for p in primes_up_to(P))
        return mpmath.primezeta(exponent) - head


def _log_product(bset: BFreeSet, t: int, s: float, lower: int) -> mpmath.mpf:
    """``sum_{b > lower} log(1 - t / b^(s/2))``; ``-inf`` if a factor vanishes.

    Raises Divergent when a factor is negative or the product diverges.
    """
    half = mpmath.mpf(s) / 2
    with mpmath.workdps(WORKING_DPS):
        if bset.kind == "explicit":
            total = mpmath.mpf(0)
            for b in bset.generators:
                if b <= lower:
                    continue
                f = 1 - mpmath.mpf(t) / mpmath.mpf(b) ** half
                if f == 0:
                    return mpmath.ninf
                if f < 0:
                    raise Divergent(f"factor 1 - {t}/{b}^{half} is negative")
                total += mpmath.log(f)
            return total
        k = bset.exponent
        e = k * half  # b^(s/2) = p^e
        if e <= 1:
            raise Divergent(f"Euler product over p^{k} diverges at s={s}")
        p_lo = _iroot_ceil(lower + 1, k)  # primes with p^k > lower
        P = max(EXPLICIT_PRIME_BOUND, p_lo)
        primes = primes_up_to(P)
        total = mpmath.mpf(0)
        for p in primes[primes >= p_lo]:
            f = 1 - mpmath.mpf(t) / mpmath.mpf(int(p)) ** e
            if f == 0:
                return mpmath.ninf
            if f < 0:
                raise Divergent(f"factor 1 - {t}/{int(p)}^{e} is negative")
            total += mpmath.log(f)
        # analytic tail over p > P
        eps = mpmath.mpf(10) ** (-WORKING_DPS + 5)
        x = mpmath.mpf(t) / mpmath.mpf(P) ** e
        j = 1
        while True:
            term = mpmath.mpf(t) ** j / j * _prime_power_tail(j * e, P)
            total -= term
            if x ** j < eps:
                break
            j += 1
        return total


def _check_precision(precision: float) -> None:
    if not precision > 0:
        raise PrecisionUnreachable("precision must be positive")
    if precision < FINEST_PRECISION:
        raise PrecisionUnreachable(
            f"precision {precision:g} is below double resolution ({FINEST_PRECISION:g})")


def residue_class_count(A: Iterable[int], b: int) -> int:
    """``t(A, b)``: number of residue classes modulo ``b`` met by ``A``."""
    if b < 2:
        raise ValueError("modulus must be >= 2")
    return len({int(a) % b for a in A})


def is_admissible(A: Iterable[int], bset: BFreeSet) -> bool:
    """``t(A, b) < b`` for every generator; only ``b <= |A|`` can fail."""
    A = sorted({int(a) for a in A})
    if not A:
        return True
    return all(residue_class_count(A, int(b)) < b for b in bset.generators_up_to(len(A)))


@lru_cache(maxsize=4096)
def _log_cylinder_positive(A: Tuple[int, ...], bset: BFreeSet) -> mpmath.mpf:
    span = A[-1] - A[0]
    with mpmath.workdps(WORKING_DPS):
        total = mpmath.mpf(0)
        for b in bset.generators_up_to(span):
            b = int(b)
            t = residue_class_count(A, b)
            if t >= b:
                return mpmath.ninf
            total += mpmath.log(1 - mpmath.mpf(t) / b)
        # beyond the span all elements of A are distinct modulo b
        return total + _log_product(bset, len(A), 2, span)


def cylinder_measure_positive(A: Iterable[int], bset: BFreeSet,
                              precision: float = DEFAULT_PRECISION) -> float:
    """Mirsky measure of ``{x : x_n = 1 for n in A}``."""
    _check_precision(precision)
    A = tuple(sorted({int(a) for a in A}))
    if not A:
        return 1.0
    if not is_admissible(A, bset):
        return 0.0
    shift = A[0] - 1  # the measure is shift invariant
    with mpmath.workdps(WORKING_DPS):
        return float(mpmath.exp(_log_cylinder_positive(tuple(a - shift for a in A), bset)))


def cylinder_measure(A: Iterable[int], B: Iterable[int], bset: BFreeSet,
                     precision: float = DEFAULT_PRECISION) -> float:
    """Mirsky measure of the cylinder with ones on ``A`` and zeros on ``B``
    (inclusion-exclusion over ``A <= D <= A u B``)."""
    _check_precision(precision)
    A = sorted({int(a) for a in A})
    B = sorted({int(b) for b in B})
    if set(A) & set(B):
        raise ValueError("A and B must be disjoint")
    if len(B) > MAX_FREE_POSITIONS:
        raise TooManyFreePositions(f"|B| = {len(B)} exceeds {MAX_FREE_POSITIONS}")
    with mpmath.workdps(WORKING_DPS):
        total = mpmath.mpf(0)
        for r in range(len(B) + 1):
            for extra in combinations(B, r):
                D = tuple(sorted(A + list(extra)))
                if not D:
                    total += (-1) ** r
                    continue
                shift = D[0] - 1
                lg = _log_cylinder_positive(tuple(d - shift for d in D), bset)
                if lg != mpmath.ninf:
                    total += (-1) ** r * mpmath.exp(lg)
        return float(total)


def euler_zeta(t: float, s: float, bset: BFreeSet, precision: float = DEFAULT_PRECISION) -> float:
    """``zeta^B_t(s) = prod_k (1 - t / b_k^(s/2))^(-1)``."""
    _check_precision(precision)
    lg = _log_product(bset, t, s, 0)
    if lg == mpmath.ninf:
        raise Divergent(f"a factor of zeta^B_{t}({s}) vanishes")
    with mpmath.workdps(WORKING_DPS):
        return float(mpmath.exp(-lg))


def prime_zeta_product(a: float, s: float, precision: float = DEFAULT_PRECISION) -> float:
    """``zeta_a(s) = prod_p (1 - a/p^s)^(-1)`` over all primes."""
    if s <= 1:
        raise Divergent("zeta_a(s) needs s > 1")
    # equals zeta^B_a(s) for B = {p^2}, since b^(s/2) = p^s
    return euler_zeta(a, s, BFreeSet.squarefree(), precision)


def _composition_weights(n: int) -> np.ndarray:
    """``C[s, J] = sum over 0 = j_0 < j_1 < ... < j_s = J of prod (j_i - j_{i-1} + 1)``."""
    C = np.zeros((n + 1, n + 1), dtype=object)
    C[0, 0] = 1
    for s in range(1, n + 1):
        for J in range(s, n + 1):
            C[s, J] = sum(C[s - 1, i] * (J - i + 1) for i in range(s - 1, J))
    return C


def bfree_exact_frequencies(bset: BFreeSet, precision: float = DEFAULT_PRECISION) -> FrequencyTable:
    """Exact frequencies ``F_{1^k}``, ``1 <= k < b_1``, by two routes.

    * alternating sums with ``S^(0) = 1/zeta^B_k(2)`` and
      ``S^(s) = sum_J C[s, J] / zeta^B_{k+J}(2)``;
    * telescoping ``F_{1^k} = nu([1^k 0]) - nu([1^(k+1) 0])``.

    Raises MethodDisagreement if they differ by more than ``10 * precision``.
    """
    _check_precision(precision)
    b1 = bset.first
    L = b1 - 1
    zetas = {t: euler_zeta(t, 2, bset, precision) for t in range(1, L + 1)}
    nu_ones = {t: 1.0 / zetas[t] for t in zetas}
    C = _composition_weights(L)
    alt, chains = {}, {}
    for k in range(1, L + 1):
        top = L - k
        S = [nu_ones[k]]
        for s in range(1, top + 1):
            S.append(float(sum(int(C[s, J]) * nu_ones[k + J] for J in range(s, top + 1))))
        chains[k] = S
        alt[k] = float(sum((-1) ** s * S[s] for s in reversed(range(len(S)))))
    tele = {}
    for k in range(1, L + 1):
        a = cylinder_measure(range(1, k + 1), [k + 1], bset, precision)
        b = cylinder_measure(range(1, k + 2), [k + 2], bset, precision) if k < L else 0.0
        tele[k] = a - b
    worst = max(abs(alt[k] - tele[k]) for k in alt)
    if worst > 10 * precision:
        raise MethodDisagreement(
            f"alternating-sum and telescoping frequencies differ by {worst:.3g}")
    exact = {(1,) * k: alt[k] for k in alt}
    return FrequencyTable(
        rho0=1.0 - nu_ones[1],
        exact=exact,
        method="mirsky",
        meta={
            "b1": b1,
            "zeta": zetas,
            "telescoping": {(1,) * k: tele[k] for k in tele},
            "chain_sums": {(1,) * k: chains[k] for k in chains},
            "route_discrepancy": worst,
        },
    )


def zero_run_frequency(bset: BFreeSet, s: int, precision: float = DEFAULT_PRECISION) -> float:
    """``F_{0^s} = nu([0^s 1]) - nu([0^(s+1) 1])`` (not needed by the Lyapunov formulas)."""
    if s + 1 > MAX_FREE_POSITIONS:
        raise TooManyFreePositions(f"zero runs longer than {MAX_FREE_POSITIONS - 1} not supported")
    a = cylinder_measure([s + 1], range(1, s + 1), bset, precision)
    b = cylinder_measure([s + 2], range(1, s + 2), bset, precision)
    return a - b
