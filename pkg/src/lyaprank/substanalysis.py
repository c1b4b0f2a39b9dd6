"""Exact frequencies for primitive substitutions.

Three analytic routes produce exact frequencies ``F_w`` of return words:

* ``exact_frequencies_via_durand``: Perron vector of the normalized
  derivative substitution on return words to [0];
* ``exact_frequencies_via_michel``: ``F_w = nu([0w0])`` read off the Perron
  vector of the induced substitution on words of length ``|w| + 2``;
* ``exact_frequencies_via_inclusion_exclusion``: alternating chain sums over
  the cylinder frequencies ``nu([w])`` of return words.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DecompositionFailure, MissingFrequency, NoConvergence, NotPrimitive
from .returnwords import FrequencyTable
from .sequences import Substitution, substitution_fixed_point
from .words import Word, as_word, count_occurrences, word_str

PERRON_TOL = 1e-12
PERRON_MAX_ITER = 100_000


def composition_matrix(sub: Substitution) -> np.ndarray:
    """``m[a, b]`` = number of occurrences of letter ``a`` in ``zeta(b)``."""
    s = sub.alphabet_size
    M = np.zeros((s, s), dtype=np.int64)
    for b, img in enumerate(sub.images):
        for a in img:
            M[a, b] += 1
    return M


def is_primitive(M) -> bool:
    """True iff some power of ``M`` is strictly positive.

    Uses the finite test ``(I + M)^(s-1) > 0`` (irreducibility) plus
    aperiodicity through Wielandt's bound ``M^(s^2 - 2s + 2) > 0``.
    """
    B = (np.asarray(M) > 0).astype(np.int64)
    s = B.shape[0]
    if s == 1:
        return bool(B[0, 0])
    N = s * s - 2 * s + 2
    P = B.copy()
    # Boolean power by repeated squaring; entries stay in {0, 1}.
    result = None
    base = P
    e = N
    while e:
        if e & 1:
            result = base if result is None else np.minimum(result @ base, 1)
        base = np.minimum(base @ base, 1)
        e >>= 1
    return bool(np.all(result > 0))


@dataclass
class PerronData:
    eigenvalue: float
    vector: np.ndarray
    iterations: int
    residual: float


def perron(M, tol: float = PERRON_TOL, max_iter: int = PERRON_MAX_ITER) -> PerronData:
    """Dominant eigenvalue and probability eigenvector of a primitive matrix."""
    M = np.asarray(M, dtype=float)
    if not is_primitive(M):
        raise NotPrimitive("matrix is not primitive")
    s = M.shape[0]
    v = np.full(s, 1.0 / s)
    for it in range(1, max_iter + 1):
        w = M @ v
        rho = w.sum()
        res = float(np.max(np.abs(w - rho * v)))
        if res <= tol * rho:
            return _polish(M, v, rho, res, it)
        v = w / rho
    raise NoConvergence(f"power iteration did not converge in {max_iter} steps (residual {res:.3g})")


def _polish(M: np.ndarray, v: np.ndarray, rho: float, res: float, it: int,
            extra: int = 500) -> PerronData:
    """Keep iterating past the tolerance until the residual stops improving."""
    best = PerronData(float(rho), v, it, res)
    stale = 0
    for k in range(extra):
        v = M @ v / rho
        w = M @ v
        rho = w.sum()
        res = float(np.max(np.abs(w - rho * v)))
        if res < best.residual:
            best = PerronData(float(rho), v, it + k + 1, res)
            stale = 0
        else:
            stale += 1
            if stale >= 10:
                break
    return best


# ------------------------------------------------------------ Michel


@dataclass
class InducedSubstitution:
    """The substitution induced on admissible words of length ``t``."""

    base: Substitution
    order: int
    alphabet: List[Word]
    images: List[Tuple[Word, ...]]

    def index(self) -> Dict[Word, int]:
        return {w: i for i, w in enumerate(self.alphabet)}

    def as_substitution(self) -> Substitution:
        idx = self.index()
        imgs = tuple(tuple(idx[x] for x in img) for img in self.images)
        return Substitution(imgs, 0, f"{self.base.name}_{self.order}")

    def composition_matrix(self) -> np.ndarray:
        return composition_matrix(self.as_substitution())


def _induced_image(sub: Substitution, w: Word, t: int) -> Tuple[Word, ...]:
    x = sub.apply(w)
    k = len(sub.images[w[0]])
    return tuple(x[i:i + t] for i in range(k))


def _require_primitive(sub: Substitution) -> None:
    if not is_primitive(composition_matrix(sub)):
        raise NotPrimitive(f"substitution {sub.name or sub.images} is not primitive")


def admissible_words(sub: Substitution, t: int) -> List[Word]:
    """Words of length ``t`` in the fixed point, in first-appearance order.

    Seeds the set from a prefix of length ``max(10^4, 10 s^t)`` and closes
    it under the induced substitution.
    """
    n = max(10_000, 10 * sub.alphabet_size ** t)
    x = substitution_fixed_point(sub, n)
    seen: Dict[Word, None] = {}
    windows = np.lib.stride_tricks.sliding_window_view(x, t)
    uniq, first = np.unique(windows, axis=0, return_index=True)
    for i in np.argsort(first):
        seen[tuple(int(c) for c in uniq[i])] = None
    queue = list(seen)
    while queue:
        w = queue.pop()
        for y in _induced_image(sub, w, t):
            if y not in seen:
                seen[y] = None
                queue.append(y)
    return list(seen)


def induced_substitution(sub: Substitution, t: int) -> InducedSubstitution:
    _require_primitive(sub)
    if t < 1:
        raise ValueError("order must be >= 1")
    if t == 1:
        alphabet = [(a,) for a in range(sub.alphabet_size)]
    else:
        alphabet = admissible_words(sub, t)
    images = [_induced_image(sub, w, t) for w in alphabet]
    return InducedSubstitution(sub, t, alphabet, images)


def frequencies_via_michel(sub: Substitution, t: int) -> Dict[Word, float]:
    """``nu([w])`` for every admissible word of length ``t``."""
    ind = induced_substitution(sub, t)
    if len(ind.alphabet) == 1:
        return {ind.alphabet[0]: 1.0}
    pd = perron(ind.composition_matrix())
    return {w: float(p) for w, p in zip(ind.alphabet, pd.vector)}


def return_words_via_admissible(sub: Substitution, max_len: int = 256) -> List[Word]:
    """Return words ``w`` (0-free, ``0w0`` admissible), found by growing ``t``
    until no admissible word ``0 c1 ... c(t-1)`` with all ``ci != 0`` is left."""
    found = []
    for t in range(2, max_len + 3):
        words = admissible_words(sub, t)
        found += [w[1:-1] for w in words
                  if w[0] == 0 and w[-1] == 0 and t > 2 and 0 not in w[1:-1]]
        if not any(w[0] == 0 and 0 not in w[1:] for w in words):
            return sorted(set(found), key=lambda w: (len(w), w))
    raise DecompositionFailure(f"return words longer than {max_len}")


def exact_frequencies_via_michel(sub: Substitution) -> FrequencyTable:
    """``F_w = nu([0w0])`` from the induced substitution of order ``|w|+2``."""
    _require_primitive(sub)
    R = return_words_via_admissible(sub)
    by_order: Dict[int, Dict[Word, float]] = {}
    exact = {}
    for w in R:
        t = len(w) + 2
        if t not in by_order:
            by_order[t] = frequencies_via_michel(sub, t)
        exact[w] = by_order[t][(0,) + w + (0,)]
    rho0 = frequencies_via_michel(sub, 1)[(0,)]
    return FrequencyTable(rho0, exact, "michel", {"return_words": R})


# ------------------------------------------------- inclusion-exclusion


def chain_sums(cyl_freq: Dict[Word, float], return_words: Iterable[Word]) -> Dict[Word, List[float]]:
    """``S_w^(j)`` for ``j = 0, 1, ...``: weighted sums over chains
    ``w < w' < ... < w^(j)`` of return words ordered by proper inclusion,
    weighted by occurrence counts and ``nu([w^(j)])``."""
    R = sorted({as_word(w) for w in return_words}, key=lambda w: (len(w), w))
    missing = [word_str(w) for w in R if w not in cyl_freq]
    if missing:
        raise MissingFrequency(f"no cylinder frequency for {missing}")
    N = {(a, b): count_occurrences(a, b) for a in R for b in R if len(b) > len(a)}
    ell = max((len(w) for w in R), default=0)
    S = {w: [float(cyl_freq[w])] for w in R}
    # S^(j)_w = sum_{w' > w} N_w(w') S^(j-1)_{w'}
    for j in range(1, ell + 1):
        prev = {w: S[w][j - 1] for w in R}
        for w in R:
            S[w].append(sum(N[(w, w2)] * prev[w2] for w2 in R
                            if len(w2) > len(w) and N[(w, w2)]))
    for w in R:
        S[w] = S[w][: ell - len(w) + 1]
    return S


def exact_frequencies_via_inclusion_exclusion(cyl_freq: Dict[Word, float],
                                              return_words: Iterable[Word],
                                              rho0: Optional[float] = None) -> FrequencyTable:
    """``F_w = sum_j (-1)^j S_w^(j)`` for a finite set of return words."""
    cyl = {as_word(k): float(v) for k, v in cyl_freq.items()}
    if rho0 is None:
        if (0,) not in cyl:
            raise MissingFrequency("frequency of [0] not supplied")
        rho0 = cyl[(0,)]
    S = chain_sums(cyl, return_words)
    exact = {}
    for w, terms in S.items():
        # alternating sum, longest chains first to limit cancellation
        exact[w] = float(sum((-1) ** j * s for j, s in reversed(list(enumerate(terms)))))
    return FrequencyTable(float(rho0), exact, "inclusionExclusion", {"chain_sums": S})


def exact_frequencies_michel_ie(sub: Substitution) -> FrequencyTable:
    """Inclusion-exclusion fed by Michel cylinder frequencies ``nu([w])``."""
    _require_primitive(sub)
    R = return_words_via_admissible(sub)
    cyl: Dict[Word, float] = {}
    for t in sorted({len(w) for w in R} | {1}):
        cyl.update(frequencies_via_michel(sub, t))
    return exact_frequencies_via_inclusion_exclusion(
        {w: cyl[w] for w in R}, R, rho0=cyl[(0,)])


# ------------------------------------------------------------ Durand


@dataclass
class DerivativeSubstitution:
    base: Substitution
    return_alphabet: List[Word]  # phi(i) for i = 0, ..., R-1
    eta: Substitution

    def phi(self, word: Iterable[int]) -> Word:
        out: List[int] = []
        for i in word:
            out.extend(self.return_alphabet[i])
        return tuple(out)

    def conjugacy_defects(self) -> List[int]:
        """Letters ``i`` with ``phi(eta(i)) != zeta(phi(i))`` (empty if conjugate)."""
        return [i for i, r in enumerate(self.return_alphabet)
                if self.phi(self.eta.images[i]) != self.base.apply(r)]


def _split_at_zeros(w: Word) -> List[Word]:
    if not w or w[0] != 0:
        raise DecompositionFailure(f"word {word_str(w)} does not start with 0")
    cuts = [i for i, c in enumerate(w) if c == 0] + [len(w)]
    return [w[a:b] for a, b in zip(cuts[:-1], cuts[1:])]


def _complete_returns_in_order(x: np.ndarray) -> List[Word]:
    zpos = np.flatnonzero(x == 0)
    seen: Dict[Word, None] = {}
    for a, b in zip(zpos[:-1], zpos[1:]):
        r = tuple(int(c) for c in x[a:b])
        if r not in seen:
            seen[r] = None
    return list(seen)


def derivative_substitution(sub: Substitution, max_prefix: int = 1 << 22) -> DerivativeSubstitution:
    """Normalized derivative substitution on the return words to [0]."""
    _require_primitive(sub)
    if sub.images[0][0] != 0:
        raise DecompositionFailure("zeta(0) must start with 0 to factor images over return words")
    n = 1024
    while True:
        x = substitution_fixed_point(sub, n)
        if np.count_nonzero(x == 0) >= 2:
            order = _complete_returns_in_order(x)
            closure = dict.fromkeys(order)
            queue = list(order)
            while queue:
                r = queue.pop()
                for piece in _split_at_zeros(sub.apply(r)):
                    if piece not in closure:
                        closure[piece] = None
                        queue.append(piece)
            if len(closure) == len(order):
                break
        if n >= max_prefix:
            raise DecompositionFailure("return words did not stabilise within the prefix budget")
        n *= 4
    index = {r: i for i, r in enumerate(order)}
    images = []
    for r in order:
        pieces = _split_at_zeros(sub.apply(r))
        try:
            images.append(tuple(index[p] for p in pieces))
        except KeyError as exc:
            raise DecompositionFailure(f"zeta({word_str(r)}) does not factor over return words") from exc
    eta = Substitution(tuple(images), 0, f"{sub.name}'" if sub.name else "")
    return DerivativeSubstitution(sub, order, eta)


def exact_frequencies_via_durand(sub: Substitution) -> FrequencyTable:
    """``F_w = lambda([0w]) mu([0])`` with ``lambda`` the Perron vector of eta."""
    ds = derivative_substitution(sub)
    mu0 = float(perron(composition_matrix(sub)).vector[0])
    if len(ds.return_alphabet) == 1:
        lam = np.ones(1)
    else:
        lam = perron(composition_matrix(ds.eta)).vector
    exact = {}
    for r, l in zip(ds.return_alphabet, lam):
        w = r[1:]
        if w:  # the return word "0" (adjacent zeros) only feeds rho0
            exact[w] = float(l) * mu0
    return FrequencyTable(mu0, exact, "durand",
                          {"return_alphabet": ds.return_alphabet, "lambda": lam.tolist()})


ROUTES = {
    "durand": exact_frequencies_via_durand,
    "michel": exact_frequencies_via_michel,
    "inclusionExclusion": exact_frequencies_michel_ie,
}
