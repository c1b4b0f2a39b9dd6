"""Symbol sequences that select the matrices of a product.

All sequences are indexed from 0. The B-free characteristic sequence is
naturally indexed by the integers k >= 1; integer k is stored at
position k - 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from . import _kernels
from .errors import (
    ConfigError,
    InvalidSubstitution,
    NotGrowing,
    NotProlongable,
    NotStochastic,
    ZeroMassOnSymbolZero,
)
from .words import Word, as_word

if TYPE_CHECKING:
    from .mirsky import BFreeSet

STOCHASTIC_TOL = 1e-12


def _dtype_for(alphabet_size: int):
    return np.uint8 if alphabet_size <= 256 else np.int64


@dataclass(frozen=True)
class Substitution:
    """A substitution ``letter -> nonempty word`` on {0, ..., s-1}.

    ``seed`` is the letter whose iterates converge to the fixed point.
    """

    images: tuple
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        images = tuple(as_word(w) for w in self.images)
        object.__setattr__(self, "images", images)
        s = len(images)
        if s < 1:
            raise InvalidSubstitution("substitution needs at least one letter")
        for a, img in enumerate(images):
            if not img:
                raise InvalidSubstitution(f"image of letter {a} is empty")
            if any(c < 0 or c >= s for c in img):
                raise InvalidSubstitution(
                    f"image of letter {a} uses a symbol outside 0..{s - 1}")
        if not 0 <= self.seed < s:
            raise InvalidSubstitution(f"seed letter {self.seed} outside alphabet")

    @property
    def alphabet_size(self) -> int:
        return len(self.images)

    @property
    def image_lengths(self) -> np.ndarray:
        return np.array([len(w) for w in self.images], dtype=np.int64)

    def apply(self, word) -> Word:
        out = []
        for c in as_word(word):
            out.extend(self.images[c])
        return tuple(out)

    def apply_array(self, x: np.ndarray) -> np.ndarray:
        """Vectorised image of a long word stored as an array."""
        lengths = self.image_lengths[x]
        ends = np.cumsum(lengths)
        starts = ends - lengths
        out = np.empty(int(ends[-1]) if x.size else 0,
                       dtype=_dtype_for(self.alphabet_size))
        for a, img in enumerate(self.images):
            idx = starts[x == a]
            for k, c in enumerate(img):
                out[idx + k] = c
        return out

    def power(self, k: int) -> "Substitution":
        imgs = [(a,) for a in range(self.alphabet_size)]
        for _ in range(k):
            imgs = [self.apply(w) for w in imgs]
        return Substitution(tuple(imgs), self.seed, f"{self.name}^{k}" if self.name else "")

    def growing_letters(self) -> list:
        """Letters ``b`` with ``|zeta^n(b)| -> infinity``.

        Lengths are nondecreasing; a bounded letter reaches its final length
        within ``s`` iterations, an unbounded one strictly grows between
        iterations ``s`` and ``2s``.
        """
        s = self.alphabet_size
        lengths = [1] * s
        history = [lengths]
        # |zeta^{n+1}(b)| = sum over letters c of zeta(b) of |zeta^n(c)|
        for _ in range(2 * s):
            lengths = [sum(lengths[c] for c in self.images[b]) for b in range(s)]
            history.append(lengths)
        return [b for b in range(s) if history[2 * s][b] > history[s][b]]

    def validate(self) -> None:
        img = self.images[self.seed]
        if img[0] != self.seed:
            raise NotProlongable(
                f"image of seed letter {self.seed} does not start with {self.seed}")
        grow = set(self.growing_letters())
        stuck = [b for b in range(self.alphabet_size) if b not in grow]
        if stuck:
            raise NotGrowing(f"letters {stuck} have bounded iterates")


FIBONACCI = Substitution(((0, 1), (0,)), 0, "fibonacci")
THUE_MORSE = Substitution(((0, 1), (1, 0)), 0, "thue-morse")
TRIBONACCI = Substitution(((0, 1), (0, 2), (0,)), 0, "tribonacci")
# 0 -> 01, 1 -> 100110: return words to 0 are 011, 0, 01
RETURN_EXAMPLE = Substitution(((0, 1), (1, 0, 0, 1, 1, 0)), 0, "return-example")

NAMED_SUBSTITUTIONS = {
    s.name: s for s in (FIBONACCI, THUE_MORSE, TRIBONACCI, RETURN_EXAMPLE)
}


def mbonacci(m: int) -> Substitution:
    """0 -> 01, 1 -> 02, ..., m-2 -> 0(m-1), m-1 -> 0."""
    imgs = [(0, j + 1) for j in range(m - 1)] + [(0,)]
    return Substitution(tuple(imgs), 0, f"{m}-bonacci")


def named_substitution(name: str) -> Substitution:
    try:
        return NAMED_SUBSTITUTIONS[name]
    except KeyError:
        raise ConfigError(
            f"unknown substitution {name!r}; known: {sorted(NAMED_SUBSTITUTIONS)}") from None


def substitution_fixed_point(sub: Substitution, n: int) -> np.ndarray:
    """Length-``n`` prefix of the fixed point ``zeta^inf(seed)``."""
    sub.validate()
    x = np.array([sub.seed], dtype=_dtype_for(sub.alphabet_size))
    while x.size < n:
        y = sub.apply_array(x)
        if y.size <= x.size:
            raise NotGrowing("fixed-point prefix stopped growing")
        x = y[: max(n, 1)] if y.size > n else y
    return x[:n]


def bfree_characteristic(bset: "BFreeSet", n: int, start: int = 1) -> np.ndarray:
    """``eta_k`` for ``k = start, ..., start + n - 1`` (1 iff k is B-free).

    Position ``i`` of the result holds ``eta_{start + i}``.
    """
    if n < 0:
        raise ConfigError("length must be nonnegative")
    hi = start + n - 1
    eta = np.ones(n, dtype=np.uint8)
    for b in bset.generators_up_to(hi):
        first = ((start + b - 1) // b) * b
        eta[first - start:: b] = 0
    return eta


def counterexample_sequence(n: int) -> np.ndarray:
    """Prefix of 0 1 0 11 0 111 0 1111 ... (blocks 0 1^k, k = 1, 2, ...)."""
    k = 1
    total = 0
    while total < n:
        total += k + 1
        k += 1
    ks = np.arange(1, k)
    out = np.ones(total, dtype=np.uint8)
    zero_pos = np.concatenate(([0], np.cumsum(ks + 1)[:-1]))
    out[zero_pos] = 0
    return out[:n]


def _check_probability(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < 1 or np.any(p < 0) or abs(p.sum() - 1.0) > STOCHASTIC_TOL:
        raise NotStochastic(f"not a probability vector: {p.tolist()}")
    return p


def stationary_vector(P) -> np.ndarray:
    """Solve ``pi P = pi``, ``sum(pi) = 1`` for a stochastic matrix."""
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise NotStochastic("transition matrix must be square")
    for row in P:
        _check_probability(row)
    m = P.shape[0]
    lhs = np.vstack([P.T - np.eye(m), np.ones(m)])
    rhs = np.zeros(m + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


# ---------------------------------------------------------------- sources


@dataclass(frozen=True)
class SubstitutionSource:
    sub: Substitution

    def generate(self, n: int) -> np.ndarray:
        return substitution_fixed_point(self.sub, n)


@dataclass(frozen=True)
class BFreeSource:
    bset: "BFreeSet"

    def generate(self, n: int) -> np.ndarray:
        return bfree_characteristic(self.bset, n)


@dataclass(frozen=True)
class BernoulliSource:
    p: tuple
    seed: int

    def __post_init__(self):
        p = _check_probability(np.asarray(self.p, dtype=float))
        if p[0] <= 0:
            raise ZeroMassOnSymbolZero("symbol 0 has probability 0")
        object.__setattr__(self, "p", tuple(float(x) for x in p))

    def generate(self, n: int) -> np.ndarray:
        rng = np.random.Generator(np.random.PCG64(self.seed))
        u = rng.random(n)
        cum = np.cumsum(self.p)
        cum[-1] = 1.0
        x = np.searchsorted(cum, u, side="right")
        return np.minimum(x, len(self.p) - 1).astype(_dtype_for(len(self.p)))


@dataclass(frozen=True)
class MarkovSource:
    P: tuple
    seed: int
    stationary: tuple = field(init=False)

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        pi = stationary_vector(P)
        if pi[0] <= 1e-15:
            raise ZeroMassOnSymbolZero("symbol 0 has stationary probability 0")
        object.__setattr__(self, "P", tuple(tuple(float(x) for x in row) for row in P))
        object.__setattr__(self, "stationary", tuple(float(x) for x in pi))

    def generate(self, n: int) -> np.ndarray:
        if n == 0:
            return np.zeros(0, dtype=np.uint8)
        rng = np.random.Generator(np.random.PCG64(self.seed))
        u = rng.random(n)
        cum_pi = np.cumsum(self.stationary)
        start = min(int(np.searchsorted(cum_pi, u[0], side="right")), len(cum_pi) - 1)
        cum_rows = np.cumsum(np.asarray(self.P), axis=1)
        cum_rows[:, -1] = 1.0
        walk = _kernels.markov_walk(cum_rows, start, u[1:])
        return walk.astype(_dtype_for(len(self.P)))


@dataclass(frozen=True)
class ExplicitSource:
    word: tuple

    def __post_init__(self):
        object.__setattr__(self, "word", as_word(self.word))

    def generate(self, n: int) -> np.ndarray:
        # may return fewer than n symbols; SequenceStream reports the shortfall
        return np.asarray(self.word[:n], dtype=np.int64)


@dataclass(frozen=True)
class CounterexampleSource:
    def generate(self, n: int) -> np.ndarray:
        return counterexample_sequence(n)


def sample_ergodic(source, n: int) -> np.ndarray:
    """Seeded Bernoulli or Markov sample of length ``n``."""
    if not isinstance(source, (BernoulliSource, MarkovSource)):
        raise ConfigError("sample_ergodic needs a Bernoulli or Markov source")
    return source.generate(n)


class SequenceStream:
    """Lazily extended prefix of a sequence source.

    Not safe for concurrent mutation; give each worker its own stream.
    """

    def __init__(self, source):
        self.source = source
        self._buf = np.zeros(0, dtype=np.uint8)

    def prefix(self, n: int) -> np.ndarray:
        if n > self._buf.size:
            self._buf = self.source.generate(max(n, 2 * self._buf.size))
            if self._buf.size < n:
                raise ConfigError(f"sequence has only {self._buf.size} symbols, {n} requested")
        return self._buf[:n]

    def __len__(self) -> int:
        return self._buf.size


def as_stream(obj) -> SequenceStream:
    if isinstance(obj, SequenceStream):
        return obj
    if isinstance(obj, Substitution):
        return SequenceStream(SubstitutionSource(obj))
    if hasattr(obj, "generate"):
        return SequenceStream(obj)
    return SequenceStream(ExplicitSource(tuple(np.asarray(obj).tolist())))


def prefix_of(obj, n: int) -> np.ndarray:
    return as_stream(obj).prefix(n)


def alphabet_of(obj: Sequence[int]) -> int:
    return int(np.max(obj)) + 1 if len(obj) else 0


__all__ = [
    "Substitution", "FIBONACCI", "THUE_MORSE", "TRIBONACCI", "RETURN_EXAMPLE",
    "NAMED_SUBSTITUTIONS", "mbonacci", "named_substitution",
    "substitution_fixed_point", "bfree_characteristic", "counterexample_sequence",
    "stationary_vector", "SubstitutionSource", "BFreeSource", "BernoulliSource",
    "MarkovSource", "ExplicitSource", "CounterexampleSource", "sample_ergodic",
    "SequenceStream", "as_stream", "prefix_of",
]
