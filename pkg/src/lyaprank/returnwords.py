"""Return words to the symbol 0 and their empirical statistics.

A prefix ``x`` containing 0 is written as

    head 0^t0  w1 0^t1  w2 0^t2 ... wr 0^tr  residual

where head, the return words ``wj`` and the residual contain no 0 and
every ``tj >= 1``. When the prefix ends in 0 the last block is closed and
the residual is empty; when it ends in a nonzero symbol those trailing
symbols are the residual (a prefix of a not yet completed return word).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import NoZeroSymbol
from .words import Word, WordLike, as_array, as_word, count_occurrences, sliding_count, word_str

DEFAULT_MAX_RETURN_LEN = 64
RHO0_DECAY_RATIO = 0.75  # rho0(n) / rho0(n/4) below this flags a vanishing frequency of 0

METHODS = ("empirical", "michel", "durand", "inclusionExclusion", "mirsky", "bernoulli", "markov")


@dataclass
class FrequencyTable:
    """Frequency of 0 and exact frequencies ``F_w`` of return words.

    ``exact[w]`` is the frequency of the block ``0 w 0``. ``meta`` carries
    method specific extras (cylinder frequencies, truncation bounds, ...).
    """

    rho0: float
    exact: Dict[Word, float]
    method: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.exact = {as_word(w): float(f) for w, f in self.exact.items()}
        if not -1e-12 <= self.rho0 <= 1 + 1e-12:
            raise ValueError(f"rho0={self.rho0} outside [0, 1]")
        bad = {word_str(w): f for w, f in self.exact.items() if f < -1e-12}
        if bad:
            raise ValueError(f"negative exact frequencies: {bad}")
        if any(0 in w or not w for w in self.exact):
            raise ValueError("return words must be nonempty and 0-free")

    def weighted_length(self) -> float:
        """``sum_w |w| F_w``; at most ``1 - rho0`` for a genuine table."""
        return float(sum(len(w) * f for w, f in self.exact.items()))

    def length_gap(self) -> float:
        """``1 - rho0 - sum |w| F_w`` (nonnegative up to truncation error)."""
        return 1.0 - self.rho0 - self.weighted_length()

    def sorted_words(self) -> List[Word]:
        return sorted(self.exact, key=lambda w: (len(w), w))

    def rows(self) -> List[Tuple[str, float]]:
        return [(word_str(w), self.exact[w]) for w in self.sorted_words()]

    def max_discrepancy(self, other: "FrequencyTable") -> float:
        words = set(self.exact) | set(other.exact)
        diffs = [abs(self.exact.get(w, 0.0) - other.exact.get(w, 0.0)) for w in words]
        diffs.append(abs(self.rho0 - other.rho0))
        return max(diffs)


@dataclass
class ReturnWordDecomposition:
    head: Word
    head_zeros: int
    blocks: List[Tuple[Word, int]]
    residual: Word
    total_length: int

    def reassemble(self) -> Word:
        out = list(self.head) + [0] * self.head_zeros
        for w, t in self.blocks:
            out.extend(w)
            out.extend([0] * t)
        out.extend(self.residual)
        return tuple(out)

    @property
    def zero_count(self) -> int:
        return self.head_zeros + sum(t for _, t in self.blocks)


@dataclass
class ReturnWordStats:
    return_word_counts: Dict[Word, int]
    zero_count: int
    gap_lengths: Counter
    head_length: int
    residual_length: int
    n: int
    long_word_count: int = 0
    long_word_letters: int = 0

    def accounted_length(self) -> int:
        """Left side of the length identity; equals ``n`` exactly."""
        counted = sum(len(w) * c for w, c in self.return_word_counts.items())
        return (counted + self.long_word_letters + self.zero_count
                + self.head_length + self.residual_length)


def _runs(x: np.ndarray):
    """Run-length encoding: (values, starts, lengths) of maximal constant runs
    of the predicate ``x == 0``."""
    z = (x == 0)
    change = np.flatnonzero(z[1:] != z[:-1]) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [x.size]))
    return z[starts], starts, ends - starts


def decompose(prefix: WordLike) -> ReturnWordDecomposition:
    x = as_array(prefix)
    if x.size == 0 or not np.any(x == 0):
        raise NoZeroSymbol("prefix contains no 0")
    is_zero, starts, lengths = _runs(x)
    k = 0
    head: Word = ()
    if not is_zero[0]:
        head = tuple(int(c) for c in x[: lengths[0]])
        k = 1
    head_zeros = int(lengths[k])
    k += 1
    blocks = []
    residual: Word = ()
    while k < len(starts):
        w = tuple(int(c) for c in x[starts[k]: starts[k] + lengths[k]])
        if k + 1 < len(starts):
            blocks.append((w, int(lengths[k + 1])))
        else:
            residual = w
        k += 2
    return ReturnWordDecomposition(head, head_zeros, blocks, residual, int(x.size))


def _gaps(x: np.ndarray):
    """Start offsets and lengths of the 0-free words between consecutive zeros."""
    zpos = np.flatnonzero(x == 0)
    gaps = np.diff(zpos) - 1
    keep = gaps > 0
    return zpos, zpos[:-1][keep] + 1, gaps[keep]


def _group_words(x: np.ndarray, starts: np.ndarray, lengths: np.ndarray,
                 max_len: Optional[int]) -> Dict[Word, int]:
    counts: Dict[Word, int] = {}
    for L in np.unique(lengths):
        L = int(L)
        if max_len is not None and L > max_len:
            continue
        s = starts[lengths == L]
        block = x[s[:, None] + np.arange(L)[None, :]]
        uniq, cnt = np.unique(block, axis=0, return_counts=True)
        for row, c in zip(uniq, cnt):
            counts[tuple(int(v) for v in row)] = int(c)
    return counts


def return_word_stats(prefix: WordLike, max_return_len: Optional[int] = None) -> ReturnWordStats:
    x = as_array(prefix)
    if x.size == 0 or not np.any(x == 0):
        raise NoZeroSymbol("prefix contains no 0")
    zpos, starts, lengths = _gaps(x)
    counts = _group_words(x, starts, lengths, max_return_len)
    long_mask = lengths > max_return_len if max_return_len is not None else np.zeros(lengths.size, bool)
    is_zero, _, run_len = _runs(x)
    gap_lengths = Counter(int(t) for t in run_len[is_zero])
    return ReturnWordStats(
        return_word_counts=counts,
        zero_count=int(zpos.size),
        gap_lengths=gap_lengths,
        head_length=int(zpos[0]),
        residual_length=int(x.size - 1 - zpos[-1]),
        n=int(x.size),
        long_word_count=int(np.count_nonzero(long_mask)),
        long_word_letters=int(lengths[long_mask].sum()),
    )


def empirical_frequency(prefix: WordLike, pattern: WordLike) -> float:
    """``N_n(pattern | prefix) / n``."""
    x = as_array(prefix)
    if x.size == 0:
        return 0.0
    return sliding_count(x, pattern) / x.size


def empirical_exact_frequencies(prefix: WordLike,
                                max_return_len: int = DEFAULT_MAX_RETURN_LEN) -> FrequencyTable:
    """``F_w = N_n(0w0)/n`` for every observed return word with ``|w| <= max_return_len``."""
    x = as_array(prefix)
    n = x.size
    if n == 0:
        raise NoZeroSymbol("empty prefix")
    zeros = int(np.count_nonzero(x == 0))
    if zeros == 0:
        raise NoZeroSymbol("prefix contains no 0")
    _, starts, lengths = _gaps(x)
    counts = _group_words(x, starts, lengths, max_return_len)
    exact = {w: c / n for w, c in counts.items()}
    long_mask = lengths > max_return_len
    ratio = zero_frequency_decay(x)
    return FrequencyTable(
        rho0=zeros / n,
        exact=exact,
        method="empirical",
        meta={
            "n": n,
            "max_return_len": max_return_len,
            "untabulated_blocks": int(np.count_nonzero(long_mask)),
            "rho0_decay_ratio": ratio,
            "rho0_vanishing": ratio < RHO0_DECAY_RATIO,
        },
    )


def zero_frequency_decay(prefix: WordLike) -> float:
    """``rho0(n) / rho0(n/4)`` on nested prefixes.

    Close to 1 when 0 has a positive frequency; about 1/2 for the block
    sequence 0 1 0 11 0 111 ... whose zero count grows like sqrt(n).
    """
    x = as_array(prefix)
    q = x.size // 4
    if q == 0:
        return 1.0
    early = np.count_nonzero(x[:q] == 0) / q
    if early == 0:
        return 1.0
    return float(np.count_nonzero(x == 0) / x.size / early)


def empirical_cylinder_frequencies(prefix: WordLike, words) -> Dict[Word, float]:
    x = as_array(prefix)
    return {as_word(w): empirical_frequency(x, w) for w in words}


def consistency_residuals(table: FrequencyTable, cylinder: Dict[Word, float]) -> Dict[Word, float]:
    """``nu([w]) - F_w - sum_{|w'|>|w|} N_w(w') F_w'`` for every tabulated ``w``.

    Vanishes identically when the return-word set is finite and the
    frequencies come from one invariant measure.
    """
    out = {}
    for w in table.exact:
        rhs = table.exact[w]
        for w2, f2 in table.exact.items():
            if len(w2) > len(w):
                rhs += count_occurrences(w, w2) * f2
        out[w] = cylinder[w] - rhs
    return out
