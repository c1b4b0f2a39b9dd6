"""Finite words over the alphabet {0, 1, ..., m-1}.

Short words are plain tuples of ints (hashable, usable as dict keys).
Long sequence prefixes are ``numpy`` integer arrays; every function here
accepts either.
"""

from __future__ import annotations

from typing import Iterable, Sequence, Union

import numpy as np

Word = tuple
WordLike = Union[str, Sequence[int], np.ndarray]


def as_word(w: WordLike) -> Word:
    """Normalise ``"0110"``, ``[0, 1, 1, 0]`` or an array to a tuple of ints.

    Strings use one character per symbol; a comma separated string
    (``"0,12,3"``) is accepted for alphabets with more than ten letters.
    """
    if isinstance(w, str):
        s = w.strip()
        if not s:
            return ()
        if "," in s:
            return tuple(int(c) for c in s.split(","))
        return tuple(int(c) for c in s)
    return tuple(int(c) for c in w)


def as_array(w: WordLike) -> np.ndarray:
    if isinstance(w, np.ndarray):
        return w.astype(np.int64, copy=False)
    return np.asarray(as_word(w), dtype=np.int64)


def word_str(w: Iterable[int]) -> str:
    w = tuple(int(c) for c in w)
    if any(c >= 10 for c in w):
        return ",".join(str(c) for c in w)
    return "".join(str(c) for c in w)


def count_occurrences(pattern: WordLike, text: WordLike) -> int:
    """Number of (possibly overlapping) occurrences of ``pattern`` in ``text``.

    This is the left-to-right count used by the inclusion-exclusion
    formula for exact frequencies, so ``count_occurrences("1", "111") == 3``
    and ``count_occurrences("11", "111") == 2``.
    """
    p, t = as_word(pattern), as_word(text)
    k = len(p)
    if k == 0 or k > len(t):
        return 0
    return sum(1 for i in range(len(t) - k + 1) if t[i:i + k] == p)


def is_proper_subword(w: WordLike, w2: WordLike) -> bool:
    a, b = as_word(w), as_word(w2)
    return len(a) < len(b) and count_occurrences(a, b) > 0


def sliding_count(prefix: np.ndarray, pattern: WordLike) -> int:
    """Occurrences of ``pattern`` in ``prefix`` fitting entirely inside it."""
    x = as_array(prefix)
    p = as_word(pattern)
    k = len(p)
    n = x.size
    if k == 0:
        return n
    if k > n:
        return 0
    mask = x[: n - k + 1] == p[0]
    for i in range(1, k):
        mask &= x[i: n - k + 1 + i] == p[i]
    return int(np.count_nonzero(mask))
