"""Finite words over {1, ..., N}.

Digits are 0-based inside the library and 1-based in every string form
("1221"); ``Word.parse`` and ``str(word)`` are the only conversion points.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import OutOfRange, ValidationError

SKIP = object()
"""Return this from an ``enumerate_level`` visitor to prune the subtree."""


@dataclass(frozen=True)
class Word:
    digits: tuple  # 0-based
    alphabet_size: int = 2

    def __post_init__(self):
        if self.alphabet_size < 2:
            raise ValidationError("alphabet size must be at least 2")
        for d in self.digits:
            if not 0 <= d < self.alphabet_size:
                raise OutOfRange(f"digit {d + 1} outside 1..{self.alphabet_size}")

    @classmethod
    def parse(cls, text: str, alphabet_size: int = 2) -> "Word":
        text = text.strip()
        if text in ("", "-", "()"):
            return cls((), alphabet_size)
        try:
            digits = tuple(int(ch) - 1 for ch in text)
        except ValueError:
            raise ValidationError(f"not a digit string: {text!r}") from None
        return cls(digits, alphabet_size)

    @classmethod
    def empty(cls, alphabet_size: int = 2) -> "Word":
        return cls((), alphabet_size)

    def __len__(self):
        return len(self.digits)

    def __str__(self):
        return "".join(str(d + 1) for d in self.digits)

    def __iter__(self):
        return iter(self.digits)

    def __getitem__(self, k):
        return self.digits[k]


def restrict(w: Word, n: int) -> Word:
    """The prefix w|_n."""
    if not 0 <= n <= len(w):
        raise OutOfRange(f"cannot restrict a word of length {len(w)} to {n}")
    return Word(w.digits[:n], w.alphabet_size)


def parent(w: Word) -> Word:
    if len(w) == 0:
        raise OutOfRange("the empty word has no parent")
    return restrict(w, len(w) - 1)


def reverse(w: Word) -> Word:
    return Word(w.digits[::-1], w.alphabet_size)


def concat(w1: Word, w2: Word) -> Word:
    if w1.alphabet_size != w2.alphabet_size:
        raise ValidationError("alphabet sizes differ")
    return Word(w1.digits + w2.digits, w1.alphabet_size)


def periodic(pattern: Word, n: int) -> Word:
    """pattern repeated and truncated to length n."""
    if n < 0:
        raise OutOfRange("negative length")
    if len(pattern) == 0:
        if n:
            raise OutOfRange("cannot repeat the empty word")
        return pattern
    reps = -(-n // len(pattern))
    return Word((pattern.digits * reps)[:n], pattern.alphabet_size)


def enumerate_level(N: int, n: int, visitor: Optional[Callable] = None) -> int:
    """Depth-first lexicographic walk over the tree of words of length <= n.

    ``visitor(word)`` is called on every node except the root. Returning
    ``SKIP`` prunes the subtree below that node. The return value counts
    terminal visits: leaves of length n that were reached plus pruned roots,
    so with no pruning it equals N**n.
    """
    if n < 0:
        raise OutOfRange("negative depth")
    if N < 2:
        raise ValidationError("alphabet size must be at least 2")
    visits = 0
    stack = [(d,) for d in range(N - 1, -1, -1)] if n > 0 else []
    while stack:
        word = stack.pop()
        result = visitor(Word(word, N)) if visitor is not None else None
        if result is SKIP or len(word) == n:
            visits += 1
            continue
        stack.extend(word + (d,) for d in range(N - 1, -1, -1))
    return visits


def leaves(N: int, n: int) -> np.ndarray:
    """All words of length n as an (N**n, n) array of 0-based digits, lexicographic."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices((N,) * n).reshape(n, -1).T
    return grids.astype(np.int64)
