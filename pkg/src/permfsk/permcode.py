"""Permutation codes under the Hamming metric.

A codeword is a tuple of the 1-based tone indices ``1..M`` in transmit
order, each appearing exactly once.  Codebooks are immutable and carry
their minimum distance.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

Codeword = tuple[int, ...]


class UndefinedDistanceError(ValueError):
    """Minimum distance requested for a code with fewer than two words."""


def as_codeword(symbols: Iterable[int], M: int | None = None) -> Codeword:
    word = tuple(int(s) for s in symbols)
    if M is None:
        M = len(word)
    if len(word) != M:
        raise ValueError(f"codeword {word} has length {len(word)}, expected {M}")
    if sorted(word) != list(range(1, M + 1)):
        raise ValueError(f"codeword {word} is not a permutation of 1..{M}")
    return word


def hamming_distance(a: Sequence[int], b: Sequence[int]) -> int:
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} != {len(b)}")
    return sum(x != y for x, y in zip(a, b))


def cardinality_bound(M: int, d: int) -> int:
    """Upper bound M!/(d-1)! on the size of a length-M permutation code
    with minimum distance d.  Exact integer arithmetic."""
    if M < 2:
        raise ValueError(f"M must be >= 2, got {M}")
    if not 2 <= d <= M:
        raise ValueError(f"d must lie in 2..{M}, got {d}")
    return math.factorial(M) // math.factorial(d - 1)


def _min_pairwise(words: np.ndarray) -> int:
    n = len(words)
    best = words.shape[1]
    # row-chunked: a full M=7 book has 5040 words
    chunk = max(1, 2_000_000 // max(n, 1))
    for start in range(0, n - 1, chunk):
        block = words[start:start + chunk]
        dist = (block[:, None, :] != words[None, :, :]).sum(axis=2)
        rows = np.arange(len(block))
        dist[rows, rows + start] = best + 1
        best = min(best, int(dist.min()))
        if best <= 2:
            break
    return best


@dataclass(frozen=True)
class CodeBook:
    """Ordered list of permutation codewords of length ``M``.

    ``d_min`` is computed on construction; it is ``None`` for books with a
    single word, where the minimum distance is undefined.
    """

    M: int
    words: tuple[Codeword, ...]
    d_min: int | None = field(init=False, compare=False)

    def __post_init__(self) -> None:
        if self.M < 2:
            raise ValueError(f"M must be >= 2, got {self.M}")
        words = tuple(as_codeword(w, self.M) for w in self.words)
        if not words:
            raise ValueError("a codebook needs at least one word")
        if len(set(words)) != len(words):
            raise ValueError("codebook words must be pairwise distinct")
        object.__setattr__(self, "words", words)
        d = _min_pairwise(np.array(words)) if len(words) >= 2 else None
        object.__setattr__(self, "d_min", d)

    @classmethod
    def from_words(cls, words: Iterable[Sequence[int]], sort: bool = True) -> CodeBook:
        words = [tuple(int(s) for s in w) for w in words]
        if not words:
            raise ValueError("a codebook needs at least one word")
        if sort:
            words.sort()
        return cls(len(words[0]), tuple(words))

    def __len__(self) -> int:
        return len(self.words)

    def __iter__(self):
        return iter(self.words)

    def as_array(self) -> np.ndarray:
        """Words as an ``(|C|, M)`` integer array of 1-based symbols."""
        return np.array(self.words, dtype=np.int64)

    def to_text(self) -> str:
        head = f"{self.M} {self.d_min or 0} {len(self.words)}"
        lines = [head] + [" ".join(str(s) for s in w) for w in self.words]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> CodeBook:
        """Parse the plain-text codebook format.

        First line ``M d_min count`` (``d_min`` is 0 for a one-word book),
        then one codeword per line as space-separated 1-based symbols.
        Word order is preserved.
        """
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty codebook file")
        try:
            M, d_min, count = (int(x) for x in lines[0].split())
        except ValueError as exc:
            raise ValueError(f"bad codebook header {lines[0]!r}") from exc
        rows = [tuple(int(x) for x in ln.split()) for ln in lines[1:]]
        if len(rows) != count:
            raise ValueError(f"header declares {count} words, file has {len(rows)}")
        book = cls(M, tuple(rows))
        if (book.d_min or 0) != d_min:
            raise ValueError(f"header d_min {d_min} does not match computed {book.d_min}")
        return book

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: str | Path) -> CodeBook:
        return cls.from_text(Path(path).read_text())


def min_distance(code: CodeBook | Sequence[Sequence[int]]) -> int:
    """Exact minimum pairwise Hamming distance, recomputed from the words."""
    words = code.words if isinstance(code, CodeBook) else list(code)
    if len(words) < 2:
        raise UndefinedDistanceError("minimum distance needs at least two codewords")
    lengths = {len(w) for w in words}
    if len(lengths) != 1:
        raise ValueError(f"codewords of mixed lengths {sorted(lengths)}")
    return _min_pairwise(np.array(words))


def _is_even(perm: Sequence[int]) -> bool:
    inversions = sum(
        1 for i in range(len(perm)) for j in range(i + 1, len(perm)) if perm[i] > perm[j]
    )
    return inversions % 2 == 0


def even_permutation_code(M: int) -> CodeBook:
    """The alternating group on M letters: M!/2 words at distance >= 3."""
    if M < 3:
        raise ValueError(f"M must be >= 3, got {M}")
    words = [p for p in itertools.permutations(range(1, M + 1)) if _is_even(p)]
    return CodeBook(M, tuple(words))


def encode(message: int, code: CodeBook) -> Codeword:
    """Codeword for a 0-based message index."""
    if not 0 <= message < len(code.words):
        raise ValueError(f"message {message} outside 0..{len(code.words) - 1}")
    return code.words[message]


# Codebooks printed in the literature, kept in their published row order.

EXAMPLE_CODE_M4 = CodeBook(4, ((1, 2, 3, 4), (2, 1, 4, 3), (3, 4, 1, 2), (4, 3, 2, 1)))

# a maximum M=4, d=3 code, in its published message order
M4_D3_CODE = CodeBook(
    4,
    (
        (1, 2, 3, 4),
        (1, 3, 4, 2),
        (2, 1, 4, 3),
        (2, 4, 3, 1),
        (3, 1, 2, 4),
        (3, 4, 1, 2),
        (4, 2, 1, 3),
        (4, 3, 2, 1),
        (1, 4, 2, 3),
        (2, 3, 1, 4),
        (3, 2, 4, 1),
        (4, 1, 3, 2),
    ),
)

# M=3 codes keyed by distance: all permutations, and the cyclic shifts
M3_CODES = {
    2: CodeBook(3, tuple(itertools.permutations((1, 2, 3)))),
    3: CodeBook(3, ((1, 2, 3), (2, 3, 1), (3, 1, 2))),
}

# maximum code sizes for M <= 5, keyed by (M, d)
MAX_CODE_SIZES = {
    (2, 2): 2,
    (3, 2): 6,
    (3, 3): 3,
    (4, 2): 24,
    (4, 3): 12,
    (4, 4): 4,
    (5, 2): 120,
    (5, 3): 60,
    (5, 4): 20,
    (5, 5): 5,
}
