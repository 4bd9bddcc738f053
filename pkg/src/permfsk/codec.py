"""Threshold demodulation and max-agreement decoding.

The threshold demodulator reports, per symbol slot, every tone whose
envelope exceeds its threshold, so the decoder sees a set of tones per
slot rather than a single hard decision.  The decoder picks the codeword
whose symbols appear in the most slots and reports ties instead of
breaking them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from permfsk.permcode import CodeBook


@dataclass(frozen=True)
class DemodFrame:
    """Multi-valued demodulator output: one tone set per symbol slot."""

    slots: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "slots", tuple(frozenset(int(t) for t in s) for s in self.slots))
        M = len(self.slots)
        for s in self.slots:
            if any(not 1 <= t <= M for t in s):
                raise ValueError(f"slot {sorted(s)} has tones outside 1..{M}")

    @classmethod
    def of(cls, *slots: Iterable[int]) -> DemodFrame:
        return cls(tuple(frozenset(s) for s in slots))

    @classmethod
    def from_word(cls, word: Sequence[int]) -> DemodFrame:
        return cls(tuple(frozenset([int(t)]) for t in word))

    @property
    def M(self) -> int:
        return len(self.slots)

    def __len__(self) -> int:
        return len(self.slots)

    def as_tuples(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(sorted(s)) for s in self.slots)

    def to_mask(self) -> np.ndarray:
        """Boolean ``(M, M)`` array indexed ``[slot, tone - 1]``."""
        mask = np.zeros((self.M, self.M), dtype=bool)
        for k, s in enumerate(self.slots):
            for t in s:
                mask[k, t - 1] = True
        return mask

    def to_text(self) -> str:
        lines = [",".join(str(t) for t in sorted(s)) if s else "-" for s in self.slots]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> DemodFrame:
        """One line per slot: comma-separated 1-based tones, ``-`` if empty."""
        slots = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line == "-":
                slots.append(frozenset())
            else:
                slots.append(frozenset(int(x) for x in line.split(",")))
        return cls(tuple(slots))


@dataclass(frozen=True)
class Thresholds:
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(v <= 0 for v in self.values):
            raise ValueError("thresholds must be positive")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def make_thresholds(
    Es: float | Sequence[float],
    noise_margin: float = 0.0,
    noise_sigma: float | Sequence[float] = 0.0,
    M: int | None = None,
) -> Thresholds:
    """Per-tone thresholds ``sqrt(Es_i)/2 + c * sigma_i``.

    Scalars are broadcast to ``M`` tones (``M`` defaults to 1 when every
    argument is scalar).
    """
    Es_arr = np.atleast_1d(np.asarray(Es, dtype=float))
    sigma = np.atleast_1d(np.asarray(noise_sigma, dtype=float))
    if np.any(Es_arr <= 0):
        raise ValueError("per-tone energy must be positive")
    if noise_margin < 0:
        raise ValueError("noise margin must be non-negative")
    n = M or max(len(Es_arr), len(sigma))
    T = np.sqrt(Es_arr) / 2 + noise_margin * sigma
    return Thresholds(tuple(float(x) for x in np.broadcast_to(T, (n,))))


def threshold_demodulate(envelopes: np.ndarray, thresholds: Thresholds) -> DemodFrame:
    """Tones whose envelope strictly exceeds their threshold, per slot.

    ``envelopes`` is ``(slots, M)``.
    """
    env = np.asarray(envelopes, dtype=float)
    T = thresholds.as_array()
    hit = env > T[None, :]
    return DemodFrame(tuple(frozenset((np.flatnonzero(row) + 1).tolist()) for row in hit))


def agreement_score(word: Sequence[int], frame: DemodFrame) -> int:
    """Number of slots whose detected set contains the codeword symbol."""
    if len(word) != frame.M:
        raise ValueError(f"length mismatch: word {len(word)}, frame {frame.M}")
    return sum(int(t) in s for t, s in zip(word, frame.slots))


class DecisionKind(str, Enum):
    UNIQUE = "unique"
    TIE = "tie"
    EMPTY = "empty"


@dataclass(frozen=True)
class Decision:
    kind: DecisionKind
    message: int | None
    candidates: frozenset[int]
    score: int


def decode_max_agreement(frame: DemodFrame, code: CodeBook) -> Decision:
    """Max-agreement decoding with 0-based message indices.

    A frame matching no codeword symbol at all (every score 0) is reported
    as ``EMPTY``; several maximisers as ``TIE``.
    """
    if len(code.words) == 0:
        raise ValueError("empty codebook")
    if frame.M != code.M:
        raise ValueError(f"frame length {frame.M} != code length {code.M}")
    scores = [agreement_score(w, frame) for w in code.words]
    top = max(scores)
    winners = frozenset(i for i, s in enumerate(scores) if s == top)
    if top == 0:
        return Decision(DecisionKind.EMPTY, None, winners, 0)
    if len(winners) == 1:
        return Decision(DecisionKind.UNIQUE, next(iter(winners)), winners, top)
    return Decision(DecisionKind.TIE, None, winners, top)


# -- vectorised forms used by the Monte Carlo driver ---------------------------


def batch_threshold(envelopes: np.ndarray, thresholds: np.ndarray | float) -> np.ndarray:
    """Boolean detection masks ``envelopes > thresholds`` (last axis = tone)."""
    return np.asarray(envelopes) > thresholds


def batch_scores(masks: np.ndarray, code: CodeBook) -> np.ndarray:
    """Agreement scores ``(B, |C|)`` for detection masks ``(B, M, M)``."""
    words = code.as_array() - 1
    slots = np.arange(code.M)
    # masks[:, k, words[c, k]] -> (B, |C|, M)
    return masks[:, slots[None, :], words].sum(axis=2)


def batch_decode(scores: np.ndarray, tx_index: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-trial (correct, tie) flags from score matrices.

    Correct means the transmitted index is the unique maximiser; an
    all-zero score row counts as a tie among every word.
    """
    top = scores.max(axis=1)
    n_top = (scores == top[:, None]).sum(axis=1)
    tie = n_top > 1
    tx_score = np.take_along_axis(scores, tx_index[:, None], axis=1)[:, 0]
    correct = (~tie) & (tx_score == top) & (top > 0)
    return correct, tie


def default_thresholds(M: int, Es: float = 1.0) -> Thresholds:
    return Thresholds((math.sqrt(Es) / 2,) * M)
