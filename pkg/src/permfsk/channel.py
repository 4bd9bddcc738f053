"""Power-line channel: link budget and error injection.

Two levels of error injection share one scenario description:

* symbolic -- tone sets per slot are edited directly (jammers, impulses,
  insertions, deletions);
* stochastic -- envelopes are drawn from the noncoherent statistic with
  background noise and the same disturbances are added as envelope
  amplitude, to be thresholded by :func:`permfsk.codec.threshold_demodulate`.

Indices in scenarios are 1-based, both for tones and for slots.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from permfsk.codec import DemodFrame
from permfsk.modem import ModemParams, batch_envelopes, linear_to_db
from permfsk.permcode import MAX_CODE_SIZES

CENELEC_S_IN = 25.0  # W
BAND_EDGE_KHZ = 95.0
DEFAULT_DISTANCE_M = 500.0


def received_power(S_in: float, L: float) -> float:
    """Received power in W after ``L`` metres of a bad residential line."""
    if S_in <= 0 or L < 0:
        raise ValueError("need S_in > 0 and L >= 0")
    return S_in * 10.0 ** (-0.01 * L)


def worst_case_noise_psd(f: float) -> float:
    """Worst-case single-sided noise PSD in W/Hz at frequency ``f`` (Hz)."""
    if f < 0:
        raise ValueError("frequency must be non-negative")
    return 10.0 ** (-8.0 - 4e-5 * f)


def snr_lower_bound(
    B_kHz: float,
    S_in: float = CENELEC_S_IN,
    L: float = DEFAULT_DISTANCE_M,
    band_edge_kHz: float = BAND_EDGE_KHZ,
    M: int = 4,
) -> float:
    """Per-tone SNR bound (linear) for M tones filling the top ``B_kHz`` of
    the band.

    Received power is split evenly over M sub-bands of width B/M and the
    noise is evaluated at the lower band edge ``band_edge - B``, where it is
    worst.
    """
    if not 0 < B_kHz < band_edge_kHz:
        raise ValueError(f"bandwidth {B_kHz} kHz outside (0, {band_edge_kHz})")
    sub_band_hz = B_kHz / M * 1e3
    noise = worst_case_noise_psd((band_edge_kHz - B_kHz) * 1e3)
    return received_power(S_in, L) / (sub_band_hz * noise)


@dataclass(frozen=True)
class LinkBudgetRow:
    d_min: int
    code_size: int
    bandwidth_kHz: float
    snr: float

    @property
    def snr_db(self) -> float:
        return linear_to_db(self.snr)


def coded_bandwidth_kHz(b: float, M: int, code_size: int) -> float:
    return M * M * b / math.log2(code_size) / 1e3


def link_budget_table(
    b: float = 4800.0,
    M: int = 4,
    code_sizes: dict[int, int] | None = None,
    **bound_kwargs,
) -> list[LinkBudgetRow]:
    """One row per minimum distance: bandwidth and SNR lower bound.

    ``code_sizes`` maps d_min to codebook size; by default the maximum
    sizes for M=4 (24, 12, 4).
    """
    if code_sizes is None:
        code_sizes = {d: n for (m, d), n in MAX_CODE_SIZES.items() if m == M}
    rows = []
    for d in sorted(code_sizes):
        size = code_sizes[d]
        B = coded_bandwidth_kHz(b, M, size)
        rows.append(LinkBudgetRow(d, size, B, snr_lower_bound(B, M=M, **bound_kwargs)))
    return rows


def impulse_slot_count(signaling_rate: float, impulse_duration: float) -> int:
    """Worst-case number of consecutive slots touched by one impulse.

    An impulse can straddle a slot boundary, hence the extra slot.
    """
    if signaling_rate <= 0 or impulse_duration <= 0:
        raise ValueError("rate and duration must be positive")
    spans = impulse_duration * signaling_rate
    return math.ceil(round(spans, 9)) + 1


@dataclass(frozen=True)
class ImpulseProcess:
    """Impulse train with fixed duration and uniform inter-arrival times."""

    duration_s: float = 100e-6
    inter_arrival_s: tuple[float, float] = (0.1, 1.0)

    def __post_init__(self) -> None:
        lo, hi = self.inter_arrival_s
        if self.duration_s <= 0:
            raise ValueError("impulse duration must be positive")
        if not 0 < lo <= hi:
            raise ValueError(f"bad inter-arrival range {self.inter_arrival_s}")

    def arrivals(self, horizon_s: float, rng: np.random.Generator) -> np.ndarray:
        """Impulse start times in ``[0, horizon_s)``."""
        lo, hi = self.inter_arrival_s
        times = []
        t = rng.uniform(lo, hi)
        while t < horizon_s:
            times.append(t)
            t += rng.uniform(lo, hi)
        return np.array(times)

    def hit_slots(self, start_s: float, Ts: float) -> range:
        """0-based indices of the symbol slots overlapped by one impulse."""
        first = math.floor(start_s / Ts)
        last = math.ceil((start_s + self.duration_s) / Ts)
        return range(first, last)


# -- scenarios -----------------------------------------------------------------


def _pairs(items: Iterable[Sequence[int]]) -> frozenset[tuple[int, int]]:
    return frozenset((int(s), int(t)) for s, t in items)


@dataclass(frozen=True)
class ChannelScenario:
    """Declarative disturbance pattern for one codeword transmission.

    ``insertions`` and ``deletions`` hold ``(slot, tone)`` pairs.  Amplitudes
    are in sqrt(J) at envelope level; ``None`` means ``sqrt(Es)``.
    """

    jammed_tones: frozenset[int] = frozenset()
    impulse_slots: frozenset[int] = frozenset()
    insertions: frozenset[tuple[int, int]] = frozenset()
    deletions: frozenset[tuple[int, int]] = frozenset()
    background_N: float = 0.0
    jammer_amplitude: float | None = None
    impulse_amplitude: float | None = None
    insertion_amplitude: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "jammed_tones", frozenset(int(t) for t in self.jammed_tones))
        object.__setattr__(self, "impulse_slots", frozenset(int(s) for s in self.impulse_slots))
        object.__setattr__(self, "insertions", _pairs(self.insertions))
        object.__setattr__(self, "deletions", _pairs(self.deletions))
        if self.background_N < 0:
            raise ValueError("background noise PSD must be non-negative")

    def validate(self, M: int) -> None:
        bad_tones = [t for t in self.jammed_tones if not 1 <= t <= M]
        bad_slots = [s for s in self.impulse_slots if not 1 <= s <= M]
        for s, t in self.insertions | self.deletions:
            if not 1 <= s <= M:
                bad_slots.append(s)
            if not 1 <= t <= M:
                bad_tones.append(t)
        if bad_tones or bad_slots:
            raise ValueError(
                f"scenario indices outside 1..{M}: tones {sorted(set(bad_tones))}, "
                f"slots {sorted(set(bad_slots))}"
            )

    def normalized(self, tx: Sequence[int]) -> ChannelScenario:
        """Drop deletions of tones that were not sent and insertions of
        tones that were."""
        self.validate(len(tx))
        sent = {(k + 1, int(tone)) for k, tone in enumerate(tx)}
        return replace(self, insertions=self.insertions - sent, deletions=self.deletions & sent)

    @property
    def event_count(self) -> int:
        return (
            len(self.jammed_tones)
            + len(self.impulse_slots)
            + len(self.insertions)
            + len(self.deletions)
        )

    def to_dict(self) -> dict:
        return {
            "jammed_tones": sorted(self.jammed_tones),
            "impulse_slots": sorted(self.impulse_slots),
            "insertions": [list(p) for p in sorted(self.insertions)],
            "deletions": [list(p) for p in sorted(self.deletions)],
            "background_N": self.background_N,
            "jammer_amplitude": self.jammer_amplitude,
            "impulse_amplitude": self.impulse_amplitude,
            "insertion_amplitude": self.insertion_amplitude,
        }

    @classmethod
    def from_dict(cls, data: dict) -> ChannelScenario:
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown scenario fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> ChannelScenario:
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def apply_scenario_symbolic(tx: Sequence[int], scenario: ChannelScenario) -> DemodFrame:
    """Demodulator output under a scenario, ignoring background noise.

    Per slot: the sent tone, replaced by every tone in an impulse slot,
    plus jammed tones and insertions, minus deletions.
    """
    M = len(tx)
    sc = scenario.normalized(tx)
    everything = frozenset(range(1, M + 1))
    slots = []
    for k, tone in enumerate(tx, start=1):
        tones = set(everything) if k in sc.impulse_slots else {int(tone)}
        tones |= sc.jammed_tones
        tones |= {t for s, t in sc.insertions if s == k}
        tones -= {t for s, t in sc.deletions if s == k}
        slots.append(frozenset(tones))
    return DemodFrame(tuple(slots))


def scenario_envelopes(
    words: np.ndarray,
    scenario: ChannelScenario,
    Es: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Envelope arrays for a batch of transmitted words.

    ``words`` is ``(B, M)`` of 1-based tones; the result is ``(B, M, M)``
    indexed ``[trial, slot, tone]``.  Insertions and deletions are applied
    per trial relative to the word sent in that trial, as in
    :meth:`ChannelScenario.normalized`.
    """
    words = np.asarray(words)
    B, M = words.shape
    scenario.validate(M)
    env = batch_envelopes(words, M, Es, scenario.background_N, rng)
    unit = math.sqrt(Es)
    if scenario.jammed_tones:
        amp = unit if scenario.jammer_amplitude is None else scenario.jammer_amplitude
        idx = np.array(sorted(scenario.jammed_tones)) - 1
        env[:, :, idx] += amp
    if scenario.impulse_slots:
        amp = unit if scenario.impulse_amplitude is None else scenario.impulse_amplitude
        idx = np.array(sorted(scenario.impulse_slots)) - 1
        env[:, idx, :] += amp
    amp = unit if scenario.insertion_amplitude is None else scenario.insertion_amplitude
    for slot, tone in sorted(scenario.insertions):
        not_sent = words[:, slot - 1] != tone
        env[not_sent, slot - 1, tone - 1] += amp
    for slot, tone in sorted(scenario.deletions):
        sent = words[:, slot - 1] == tone
        env[sent, slot - 1, tone - 1] = 0.0
    return env


def apply_scenario_stochastic(
    tx: Sequence[int],
    scenario: ChannelScenario,
    params: ModemParams,
    rng: np.random.Generator,
) -> np.ndarray:
    """Envelope vectors ``(M slots, M tones)`` for one transmitted word."""
    words = np.asarray(tx, dtype=np.int64)[None, :]
    if words.shape[1] != params.M:
        raise ValueError(f"word length {words.shape[1]} != M={params.M}")
    return scenario_envelopes(words, scenario, params.Es, rng)[0]
