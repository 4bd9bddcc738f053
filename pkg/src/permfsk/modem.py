"""M-ary FSK parameters, waveforms and noncoherent envelope statistics.

Envelopes are expressed in sqrt(energy) units: a noiseless tone of symbol
energy ``Es`` produces envelope ``sqrt(Es)`` on its own correlator pair and
zero on the others.  Noise of single-sided PSD ``N`` adds a circularly
symmetric complex Gaussian with variance ``N/2`` per component to every
correlator pair, so ``Es/N`` is the per-tone SNR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rice

from permfsk.permcode import cardinality_bound

ZERO_PHASE = "zero"
RANDOM_PHASE = "random"


@dataclass(frozen=True)
class ModemParams:
    M: int
    bit_rate: float
    code_size: int
    f0: float = 0.0
    Es: float = 1.0

    def __post_init__(self) -> None:
        if self.M < 2:
            raise ValueError(f"M must be >= 2, got {self.M}")
        if self.bit_rate <= 0:
            raise ValueError(f"bit rate must be positive, got {self.bit_rate}")
        if self.code_size < 2:
            raise ValueError(f"code size must be >= 2, got {self.code_size}")
        if self.Es <= 0:
            raise ValueError(f"symbol energy must be positive, got {self.Es}")

    @property
    def Ts(self) -> float:
        """Symbol (tone) duration in seconds."""
        return math.log2(self.code_size) / (self.M * self.bit_rate)

    @property
    def tone_spacing(self) -> float:
        return 1.0 / self.Ts

    @property
    def bandwidth(self) -> float:
        """Occupied bandwidth M/Ts in Hz."""
        return self.M / self.Ts

    def tone_frequency(self, i: int) -> float:
        """Frequency of 1-based tone ``i``."""
        if not 1 <= i <= self.M:
            raise ValueError(f"tone {i} outside 1..{self.M}")
        return self.f0 + (i - 1) / self.Ts

    @property
    def frequencies(self) -> np.ndarray:
        return self.f0 + np.arange(self.M) / self.Ts


def derive_params(M: int, b: float, code_size: int, f0: float = 0.0, Es: float = 1.0) -> ModemParams:
    return ModemParams(M=M, bit_rate=b, code_size=code_size, f0=f0, Es=Es)


def bandwidth_efficiency(M: int, code_size: int) -> float:
    """Information bits per second per Hz, log2|C| / M**2."""
    if M < 2 or code_size < 2:
        raise ValueError("need M >= 2 and code_size >= 2")
    return math.log2(code_size) / M**2


def uncoded_efficiency(M: int) -> float:
    return math.log2(M) / M


def asymptotic_efficiency(M: int, d: int) -> float:
    """Large-M efficiency ((M-d+1)/M) * log2(M)/M of a bound-meeting code."""
    if not 2 <= d <= M:
        raise ValueError(f"d must lie in 2..{M}, got {d}")
    return (M - d + 1) / M * math.log2(M) / M


def bound_efficiency(M: int, d: int) -> float:
    """Efficiency of a hypothetical code meeting the M!/(d-1)! bound."""
    return math.log2(cardinality_bound(M, d)) / M**2


def awgn_symbol_error_approx(es_over_n0: float) -> float:
    if es_over_n0 < 0:
        raise ValueError("Es/N0 must be non-negative")
    return 0.5 * math.exp(-es_over_n0 / 2)


def insertion_deletion_prob_approx(snr: float) -> float:
    """Threshold-detector error probability 0.5*exp(-SNR/4) (linear SNR)."""
    if snr < 0:
        raise ValueError("SNR must be non-negative")
    return 0.5 * math.exp(-snr / 4)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


# -- sampled waveforms -------------------------------------------------------


def _samples_per_symbol(params: ModemParams, fs: float) -> int:
    n = params.Ts * fs
    if abs(n - round(n)) > 1e-6 * n:
        raise ValueError(f"sample rate {fs} does not give an integer number of samples per symbol")
    return int(round(n))


def modulate(
    word: Sequence[int],
    params: ModemParams,
    fs: float,
    phase: str = ZERO_PHASE,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Sampled FSK waveform for a codeword, one tone per symbol slot.

    Each segment is ``sqrt(2 Es/Ts) cos(2 pi f_k t + theta_k)`` over
    ``[0, Ts)`` with its own local time origin.  ``phase`` is ``"zero"`` or
    ``"random"`` (independent uniform phase per segment, drawn from
    ``rng``).  ``fs`` must be at least four times the top tone frequency
    and give an integer number of samples per symbol.
    """
    top = params.f0 + params.M / params.Ts
    if fs < 4 * top:
        raise ValueError(f"sample rate {fs} below 4x top frequency {top}")
    if phase not in (ZERO_PHASE, RANDOM_PHASE):
        raise ValueError(f"unknown phase policy {phase!r}")
    if phase == RANDOM_PHASE and rng is None:
        rng = np.random.default_rng()
    ns = _samples_per_symbol(params, fs)
    t = np.arange(ns) / fs
    amp = math.sqrt(2 * params.Es / params.Ts)
    segments = []
    for tone in word:
        theta = rng.uniform(0, 2 * np.pi) if phase == RANDOM_PHASE else 0.0
        f = params.tone_frequency(int(tone))
        segments.append(amp * np.cos(2 * np.pi * f * t + theta))
    return np.concatenate(segments)


def correlate_envelopes(waveform: np.ndarray, params: ModemParams, fs: float) -> np.ndarray:
    """Noncoherent correlator bank: ``(slots, M)`` envelopes in sqrt(J).

    Uses the unit-energy basis ``sqrt(2/Ts) cos`` / ``sqrt(2/Ts) sin`` per
    tone, i.e. the 2M-correlator receiver.
    """
    ns = _samples_per_symbol(params, fs)
    if len(waveform) % ns:
        raise ValueError("waveform length is not a whole number of symbols")
    t = np.arange(ns) / fs
    phase = 2 * np.pi * params.frequencies[:, None] * t[None, :]
    scale = math.sqrt(2 / params.Ts) / fs
    basis = np.exp(-1j * phase) * scale
    segments = waveform.reshape(-1, ns)
    return np.abs(segments @ basis.T)


def sampled_noise(n: int, noise_psd: float, fs: float, rng: np.random.Generator) -> np.ndarray:
    """White Gaussian noise samples with single-sided PSD ``noise_psd``."""
    return rng.normal(0.0, math.sqrt(noise_psd * fs / 2), size=n)


# -- sufficient-statistic path ----------------------------------------------


def envelope_statistics(
    tx_tone: int | None,
    params: ModemParams,
    noise_psd: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Envelope vector for one symbol slot.

    ``tx_tone`` is the 1-based transmitted tone, or ``None`` for no signal.
    """
    if noise_psd < 0:
        raise ValueError("noise PSD must be non-negative")
    tx = np.array([0 if tx_tone is None else int(tx_tone)])
    return batch_envelopes(tx, params.M, params.Es, noise_psd, rng)[0]


def batch_envelopes(
    tx: np.ndarray,
    M: int,
    Es: float,
    noise_psd: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Envelopes for an array of transmitted tones.

    ``tx`` holds 1-based tones (0 = no signal) of any shape; the result has
    shape ``tx.shape + (M,)``.  Signal phase is uniform and independent per
    slot.
    """
    tx = np.asarray(tx)
    shape = tx.shape + (M,)
    on = (np.arange(1, M + 1) == tx[..., None])
    if noise_psd == 0:
        return on * math.sqrt(Es)
    z = np.zeros(shape, dtype=np.complex128)
    if on.any():
        theta = rng.uniform(0.0, 2 * np.pi, size=tx.shape)
        z += on * (math.sqrt(Es) * np.exp(1j * theta))[..., None]
    sigma = math.sqrt(noise_psd / 2)
    z.real += rng.normal(0.0, sigma, size=shape)
    z.imag += rng.normal(0.0, sigma, size=shape)
    return np.abs(z)


def no_signal_exceedance(Es: float, noise_psd: float, threshold: float | None = None) -> float:
    """P(Rayleigh envelope > threshold); default threshold sqrt(Es)/2."""
    if threshold is None:
        threshold = math.sqrt(Es) / 2
    if noise_psd == 0:
        return 0.0
    return math.exp(-threshold**2 / noise_psd)


def signal_miss_probability(Es: float, noise_psd: float, threshold: float | None = None) -> float:
    """P(Rician envelope <= threshold) for a transmitted tone."""
    if threshold is None:
        threshold = math.sqrt(Es) / 2
    if noise_psd == 0:
        return 0.0 if math.sqrt(Es) > threshold else 1.0
    sigma = math.sqrt(noise_psd / 2)
    return float(rice.cdf(threshold / sigma, math.sqrt(Es) / sigma))
