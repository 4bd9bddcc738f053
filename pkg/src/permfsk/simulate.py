"""Seeded Monte Carlo experiments over the stochastic channel.

Trials are processed in fixed-size blocks.  Block ``j`` of row ``r`` draws
from ``default_rng(SeedSequence(seed, spawn_key=(r, j)))``, so the counts
depend only on (config, seed) and never on how blocks are spread over
threads.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, astuple, dataclass, field, replace
from pathlib import Path

import numpy as np

from permfsk.channel import ChannelScenario, scenario_envelopes
from permfsk.codec import batch_decode, batch_scores, make_thresholds
from permfsk.modem import (
    db_to_linear,
    insertion_deletion_prob_approx,
    no_signal_exceedance,
    signal_miss_probability,
)
from permfsk.permcode import CodeBook

DEFAULT_BLOCK = 1 << 16


@dataclass(frozen=True)
class ExperimentConfig:
    code: CodeBook
    code_source: str
    scenario: ChannelScenario = field(default_factory=ChannelScenario)
    snr_db: tuple[float, ...] = ()
    trials: int = 10_000
    seed: int = 0
    Es: float = 1.0
    noise_margin: float = 0.0
    block_size: int = DEFAULT_BLOCK
    bit_rate: float | None = None

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trial count must be >= 1")
        if self.block_size < 1:
            raise ValueError("block size must be >= 1")
        if not all(math.isfinite(s) for s in self.snr_db):
            raise ValueError("SNR values must be finite")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.Es <= 0:
            raise ValueError("Es must be positive")
        self.scenario.validate(self.code.M)

    def to_dict(self) -> dict:
        return {
            "M": self.code.M,
            "bit_rate": self.bit_rate,
            "code": {
                "source": self.code_source,
                "size": len(self.code),
                "d_min": self.code.d_min,
                "words": [list(w) for w in self.code.words],
            },
            "scenario": self.scenario.to_dict(),
            "snr_db": list(self.snr_db),
            "trials": self.trials,
            "seed": self.seed,
            "Es": self.Es,
            "noise_margin": self.noise_margin,
            "block_size": self.block_size,
        }


@dataclass(frozen=True)
class Counts:
    trials: int = 0
    insertions: int = 0
    deletions: int = 0
    word_errors: int = 0
    ties: int = 0

    def __add__(self, other: Counts) -> Counts:
        return Counts(*(a + b for a, b in zip(astuple(self), astuple(other))))


@dataclass(frozen=True)
class ResultRow:
    label: str
    snr_db: float | None
    noise_N: float
    trials: int
    insertions: int
    deletions: int
    word_errors: int
    ties: int
    insertion_rate: float
    deletion_rate: float
    combined_rate: float
    word_error_rate: float
    tie_rate: float
    theory_insertion: float | None
    theory_deletion: float | None
    approx_combined: float | None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list[ResultRow]
    wall_time: float = 0.0

    def to_json(self) -> str:
        payload = {"config": self.config.to_dict(), "rows": [asdict(r) for r in self.rows]}
        return json.dumps(payload, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# config: " + json.dumps(self.config.to_dict(), separators=(",", ":")) + "\n")
        names = list(ResultRow.__dataclass_fields__)
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(names)
        for row in self.rows:
            writer.writerow(["" if getattr(row, n) is None else _fmt(getattr(row, n)) for n in names])
        return buf.getvalue()

    def write(self, path: str | Path, fmt: str = "csv") -> None:
        """Write results and a ``.meta.json`` sidecar holding wall time.

        The result file itself is a pure function of (config, seed).
        """
        path = Path(path)
        text = self.to_json() if fmt == "json" else self.to_csv()
        path.write_text(text)
        meta = {"wall_time_s": self.wall_time, "written_at": time.strftime("%Y-%m-%dT%H:%M:%S")}
        path.with_name(path.name + ".meta.json").write_text(json.dumps(meta, indent=2) + "\n")


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _block_rng(seed: int, row: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(row, block)))


def run_block(
    code: CodeBook,
    scenario: ChannelScenario,
    n: int,
    rng: np.random.Generator,
    Es: float = 1.0,
    noise_margin: float = 0.0,
) -> Counts:
    """Simulate ``n`` transmissions of uniformly drawn messages."""
    M = code.M
    words = code.as_array()
    tx_index = rng.integers(0, len(words), size=n)
    tx = words[tx_index]
    env = scenario_envelopes(tx, scenario, Es, rng)
    sigma = math.sqrt(scenario.background_N / 2)
    T = make_thresholds(Es, noise_margin, sigma, M=M).as_array()
    masks = env > T
    sent = np.arange(1, M + 1) == tx[:, :, None]
    insertions = int(np.count_nonzero(masks & ~sent))
    deletions = int(np.count_nonzero(sent & ~masks))
    correct, tie = batch_decode(batch_scores(masks, code), tx_index)
    return Counts(n, insertions, deletions, int(np.count_nonzero(~correct)), int(np.count_nonzero(tie)))


def _row_counts(config: ExperimentConfig, scenario: ChannelScenario, row: int, threads: int) -> Counts:
    sizes = [config.block_size] * (config.trials // config.block_size)
    if config.trials % config.block_size:
        sizes.append(config.trials % config.block_size)

    def work(j: int) -> Counts:
        rng = _block_rng(config.seed, row, j)
        return run_block(config.code, scenario, sizes[j], rng, config.Es, config.noise_margin)

    if threads <= 1:
        parts = [work(j) for j in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, range(len(sizes))))
    total = Counts()
    for p in parts:
        total = total + p
    return total


def _make_row(label: str, snr_db: float | None, config: ExperimentConfig, N: float, c: Counts) -> ResultRow:
    M = config.code.M
    ins_rate = c.insertions / (c.trials * M * (M - 1))
    del_rate = c.deletions / (c.trials * M)
    clean = config.scenario.event_count == 0 and config.noise_margin == 0
    th_ins = th_del = approx = None
    if snr_db is not None:
        approx = insertion_deletion_prob_approx(db_to_linear(snr_db))
        if clean:
            th_ins = no_signal_exceedance(config.Es, N)
            th_del = signal_miss_probability(config.Es, N)
    return ResultRow(
        label=label,
        snr_db=snr_db,
        noise_N=N,
        trials=c.trials,
        insertions=c.insertions,
        deletions=c.deletions,
        word_errors=c.word_errors,
        ties=c.ties,
        insertion_rate=ins_rate,
        deletion_rate=del_rate,
        combined_rate=(ins_rate + del_rate) / 2,
        word_error_rate=c.word_errors / c.trials,
        tie_rate=c.ties / c.trials,
        theory_insertion=th_ins,
        theory_deletion=th_del,
        approx_combined=approx,
    )


def run_experiment(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Run every configured row: one per SNR point, or a single row at
    the scenario's own background noise when no SNR sweep is given.

    ``combined_rate`` is the mean of the per-tone insertion and deletion
    rates, i.e. the error rate of a single on/off tone decision with
    equiprobable hypotheses.  Ties count as word errors.
    """
    start = time.monotonic()
    rows = []
    if config.snr_db:
        for r, snr_db in enumerate(config.snr_db):
            N = config.Es / db_to_linear(snr_db)
            scenario = replace(config.scenario, background_N=N)
            counts = _row_counts(config, scenario, r, threads)
            rows.append(_make_row(f"snr={snr_db:g}dB", snr_db, config, N, counts))
    else:
        counts = _row_counts(config, config.scenario, 0, threads)
        N = config.scenario.background_N
        snr_db = 10 * math.log10(config.Es / N) if N > 0 else None
        rows.append(_make_row("scenario", snr_db, config, N, counts))
    return ExperimentResult(config, rows, time.monotonic() - start)
