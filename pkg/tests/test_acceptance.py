"""Acceptance criteria, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line through the
``criterion`` fixture; a summary is repeated at the end of the run.
"""

import itertools
import math
import time
from pathlib import Path

import numpy as np

from permfsk.channel import ChannelScenario, apply_scenario_symbolic, link_budget_table
from permfsk.cli import main
from permfsk.codec import DecisionKind, DemodFrame, agreement_score, decode_max_agreement
from permfsk.modem import db_to_linear, insertion_deletion_prob_approx
from permfsk.permcode import EXAMPLE_CODE_M4, M4_D3_CODE, CodeBook, cardinality_bound
from permfsk.search import search_max_code
from permfsk.simulate import ExperimentConfig, run_experiment

REPO = Path(__file__).resolve().parents[1]
CERTIFICATE = REPO / "results" / "M6_d5.code"

# published code sizes, (M, d) -> |C|
PUBLISHED_SIZES = {
    (2, 2): 2,
    (3, 2): 6, (3, 3): 3,
    (4, 2): 24, (4, 3): 12, (4, 4): 4,
    (5, 2): 120, (5, 3): 60, (5, 4): 20, (5, 5): 5,
}
# published link budget, d_min -> (B kHz, SNR dB)
PUBLISHED_LINK = {2: (16, 40), 3: (21, 37), 4: (38, 27)}


def test_code_size_table(criterion):
    start = time.monotonic()
    found = {}
    proven = True
    for M, d in PUBLISHED_SIZES:
        rep = search_max_code(M, d)
        found[(M, d)] = rep.size
        proven &= rep.proven_optimal
    elapsed = time.monotonic() - start
    ok = found == PUBLISHED_SIZES and proven and elapsed < 300
    criterion("1 code-size table", ok, f"all cells exact={found == PUBLISHED_SIZES} proven={proven} in {elapsed:.1f}s")
    assert ok


def test_bound_consistency(criterion):
    bad = []
    for M in range(2, 8):
        for d in range(2, M + 1):
            budget = 5.0 if M >= 6 else None
            rep = search_max_code(M, d, time_limit=budget)
            bound = cardinality_bound(M, d)
            if rep.size > bound or rep.best_code.d_min is not None and rep.best_code.d_min < d:
                bad.append((M, d, "exceeds"))
            if ((M, d) in PUBLISHED_SIZES or d == 2) and rep.size != bound:
                bad.append((M, d, "not tight"))
    criterion("2 size <= M!/(d-1)!", not bad, f"violations={bad}")
    assert not bad


def test_link_budget_table(criterion):
    rows = link_budget_table(b=4800, M=4)
    detail = []
    ok = len(rows) == 3
    for r in rows:
        B, snr = PUBLISHED_LINK[r.d_min]
        ok &= abs(r.bandwidth_kHz - B) <= 1 and abs(r.snr_db - snr) <= 1
        detail.append(f"d={r.d_min}: {r.bandwidth_kHz:.2f}kHz {r.snr_db:.2f}dB")
    criterion("3 link budget", ok, "; ".join(detail))
    assert ok


def test_worked_examples(criterion):
    tx = (3, 4, 1, 2)
    jam_frame = apply_scenario_symbolic(tx, ChannelScenario(jammed_tones={4}))
    jam = decode_max_agreement(jam_frame, EXAMPLE_CODE_M4)
    jam_ok = (
        jam_frame == DemodFrame.of((3, 4), (4,), (1, 4), (2, 4))
        and jam.kind is DecisionKind.UNIQUE
        and jam.message + 1 == 3
    )
    imp_frame = apply_scenario_symbolic(tx, ChannelScenario(impulse_slots={1, 2, 3}))
    imp = decode_max_agreement(imp_frame, EXAMPLE_CODE_M4)
    rivals = sorted(agreement_score(w, imp_frame) for w in EXAMPLE_CODE_M4.words if w != tx)
    imp_ok = (
        imp_frame == DemodFrame.of((1, 2, 3, 4), (1, 2, 3, 4), (1, 2, 3, 4), (2,))
        and imp.kind is DecisionKind.UNIQUE
        and imp.message + 1 == 3
        and imp.score == 4
        and rivals == [3, 3, 3]
    )
    criterion("4 worked examples", jam_ok and imp_ok, f"jammer={jam_ok} impulse={imp_ok} rival scores={rivals}")
    assert jam_ok and imp_ok


def _event_universe(tx):
    M = len(tx)
    events = [("jam", t) for t in range(1, M + 1)]
    events += [("imp", s) for s in range(1, M + 1)]
    events += [("ins", (s, t)) for s in range(1, M + 1) for t in range(1, M + 1) if t != tx[s - 1]]
    events += [("del", (s, tx[s - 1])) for s in range(1, M + 1)]
    return events


def _scenario(events):
    kinds = {"jam": set(), "imp": set(), "ins": set(), "del": set()}
    for kind, value in events:
        kinds[kind].add(value)
    return ChannelScenario(
        jammed_tones=kinds["jam"], impulse_slots=kinds["imp"], insertions=kinds["ins"], deletions=kinds["del"]
    )


def _decodes(code, i, events):
    frame = apply_scenario_symbolic(code.words[i], _scenario(events))
    d = decode_max_agreement(frame, code)
    return d.kind is DecisionKind.UNIQUE and d.message == i


def _exhaustive_failures(code, max_events):
    failures = cases = 0
    for i, tx in enumerate(code.words):
        universe = _event_universe(tx)
        for k in range(max_events + 1):
            for events in itertools.combinations(universe, k):
                cases += 1
                failures += not _decodes(code, i, events)
    return failures, cases


def test_correction_radius(criterion):
    start = time.monotonic()
    f4, n4 = _exhaustive_failures(EXAMPLE_CODE_M4, 3)
    f1, n1 = _exhaustive_failures(M4_D3_CODE, 2)

    code5 = search_max_code(5, 4).best_code
    rng = np.random.default_rng(20240611)
    f5 = 0
    n5 = 100_000
    universes = [_event_universe(w) for w in code5.words]
    for _ in range(n5):
        i = int(rng.integers(len(code5)))
        k = int(rng.integers(0, 4))
        picks = rng.choice(len(universes[i]), size=k, replace=False)
        f5 += not _decodes(code5, i, [universes[i][p] for p in picks])
    elapsed = time.monotonic() - start
    ok = f4 == f1 == f5 == 0 and elapsed < 120
    criterion(
        "5 correction radius",
        ok,
        f"M4d4 {f4}/{n4}, m4d3 {f1}/{n1}, M5d4 random {f5}/{n5} failures in {elapsed:.1f}s",
    )
    assert ok


def test_background_noise_statistics(criterion):
    config = ExperimentConfig(
        code=EXAMPLE_CODE_M4,
        code_source="example4",
        snr_db=(8.0, 10.0, 12.0, 14.0),
        trials=1_000_000,
        seed=2024,
    )
    result = run_experiment(config)
    M = config.code.M
    ok = True
    parts = []
    for row in result.rows:
        n = row.trials * M * (M - 1)
        p = math.exp(-db_to_linear(row.snr_db) / 4)
        z = (row.insertion_rate - p) / math.sqrt(p * (1 - p) / n)
        approx = insertion_deletion_prob_approx(db_to_linear(row.snr_db))
        ratio = row.combined_rate / approx
        ok &= abs(z) <= 3 and 0.5 <= ratio <= 2
        parts.append(f"{row.snr_db:g}dB z={z:+.2f} ratio={ratio:.3f}")
    criterion("6 background noise statistics", ok, "; ".join(parts))
    assert ok


def test_background_noise_negligible(criterion):
    (row,) = [r for r in link_budget_table(b=4800, M=4) if r.d_min == 4]
    config = ExperimentConfig(
        code=EXAMPLE_CODE_M4,
        code_source="example4",
        snr_db=(row.snr_db,),
        trials=10_000_000,
        seed=7,
    )
    (res,) = run_experiment(config).rows
    ok = res.word_errors == 0 and res.trials == 10_000_000
    criterion("7 noise negligible at link budget", ok, f"{res.word_errors} word errors in {res.trials} trials at {row.snr_db:.2f}dB")
    assert ok


def test_simulate_deterministic_across_threads(criterion, tmp_path, capsys):
    paths = []
    for threads in (1, 4):
        path = tmp_path / f"run{threads}.csv"
        code = main([
            "simulate", "--code-file", "m4d3", "--snr-db", "6:12:2", "--trials", "300000",
            "--seed", "99", "--threads", str(threads), "--out", str(path),
        ])
        assert code == 0
        paths.append(path)
    capsys.readouterr()
    a, b = (p.read_bytes() for p in paths)
    ok = a == b
    criterion("8 thread-count determinism", ok, f"byte-identical={ok} ({len(a)} bytes)")
    assert ok


def test_six_five_below_bound(criterion):
    rep = search_max_code(6, 5)
    recorded = CodeBook.load(CERTIFICATE)
    ok = (
        rep.proven_optimal
        and rep.size < 30
        and recorded.M == 6
        and recorded.d_min >= 5
        and len(recorded) == rep.size
    )
    criterion(
        "9 M=6 d=5 below bound",
        ok,
        f"certified max {rep.size} < 30 proven={rep.proven_optimal} "
        f"({rep.nodes_explored} nodes, {rep.time_spent:.1f}s); recorded code size {len(recorded)}",
    )
    assert ok
