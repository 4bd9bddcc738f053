import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from permfsk.channel import (
    ChannelScenario,
    ImpulseProcess,
    apply_scenario_stochastic,
    apply_scenario_symbolic,
    impulse_slot_count,
    link_budget_table,
    received_power,
    scenario_envelopes,
    snr_lower_bound,
    worst_case_noise_psd,
)
from permfsk.codec import DemodFrame, default_thresholds, threshold_demodulate
from permfsk.modem import ModemParams, linear_to_db


def literal_snr(B):
    """Link-budget expression written out with its numeric constants."""
    return 25e-5 / ((B / 4) * 1e3 * 10 ** (-8 - 0.04 * (95 - B)))


class TestLinkBudget:
    def test_received_power(self):
        assert received_power(25, 500) == pytest.approx(25e-5, rel=1e-12)
        assert received_power(3.7, 0) == 3.7
        assert received_power(25, 100) == pytest.approx(2.5, rel=1e-12)

    def test_noise_psd(self):
        assert worst_case_noise_psd(0) == 1e-8
        assert worst_case_noise_psd(57_000) == pytest.approx(10 ** (-10.28), rel=1e-12)
        assert worst_case_noise_psd(95_000) == pytest.approx(10 ** (-11.8), rel=1e-12)

    @pytest.mark.parametrize("B,published_db", [(16, 40), (21, 37), (38, 27)])
    def test_snr_bound_at_rounded_bandwidths(self, B, published_db):
        snr = snr_lower_bound(B)
        assert snr == pytest.approx(literal_snr(B), rel=1e-12)
        assert abs(linear_to_db(snr) - published_db) <= 1.0

    def test_snr_bound_monotone(self):
        values = [snr_lower_bound(B) for B in range(1, 95)]
        assert all(b < a for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("B", [0, 95, 120, -3])
    def test_snr_bound_range(self, B):
        with pytest.raises(ValueError):
            snr_lower_bound(B)

    def test_table(self):
        rows = link_budget_table()
        assert [(r.d_min, r.code_size) for r in rows] == [(2, 24), (3, 12), (4, 4)]
        # frozen from literal_snr at B = 76.8 / log2|C|
        expected = [(16.750409624488825, 39.05958183021915),
                    (21.422818226006772, 36.12210668166331),
                    (38.4, 26.796687756324683)]
        for row, (B, db) in zip(rows, expected):
            assert row.bandwidth_kHz == pytest.approx(B, rel=1e-12)
            assert row.snr_db == pytest.approx(db, abs=1e-9)
            assert row.snr == pytest.approx(literal_snr(row.bandwidth_kHz), rel=1e-12)

    def test_per_tone_energy_matches_bound(self):
        # Es = S_re * Ts on one tone against the band-edge noise PSD
        for row in link_budget_table():
            p = ModemParams(4, 4800.0, row.code_size)
            N = worst_case_noise_psd((95 - row.bandwidth_kHz) * 1e3)
            assert received_power(25, 500) * p.Ts / N == pytest.approx(row.snr, rel=1e-9)


class TestImpulses:
    @pytest.mark.parametrize("rate,dur,slots", [(10e3, 100e-6, 2), (10e3, 10e-6, 2), (10e3, 250e-6, 4)])
    def test_slot_count(self, rate, dur, slots):
        assert impulse_slot_count(rate, dur) == slots

    def test_arrivals_spacing(self):
        proc = ImpulseProcess()
        t = proc.arrivals(200.0, np.random.default_rng(0))
        gaps = np.diff(np.concatenate([[0.0], t]))
        assert np.all((gaps >= 0.1) & (gaps <= 1.0))
        assert t[-1] < 200.0

    def test_hit_slots_straddle(self):
        proc = ImpulseProcess(duration_s=100e-6)
        assert list(proc.hit_slots(150e-6, 100e-6)) == [1, 2]
        assert list(proc.hit_slots(100e-6, 100e-6)) == [1]

    def test_bad_process(self):
        with pytest.raises(ValueError):
            ImpulseProcess(duration_s=0)
        with pytest.raises(ValueError):
            ImpulseProcess(inter_arrival_s=(1.0, 0.5))


class TestSymbolic:
    def test_jammer_example(self):
        frame = apply_scenario_symbolic((3, 4, 1, 2), ChannelScenario(jammed_tones={4}))
        assert frame == DemodFrame.of((3, 4), (4,), (1, 4), (2, 4))

    def test_impulse_example(self):
        frame = apply_scenario_symbolic((3, 4, 1, 2), ChannelScenario(impulse_slots={1, 2, 3}))
        assert frame.as_tuples() == ((1, 2, 3, 4), (1, 2, 3, 4), (1, 2, 3, 4), (2,))

    def test_identity(self):
        assert apply_scenario_symbolic((1, 2, 3, 4), ChannelScenario()) == DemodFrame.of([1], [2], [3], [4])

    def test_deletion_can_empty_slot(self):
        frame = apply_scenario_symbolic((1, 2, 3), ChannelScenario(deletions={(2, 2)}))
        assert frame.slots[1] == frozenset()

    def test_normalisation_drops_meaningless_events(self):
        sc = ChannelScenario(insertions={(1, 1), (1, 2)}, deletions={(1, 1), (2, 1)})
        norm = sc.normalized((1, 2, 3))
        assert norm.insertions == {(1, 2)}
        assert norm.deletions == {(1, 1)}

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            apply_scenario_symbolic((1, 2, 3), ChannelScenario(jammed_tones={4}))
        with pytest.raises(ValueError):
            apply_scenario_symbolic((1, 2, 3), ChannelScenario(insertions={(0, 1)}))


M4 = 4
tones = st.integers(1, M4)
pairs = st.tuples(tones, tones)
scenarios = st.builds(
    ChannelScenario,
    jammed_tones=st.frozensets(tones, max_size=2),
    impulse_slots=st.frozensets(tones, max_size=2),
    insertions=st.frozensets(pairs, max_size=3),
    deletions=st.frozensets(pairs, max_size=3),
)
words = st.permutations([1, 2, 3, 4]).map(tuple)


def contains(big: DemodFrame, small: DemodFrame) -> bool:
    return all(s <= b for s, b in zip(small.slots, big.slots))


@given(words, scenarios, st.one_of(
    st.builds(lambda t: ("jam", t), tones),
    st.builds(lambda p: ("ins", p), pairs),
))
def test_adding_disturbance_never_removes_tones(tx, sc, extra):
    kind, value = extra
    if kind == "jam":
        bigger = ChannelScenario(sc.jammed_tones | {value}, sc.impulse_slots, sc.insertions, sc.deletions)
    else:
        bigger = ChannelScenario(sc.jammed_tones, sc.impulse_slots, sc.insertions | {value}, sc.deletions)
    assert contains(apply_scenario_symbolic(tx, bigger), apply_scenario_symbolic(tx, sc))


@given(words, scenarios, pairs)
def test_adding_deletion_never_adds_tones(tx, sc, pair):
    bigger = ChannelScenario(sc.jammed_tones, sc.impulse_slots, sc.insertions, sc.deletions | {pair})
    assert contains(apply_scenario_symbolic(tx, sc), apply_scenario_symbolic(tx, bigger))


@given(words, scenarios, st.integers(0, 2**32 - 1))
def test_stochastic_equals_symbolic_without_noise(tx, sc, seed):
    p = ModemParams(4, 4800.0, 24, Es=1.7)
    env = apply_scenario_stochastic(tx, sc, p, np.random.default_rng(seed))
    frame = threshold_demodulate(env, default_thresholds(4, p.Es))
    assert frame == apply_scenario_symbolic(tx, sc)


def test_stochastic_jammer_example():
    p = ModemParams(4, 4800.0, 4)
    env = apply_scenario_stochastic((3, 4, 1, 2), ChannelScenario(jammed_tones={4}), p, np.random.default_rng(0))
    frame = threshold_demodulate(env, default_thresholds(4))
    assert frame.as_tuples() == ((3, 4), (4,), (1, 4), (2, 4))


def test_weak_jammer_is_not_detected():
    p = ModemParams(4, 4800.0, 4)
    sc = ChannelScenario(jammed_tones={4}, jammer_amplitude=0.3)
    env = apply_scenario_stochastic((3, 4, 1, 2), sc, p, np.random.default_rng(0))
    assert threshold_demodulate(env, default_thresholds(4)).as_tuples() == ((3,), (4,), (1,), (2,))


def test_stochastic_insertion_rate():
    # closed-form oracle: each slot has M-1 idle tones, each Rayleigh above sqrt(Es)/2
    Es, N, n = 1.0, 0.25, 50_000
    rng = np.random.default_rng(42)
    tx = np.tile([1, 2, 3, 4], (n, 1))
    env = scenario_envelopes(tx, ChannelScenario(background_N=N), Es, rng)
    masks = env > 0.5
    sent = np.arange(1, 5) == tx[:, :, None]
    per_slot = np.count_nonzero(masks & ~sent) / (n * 4)
    expected = 3 * math.exp(-Es / (4 * N))
    assert per_slot == pytest.approx(expected, rel=0.02)


def test_scenario_json_round_trip(tmp_path):
    sc = ChannelScenario(jammed_tones={4}, impulse_slots={1, 2}, insertions={(3, 1)}, deletions={(2, 2)},
                         background_N=0.01, jammer_amplitude=2.0)
    path = tmp_path / "sc.json"
    sc.save(path)
    data = json.loads(path.read_text())
    assert data["insertions"] == [[3, 1]]
    assert ChannelScenario.load(path) == sc


def test_scenario_rejects_unknown_fields():
    with pytest.raises(ValueError):
        ChannelScenario.from_dict({"jammers": [1]})
