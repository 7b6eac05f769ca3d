import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entspec.circuit import cx, h, measure, pad_idle, reset, schedule_asap, t, u2
from entspec.noise import NoiseProfile, load_noise, preset
from entspec.sim import (
    Counts,
    StateVector,
    apply_gate,
    apply_gate_noise,
    apply_thermal,
    measure as measure_state,
    plan_width,
    reset as reset_state,
    run,
    run_shots,
)
from entspec.spectroscopy import build

from oracles import X, exact_distribution, statevector, within_sigma


def padded(prog):
    return pad_idle(schedule_asap(prog))


SMALL = {
    "bell": [h(0), cx(0, 1), measure(0, 0), measure(1, 1)],
    "reuse": [h(0), cx(0, 1), measure(0, 0), reset(0), h(0), cx(0, 1), t(1), h(1), measure(0, 1), measure(1, 2)],
    "ghz3": [h(0), cx(0, 1), cx(1, 2), u2(2, 0.3, -0.7), measure(0, 0), measure(1, 1), measure(2, 2)],
    "discard": [h(1), cx(1, 0), measure(0), reset(0), cx(1, 0), measure(0, 0), measure(1, 1)],
}


class TestCounts:
    def test_from_bits(self):
        c = Counts.from_bits(np.array([[0, 1], [0, 1], [1, 1]]))
        assert c.as_dict() == {"01": 2, "11": 1} and c.shots == 3

    def test_marginal(self):
        c = Counts({"010": 3, "110": 2, "011": 5})
        assert c.marginal([0]).as_dict() == {"0": 8, "1": 2}
        assert c.marginal([2, 1]).as_dict() == {"01": 5, "11": 5}

    def test_merge(self):
        assert (Counts({"0": 1}) + Counts({"0": 2, "1": 3})).as_dict() == {"0": 3, "1": 3}

    def test_json_round_trip(self):
        c = Counts({"01": 4, "10": 6})
        assert Counts.from_json(c.to_json()) == c
        assert json.loads(c.to_json()) == {"shots": 10, "counts": {"01": 4, "10": 6}}

    @pytest.mark.parametrize("bad", [{"0": 1, "11": 1}, {"2": 1}, {"0": -1}])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            Counts(bad)

    def test_shots_field_checked(self):
        with pytest.raises(ValueError):
            Counts.from_json('{"shots": 5, "counts": {"0": 4}}')


class TestNoiseProfile:
    def test_presets(self):
        main = preset("paper-main")
        assert main.pauli_prob(h(0).kind) == pytest.approx(0.001)
        assert main.pauli_prob(cx(0, 1).kind) == pytest.approx(0.005)
        assert preset("paper-reduced").depolarizing_lambda(h(0).kind) == pytest.approx(1e-4)
        assert not preset("noiseless").has_gate_noise and not preset("noiseless").has_thermal_noise

    def test_relaxation_prob(self):
        assert preset("paper-main").relaxation_prob(2000) == pytest.approx(1 - math.exp(-1))
        assert preset("noiseless").relaxation_prob(10) == 0.0

    def test_json_round_trip(self, tmp_path):
        p = tmp_path / "n.json"
        p.write_text(preset("paper-main").to_json())
        assert load_noise(str(p)) == preset("paper-main")

    def test_preset_override(self):
        prof = NoiseProfile.from_dict({"preset": "paper-main", "readout_flip_prob": 0.1})
        assert prof.readout_flip_prob == 0.1 and prof.t1 == 2000

    @pytest.mark.parametrize("data", [{"t1": 10, "t2": 20}, {"readout_flip_prob": 2}, {"bogus": 1}])
    def test_invalid(self, data):
        with pytest.raises(ValueError):
            NoiseProfile.from_dict(data)

    def test_unknown_preset(self):
        with pytest.raises(ValueError):
            preset("nope")


class TestReferenceRoute:
    def test_apply_gate_matches_oracle(self):
        prog = SMALL["ghz3"][:4]
        s = StateVector.zero(3)
        for ins in prog:
            s = apply_gate(s, ins)
        np.testing.assert_allclose(s.amplitudes, statevector(prog, 3), atol=1e-12)

    def test_measure_collapses(self):
        s = apply_gate(apply_gate(StateVector.zero(2), h(0)), cx(0, 1))
        rng = np.random.default_rng(0)
        out, raw, rec = measure_state(s, 0, preset("noiseless"), rng)
        assert raw == rec
        assert out.probabilities()[3 * raw] == pytest.approx(1)

    def test_reset_to_zero(self):
        s = apply_gate(StateVector.zero(1), h(0))
        for seed in range(5):
            assert reset_state(s, 0, np.random.default_rng(seed)).probabilities()[0] == pytest.approx(1)

    def test_readout_flip_rate(self):
        rng = np.random.default_rng(1)
        prof = NoiseProfile(readout_flip_prob=0.2)
        flips = sum(measure_state(StateVector.zero(1), 0, prof, rng)[2] for _ in range(20_000))
        assert abs(flips / 20_000 - 0.2) < 4 * math.sqrt(0.16 / 20_000)

    def test_pauli_channel_average(self):
        # X-type errors flip |0>; Y also flips it; Z does not
        prof = NoiseProfile(pauli_prob_per_axis_1q=0.05)
        rng = np.random.default_rng(2)
        trials = 20_000
        flips = 0
        for _ in range(trials):
            s = apply_gate_noise(StateVector.zero(1), t(0), prof, rng)
            flips += s.probabilities()[1] > 0.5
        assert abs(flips / trials - 0.1) < 4 * math.sqrt(0.09 / trials)

    def test_depolarizing_average(self):
        prof = NoiseProfile(depolarizing_lambda_1q=0.4)
        rng = np.random.default_rng(3)
        trials = 20_000
        flips = sum(apply_gate_noise(StateVector.zero(1), t(0), prof, rng).probabilities()[1] > 0.5
                    for _ in range(trials))
        # X and Y of the three non-identity Paulis flip, each with weight lam/4
        assert abs(flips / trials - 0.2) < 4 * math.sqrt(0.16 / trials)

    def test_thermal_keeps_norm(self):
        prof = preset("paper-main")
        rng = np.random.default_rng(4)
        s = apply_gate(apply_gate(StateVector.zero(2), h(0)), cx(0, 1))
        for _ in range(50):
            s = apply_thermal(s, 0, 500, prof, rng)
            assert s.norm() == pytest.approx(1)


class TestEngineAgainstExact:
    @pytest.mark.parametrize("name", sorted(SMALL))
    @pytest.mark.parametrize("noise", ["noiseless", "paper-main"])
    def test_small_circuits(self, name, noise):
        c = padded(SMALL[name])
        counts = run(c, noise, 40_000, seed=5)
        assert within_sigma(counts, exact_distribution(c, load_noise(noise)), k=4.5) == []

    def test_strong_noise(self):
        prof = NoiseProfile(readout_flip_prob=0.1, t1=30, t2=30, excited_population=0.3,
                            pauli_prob_per_axis_1q=0.02, depolarizing_lambda_1q=0.05)
        c = padded(SMALL["reuse"])
        counts = run(c, prof, 40_000, seed=6)
        assert within_sigma(counts, exact_distribution(c, prof), k=4.5) == []

    @pytest.mark.parametrize("alg,n", [("ht", 2), ("qe-ht-3k", 3), ("qe-tct-4k", 2), ("qe-tct-6k", 2)])
    def test_spectroscopy_circuits(self, alg, n):
        c = build(alg, n, 1, 0.7)
        counts = run(c, "paper-main", 40_000, seed=8)
        assert within_sigma(counts, exact_distribution(c, preset("paper-main")), k=4.5) == []

    def test_noiseless_deterministic_outcome(self):
        c = padded([h(0), h(0), cx(0, 1), measure(0, 0), measure(1, 1)])
        assert run(c, "noiseless", 500).as_dict() == {"00": 500}


@pytest.fixture(scope="module")
def circuit():
    return build("qe-tct-4k", 3, 1, 0.5)


class TestEngineReproducibility:
    def test_same_seed_same_bits(self, circuit):
        a = run_shots(circuit, "paper-main", 3000, seed=9)
        b = run_shots(circuit, "paper-main", 3000, seed=9)
        np.testing.assert_array_equal(a.bits, b.bits)

    @pytest.mark.parametrize("block_size,workers", [(1000, 1), (777, 3), (64, 2), (5000, 1)])
    def test_independent_of_blocking(self, circuit, block_size, workers):
        ref = run_shots(circuit, "paper-main", 3000, seed=9)
        other = run_shots(circuit, "paper-main", 3000, seed=9, block_size=block_size, workers=workers)
        np.testing.assert_array_equal(ref.bits, other.bits)
        np.testing.assert_array_equal(ref.discarded, other.discarded)

    def test_split_by_first_shot(self, circuit):
        whole = run_shots(circuit, "paper-main", 2000, seed=4)
        tail = run_shots(circuit, "paper-main", 500, seed=4, first_shot=1500)
        np.testing.assert_array_equal(whole.bits[1500:], tail.bits)

    def test_different_seeds_differ(self, circuit):
        assert run(circuit, "paper-main", 2000, seed=1) != run(circuit, "paper-main", 2000, seed=2)

    def test_discarded_columns(self):
        c = padded(SMALL["discard"])
        b = run_shots(c, "noiseless", 1000, seed=0)
        assert b.discarded.shape == (1000, 1)
        # both copies of the control, before and after the reset, agree with it
        np.testing.assert_array_equal(b.discarded[:, 0], b.bits[:, 1])
        np.testing.assert_array_equal(b.bits[:, 0], b.bits[:, 1])
        assert 0.4 < b.bits[:, 1].mean() < 0.6


class TestPlanner:
    @pytest.mark.parametrize("alg", ["tct", "qe-tct-6k", "qe-ht-4k", "ht"])
    def test_state_array_stays_narrow(self, alg):
        assert plan_width(build(alg, 5, 1, 0.4)) <= 6

    def test_requires_padding(self):
        with pytest.raises(ValueError):
            run(schedule_asap([h(0), cx(0, 1), measure(1, 0)]), "noiseless", 10)

    def test_zero_shots(self):
        assert run(padded(SMALL["bell"]), "noiseless", 0).shots == 0


@settings(max_examples=25, deadline=None)
@given(st.lists(st.sampled_from(["h0", "h1", "t0", "t1", "cx01", "cx10", "r0", "r1"]), max_size=10))
def test_noiseless_engine_matches_exact(tokens):
    ops = {"h0": h(0), "h1": h(1), "t0": t(0), "t1": t(1), "cx01": cx(0, 1), "cx10": cx(1, 0),
           "r0": reset(0), "r1": reset(1)}
    c = padded([ops[tk] for tk in tokens] + [measure(0, 0), measure(1, 1)])
    counts = run(c, "noiseless", 4000, seed=len(tokens))
    assert within_sigma(counts, exact_distribution(c, preset("noiseless")), k=5, floor=1e-9) == []
