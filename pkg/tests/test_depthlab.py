import json

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings

from entspec.circuit import cx, h, measure, pad_idle, reset, schedule_asap
from entspec.depthlab import (
    TABLE_COLUMNS,
    build_contrived_qe_ht,
    depth_table,
    effective_depth,
    flow_graph,
    max_reset_interval,
    reset_intervals,
    stretched_prep,
    table_csv,
)
from entspec.noise import preset
from entspec.sim import run
from entspec.spectroscopy import ALGORITHMS, build, prep_makespan, theta_prep, trace_oracle

from oracles import exact_distribution
from test_circuit import programs


def graph_depth(c):
    g = flow_graph(c)
    return nx.dag_longest_path_length(g, weight="weight") if g.number_of_edges() else 0


class TestEffectiveDepth:
    def test_no_resets_equals_makespan(self):
        c = schedule_asap([h(0), cx(0, 1), h(1), cx(1, 2)])
        assert effective_depth(c).effective_depth == c.makespan

    def test_reset_cuts_path(self):
        # q0 works for 1+5, is reset, then works again for 1+3
        c = schedule_asap([h(0), cx(0, 1), reset(0), h(0), measure(0, 0)])
        rep = effective_depth(c)
        assert rep.standard_depth == 12
        assert rep.effective_depth == 6

    def test_crossing_at_two_qubit_gate(self):
        # information leaves q0 through the CNOT before q0 is reset
        c = schedule_asap([h(0), cx(0, 1), reset(0), h(1), h(1), h(1), h(1), h(1), h(1), h(1), h(1)])
        assert effective_depth(c).effective_depth == 14

    def test_information_flows_backwards_through_target(self):
        c = schedule_asap([h(1), h(1), h(1), cx(0, 1), reset(1), h(0), h(0)])
        assert effective_depth(c).effective_depth == 10

    def test_witness_path_is_consistent(self):
        c = build("qe-tct-4k", 4, 1, 0.5)
        rep = effective_depth(c)
        path = rep.witness_path
        ends = [c.instructions[i].end for i in path]
        assert ends == sorted(ends)
        assert ends[-1] - rep.path_start == rep.effective_depth
        for a, b in zip(path, path[1:]):
            assert set(c.instructions[a].qubits) & set(c.instructions[b].qubits)

    @pytest.mark.parametrize("alg", ALGORITHMS)
    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_matches_graph_oracle(self, alg, n):
        c = build(alg, n, 1, 0.5)
        assert effective_depth(c).effective_depth == graph_depth(c)

    @settings(max_examples=60, deadline=None)
    @given(programs())
    def test_random_matches_graph_oracle(self, prog):
        c = schedule_asap(prog)
        assert effective_depth(c).effective_depth == graph_depth(c)

    @settings(max_examples=60, deadline=None)
    @given(programs())
    def test_bounded_by_makespan(self, prog):
        c = schedule_asap(prog)
        rep = effective_depth(c)
        assert 0 <= rep.effective_depth <= rep.standard_depth == c.makespan

    @settings(max_examples=40, deadline=None)
    @given(programs())
    def test_padding_does_not_change_it(self, prog):
        c = schedule_asap(prog)
        assert effective_depth(pad_idle(c)).effective_depth == effective_depth(c).effective_depth

    def test_report_json(self):
        d = json.loads(effective_depth(build("tct", 2, 1, 0.3)).to_json())
        assert {"depth", "effective_depth", "path_start", "witness_path"} <= set(d)


class TestScaling:
    @pytest.mark.parametrize("alg", ["tct", "qe-tct-6k", "qe-tct-4k"])
    def test_two_copy_family_constant(self, alg):
        vals = {effective_depth(build(alg, n, 1, 0.5)).effective_depth for n in range(2, 7)}
        assert len(vals) == 1

    @pytest.mark.parametrize("alg,multiple", [("tct", 1), ("qe-tct-6k", 2), ("qe-tct-4k", 3)])
    def test_multiple_of_prep_time(self, alg, multiple):
        sp, eff = [], []
        for extra in (0, 5, 10, 20):
            prep = stretched_prep(theta_prep(0.5), extra)
            sp.append(prep_makespan(prep, 1))
            eff.append(effective_depth(build(alg, 4, 1, prep)).effective_depth)
        slope = np.polyfit(sp, eff, 1)[0]
        assert slope == pytest.approx(multiple, abs=1e-9)

    @pytest.mark.parametrize("alg", ["qe-ht-4k", "qe-ht-3k"])
    def test_hadamard_qe_equals_makespan(self, alg):
        for n in range(2, 7):
            c = build(alg, n, 1, 0.5)
            assert effective_depth(c).effective_depth == c.makespan

    def test_stretched_prep_keeps_state(self):
        prep = stretched_prep(theta_prep(0.9), 7)
        assert prep_makespan(prep, 1) == prep_makespan(theta_prep(0.9), 1) + 7
        c = build("ht", 2, 1, prep)
        dist = exact_distribution(c, preset("noiseless"))
        assert dist["0"] - dist["1"] == pytest.approx(trace_oracle(0.9, 2), abs=1e-9)


class TestContrived:
    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_effective_depth_is_makespan(self, n):
        c = build_contrived_qe_ht(n, 1, 0.5)
        assert c.num_qubits == 6
        assert effective_depth(c).effective_depth == c.makespan

    def test_ancilla_reset_interval_bounded(self):
        spans = [max_reset_interval(build_contrived_qe_ht(n, 1, 0.5), [0, 1]) for n in range(3, 8)]
        assert len(set(spans)) == 1
        assert spans[0] < build_contrived_qe_ht(3, 1, 0.5).makespan

    @pytest.mark.parametrize("n", [2, 3])
    def test_still_estimates_trace(self, n):
        c = build_contrived_qe_ht(n, 1, 0.8)
        bit = c.clbit_labels.index("ancilla") if "ancilla" in c.clbit_labels else 0
        counts = run(c, "noiseless", 40_000, seed=1)
        raw = (counts.marginal([bit])["0"] - counts.marginal([bit])["1"]) / counts.shots
        assert abs(raw - trace_oracle(0.8, n)) < 4 / np.sqrt(40_000)


class TestResetIntervals:
    def test_simple(self):
        c = schedule_asap([h(0), reset(0), h(0), h(1)])
        assert reset_intervals(c) == {0: [(0, 1), (3, 4)], 1: [(0, 1)]}

    def test_no_resets(self):
        c = schedule_asap([h(0), cx(0, 1)])
        assert max_reset_interval(c) == 6


class TestTable:
    def test_columns_and_rows(self):
        rows = depth_table(1, [2, 3], algorithms=["tct", "ht"])
        assert len(rows) == 4 and set(rows[0]) == set(TABLE_COLUMNS)
        text = table_csv(rows)
        assert text.splitlines()[0] == ",".join(TABLE_COLUMNS)

    def test_makespans(self):
        rows = {(r["algorithm"], r["n"]): r for r in depth_table(1, range(2, 7), algorithms=["ht", "tct"])}
        ht = [rows["ht", n]["depth"] for n in range(2, 7)]
        assert len(set(np.diff(ht))) == 1 and ht[1] > ht[0]
        assert len({rows["tct", n]["depth"] for n in range(2, 7)}) == 1
