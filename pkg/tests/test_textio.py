import pytest
from hypothesis import given, settings

from entspec.circuit import GateKind, pad_idle, schedule_asap
from entspec.spectroscopy import ALGORITHMS, build
from entspec.textio import CircuitParseError, parse_circuit, parse_program, serialize

from test_circuit import programs

SAMPLE = """\
# bell pair
h q0
cx q0 q1   # entangle
u1 q1 0.25
u2 q0 -1.5 3.0
t q1
tdg q1
id q0
measure q0 c0
measure q1 c1
measure q1
reset q1
"""


class TestParse:
    def test_sample(self):
        prog = parse_program(SAMPLE)
        kinds = [i.kind for i in prog]
        assert kinds == [GateKind.H, GateKind.CNOT, GateKind.U1, GateKind.U2, GateKind.T, GateKind.TDG,
                         GateKind.ID, GateKind.MEASURE, GateKind.MEASURE, GateKind.MEASURE, GateKind.RESET]
        assert prog[1].qubits == (0, 1)
        assert prog[3].params == (-1.5, 3.0)
        assert prog[6].idle
        assert prog[7].clbit == 0 and prog[9].discard

    def test_schedules(self):
        c = parse_circuit("h q0\ncx q0 q1\nh q1\n")
        assert [i.start for i in c.instructions] == [0, 1, 6]

    @pytest.mark.parametrize("line,lineno", [
        ("h q0\nfoo q1\n", 2),
        ("h q0\n\ncx q0\n", 3),
        ("u1 q0\n", 1),
        ("h x0\n", 1),
        ("measure q0 c0 c1\n", 1),
        ("cx q1 q1\n", 1),
        ("u1 q0 abc\n", 1),
    ])
    def test_errors_name_the_line(self, line, lineno):
        with pytest.raises(CircuitParseError) as info:
            parse_program(line)
        assert info.value.lineno == lineno
        assert f"line {lineno}" in str(info.value)


class TestRoundTrip:
    def test_sample_round_trip(self):
        prog = parse_program(SAMPLE)
        assert parse_program(serialize(prog)) == prog

    @settings(max_examples=80, deadline=None)
    @given(programs())
    def test_program_round_trip(self, prog):
        assert parse_program(serialize(prog)) == prog

    @pytest.mark.parametrize("alg", ALGORITHMS)
    def test_padded_circuit_keeps_start_times(self, alg):
        c = build(alg, 3, 1, 0.6)
        back = pad_idle(parse_circuit(serialize(c)))
        assert [(i.kind, i.qubits, i.start) for i in back.instructions] == \
               [(i.kind, i.qubits, i.start) for i in c.instructions]

    def test_float_precision_kept(self):
        prog = parse_program("u1 q0 0.1234567890123456789\n")
        again = parse_program(serialize(prog))
        assert again[0].params == prog[0].params

    def test_unpadded_round_trip_of_asap_program(self):
        c = schedule_asap(parse_program(SAMPLE))
        assert serialize(parse_circuit(serialize(c))) == serialize(c)
