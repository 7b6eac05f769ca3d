"""Line-based text format for circuits.

One instruction per line: a lowercase mnemonic, then qubit operands ``q<i>``,
then float parameters or a classical-bit operand ``c<j>``. ``#`` starts a
comment. A ``measure`` without a classical bit is a discarded measurement,
the kind that precedes a reset. ``id`` lines are idle padding.

Start times are not stored. A circuit whose qubits are fully padded from t=0
re-schedules to the same start times, so padded circuits round-trip exactly.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from .circuit import (
    DEFAULT_DURATIONS,
    Circuit,
    DurationTable,
    GateKind,
    Instruction,
    schedule_asap,
)


class CircuitParseError(ValueError):
    def __init__(self, lineno: int, line: str, reason: str):
        super().__init__(f"line {lineno}: {reason}: {line.strip()!r}")
        self.lineno = lineno


_MNEMONICS = {kind.value: kind for kind in GateKind}


def _operand(token: str, prefix: str) -> int:
    if not token.startswith(prefix) or not token[1:].isdigit():
        raise ValueError(f"expected {prefix}<index>, got {token!r}")
    return int(token[1:])


def parse_line(line: str) -> Instruction | None:
    body = line.split("#", 1)[0].strip()
    if not body:
        return None
    tokens = body.split()
    kind = _MNEMONICS.get(tokens[0])
    if kind is None:
        raise ValueError(f"unknown mnemonic {tokens[0]!r}")
    args = tokens[1:]
    nq = kind.num_qubits
    if len(args) < nq:
        raise ValueError(f"{kind.value} needs {nq} qubit operand(s)")
    qubits = tuple(_operand(tok, "q") for tok in args[:nq])
    rest = args[nq:]
    if kind is GateKind.MEASURE:
        if len(rest) > 1:
            raise ValueError("measure takes at most one classical bit")
        clbit = _operand(rest[0], "c") if rest else None
        return Instruction(kind, qubits, clbit=clbit, discard=clbit is None)
    if len(rest) != kind.num_params:
        raise ValueError(f"{kind.value} takes {kind.num_params} parameter(s), got {len(rest)}")
    params = tuple(float(tok) for tok in rest)
    return Instruction(kind, qubits, params, idle=kind is GateKind.ID)


def parse_program(text: str) -> list[Instruction]:
    """Parse text into an unscheduled instruction list."""
    instrs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        try:
            ins = parse_line(line)
        except ValueError as exc:
            raise CircuitParseError(lineno, line, str(exc)) from None
        if ins is not None:
            instrs.append(ins)
    return instrs


def parse_circuit(text: str, durations: DurationTable = DEFAULT_DURATIONS) -> Circuit:
    """Parse text and schedule it ASAP."""
    return schedule_asap(parse_program(text), durations)


def load_circuit(path: str | Path, durations: DurationTable = DEFAULT_DURATIONS) -> Circuit:
    return parse_circuit(Path(path).read_text(), durations)


def format_instruction(ins: Instruction) -> str:
    parts = [ins.kind.value] + [f"q{q}" for q in ins.qubits]
    if ins.kind is GateKind.MEASURE:
        if ins.clbit is not None:
            parts.append(f"c{ins.clbit}")
    else:
        parts.extend(repr(p) for p in ins.params)
    return " ".join(parts)


def serialize(instrs: Circuit | Sequence[Instruction]) -> str:
    """Render a circuit (in time order) or an instruction list as text."""
    items = instrs.instructions if isinstance(instrs, Circuit) else instrs
    return "".join(format_instruction(ins) + "\n" for ins in items)
