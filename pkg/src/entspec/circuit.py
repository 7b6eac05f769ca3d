"""Circuit intermediate representation, native gate set and ASAP scheduling.

Time is measured in integer timesteps. Qubit 0 is the most significant
position in basis-state labels and the control qubit is always listed first.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np


class GateKind(str, enum.Enum):
    U1 = "u1"
    U2 = "u2"
    H = "h"
    T = "t"
    TDG = "tdg"
    CNOT = "cx"
    ID = "id"
    MEASURE = "measure"
    RESET = "reset"

    @property
    def num_params(self) -> int:
        return {GateKind.U1: 1, GateKind.U2: 2}.get(self, 0)

    @property
    def num_qubits(self) -> int:
        return 2 if self is GateKind.CNOT else 1

    @property
    def is_unitary(self) -> bool:
        return self not in (GateKind.MEASURE, GateKind.RESET)


@dataclass(frozen=True)
class DurationTable:
    """Durations, in timesteps, of each class of operation."""

    single_qubit_gate: int = 1
    cnot: int = 5
    measure: int = 3
    reset: int = 2

    def __post_init__(self):
        for name in ("single_qubit_gate", "cnot", "measure", "reset"):
            value = getattr(self, name)
            if int(value) != value or value <= 0:
                raise ValueError(f"duration {name} must be a positive integer, got {value!r}")

    def of(self, kind: GateKind) -> int:
        if kind is GateKind.ID:
            return 1
        if kind is GateKind.CNOT:
            return self.cnot
        if kind is GateKind.MEASURE:
            return self.measure
        if kind is GateKind.RESET:
            return self.reset
        return self.single_qubit_gate


DEFAULT_DURATIONS = DurationTable()


@dataclass(frozen=True)
class Instruction:
    """One operation of a circuit.

    ``start`` is ``None`` until the instruction is scheduled. ``clbit`` is the
    classical bit written by a measurement; a measurement with ``discard=True``
    precedes a reset and its outcome is not part of the recorded counts.
    ``idle`` marks identity padding, which receives thermal noise only.
    """

    kind: GateKind
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()
    clbit: int | None = None
    discard: bool = False
    idle: bool = False
    start: int | None = None
    duration: int | None = None

    def __post_init__(self):
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"{kind.value}: repeated qubit in {self.qubits}")
        if len(self.qubits) != kind.num_qubits:
            raise ValueError(f"{kind.value} acts on {kind.num_qubits} qubit(s), got {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise ValueError(f"negative qubit index in {self.qubits}")
        if len(self.params) != kind.num_params:
            raise ValueError(f"{kind.value} takes {kind.num_params} parameter(s), got {self.params}")
        if kind is GateKind.MEASURE:
            if self.clbit is None and not self.discard:
                raise ValueError("a recorded measurement needs a classical bit")
        elif self.clbit is not None or self.discard:
            raise ValueError(f"{kind.value} does not write a classical bit")

    @property
    def end(self) -> int:
        if self.start is None or self.duration is None:
            raise ValueError("instruction is not scheduled")
        return self.start + self.duration

    def matrix(self) -> np.ndarray:
        return gate_matrix(self.kind, self.params)


def u1_matrix(lam: float) -> np.ndarray:
    return np.array([[1, 0], [0, np.exp(1j * lam)]], dtype=complex)


def u2_matrix(phi: float, lam: float) -> np.ndarray:
    return np.array(
        [[1, -np.exp(1j * lam)], [np.exp(1j * phi), np.exp(1j * (phi + lam))]],
        dtype=complex,
    ) / np.sqrt(2)


_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def gate_matrix(kind: GateKind, params: Sequence[float] = ()) -> np.ndarray:
    """Unitary of a native gate; CNOT is 4x4 with the control as the high bit."""
    kind = GateKind(kind)
    if kind is GateKind.U1:
        return u1_matrix(*params)
    if kind is GateKind.U2:
        return u2_matrix(*params)
    if kind is GateKind.H:
        return np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    if kind is GateKind.T:
        return u1_matrix(np.pi / 4)
    if kind is GateKind.TDG:
        return u1_matrix(-np.pi / 4)
    if kind is GateKind.ID:
        return np.eye(2, dtype=complex)
    if kind is GateKind.CNOT:
        return _CNOT.copy()
    raise ValueError(f"{kind.value} is not unitary")


# Convenience constructors, used by the builders.
def h(q: int) -> Instruction:
    return Instruction(GateKind.H, (q,))


def t(q: int) -> Instruction:
    return Instruction(GateKind.T, (q,))


def tdg(q: int) -> Instruction:
    return Instruction(GateKind.TDG, (q,))


def u1(q: int, lam: float) -> Instruction:
    return Instruction(GateKind.U1, (q,), (lam,))


def u2(q: int, phi: float, lam: float) -> Instruction:
    return Instruction(GateKind.U2, (q,), (phi, lam))


def cx(control: int, target: int) -> Instruction:
    return Instruction(GateKind.CNOT, (control, target))


def measure(q: int, clbit: int | None = None) -> Instruction:
    """Measure ``q`` into ``clbit``; without a bit the outcome is discarded."""
    return Instruction(GateKind.MEASURE, (q,), clbit=clbit, discard=clbit is None)


def reset(q: int) -> Instruction:
    return Instruction(GateKind.RESET, (q,))


def measure_and_reset(q: int) -> list[Instruction]:
    """Discarded measurement followed by a reset: every builder reset looks like this."""
    return [measure(q), reset(q)]


@dataclass(frozen=True)
class Circuit:
    """A scheduled, time-ordered instruction list.

    ``clbit_labels`` optionally names the logical meaning of each classical
    bit; the estimators use it to find the bits they need.
    """

    num_qubits: int
    num_clbits: int
    instructions: tuple[Instruction, ...]
    clbit_labels: tuple = ()
    name: str = ""
    durations: DurationTable = field(default=DEFAULT_DURATIONS, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        object.__setattr__(self, "clbit_labels", tuple(self.clbit_labels))
        if self.clbit_labels and len(self.clbit_labels) != self.num_clbits:
            raise ValueError("clbit_labels must name every classical bit")
        written: set[int] = set()
        free_at: dict[int, int] = {}
        last_start = None
        for ins in self.instructions:
            if ins.start is None or ins.duration is None:
                raise ValueError("circuit instructions must be scheduled")
            if last_start is not None and ins.start < last_start:
                raise ValueError("instructions must be sorted by start time")
            last_start = ins.start
            for q in ins.qubits:
                if q >= self.num_qubits:
                    raise ValueError(f"qubit {q} out of range for width {self.num_qubits}")
                if free_at.get(q, 0) > ins.start:
                    raise ValueError(f"overlapping instructions on qubit {q} at t={ins.start}")
                free_at[q] = ins.end
            if ins.clbit is not None:
                if not 0 <= ins.clbit < self.num_clbits:
                    raise ValueError(f"classical bit {ins.clbit} out of range")
                if ins.clbit in written:
                    raise ValueError(f"classical bit {ins.clbit} written twice")
                written.add(ins.clbit)

    @property
    def width(self) -> int:
        return self.num_qubits

    @property
    def makespan(self) -> int:
        return max((ins.end for ins in self.instructions), default=0)

    def count_ops(self, include_idle: bool = False) -> dict[GateKind, int]:
        counts: dict[GateKind, int] = {}
        for ins in self.instructions:
            if ins.idle and not include_idle:
                continue
            counts[ins.kind] = counts.get(ins.kind, 0) + 1
        return counts

    def qubit_timeline(self, q: int) -> list[Instruction]:
        return [ins for ins in self.instructions if q in ins.qubits]

    def has_reset(self) -> bool:
        return any(ins.kind is GateKind.RESET for ins in self.instructions)


def width(c: Circuit) -> int:
    return c.num_qubits


def makespan(c: Circuit) -> int:
    return c.makespan


def asap_start_times(instrs: Sequence[Instruction], durations: DurationTable = DEFAULT_DURATIONS) -> list[int]:
    """Earliest start of each instruction given program order on shared qubits."""
    free_at: dict[int, int] = {}
    starts = []
    for ins in instrs:
        start = max((free_at.get(q, 0) for q in ins.qubits), default=0)
        end = start + durations.of(ins.kind)
        for q in ins.qubits:
            free_at[q] = end
        starts.append(start)
    return starts


def _infer_sizes(instrs: Iterable[Instruction]) -> tuple[int, int]:
    nq, nc = 0, 0
    for ins in instrs:
        nq = max(nq, max(ins.qubits) + 1)
        if ins.clbit is not None:
            nc = max(nc, ins.clbit + 1)
    return nq, nc


def from_timed(
    instrs: Sequence[Instruction],
    starts: Sequence[int],
    durations: DurationTable = DEFAULT_DURATIONS,
    num_qubits: int | None = None,
    num_clbits: int | None = None,
    **kwargs,
) -> Circuit:
    """Build a circuit from instructions and explicit start times."""
    timed = [
        replace(ins, start=int(s), duration=durations.of(ins.kind))
        for ins, s in zip(instrs, starts)
    ]
    order = sorted(range(len(timed)), key=lambda i: (timed[i].start, i))
    nq, nc = _infer_sizes(timed)
    return Circuit(
        num_qubits=nq if num_qubits is None else num_qubits,
        num_clbits=nc if num_clbits is None else num_clbits,
        instructions=tuple(timed[i] for i in order),
        durations=durations,
        **kwargs,
    )


def schedule_asap(
    instrs: Sequence[Instruction],
    durations: DurationTable = DEFAULT_DURATIONS,
    num_qubits: int | None = None,
    num_clbits: int | None = None,
    **kwargs,
) -> Circuit:
    """Schedule every instruction as soon as all its qubits are free.

    Relative program order on shared qubits is preserved; existing start
    times are ignored.
    """
    instrs = list(instrs)
    return from_timed(instrs, asap_start_times(instrs, durations), durations, num_qubits, num_clbits, **kwargs)


def pad_idle(c: Circuit) -> Circuit:
    """Fill every gap on every qubit, from t=0 up to its last operation, with
    unit-duration identity instructions flagged as idle.

    A qubit waiting in its initial state before its first operation is idle
    too, so leading gaps are padded as well.
    """
    free_at: dict[int, int] = {}
    padding = []
    for ins in c.instructions:
        for q in ins.qubits:
            for tstep in range(free_at.get(q, 0), ins.start):
                padding.append(Instruction(GateKind.ID, (q,), idle=True, start=tstep, duration=1))
            free_at[q] = ins.end
    if not padding:
        return c
    merged = list(c.instructions) + padding
    # stable sort keeps the original order among equal start times
    merged.sort(key=lambda ins: ins.start)
    return replace(c, instructions=tuple(merged))


def is_padded(c: Circuit) -> bool:
    free_at: dict[int, int] = {}
    for ins in c.instructions:
        for q in ins.qubits:
            if free_at.get(q, 0) != ins.start:
                return False
            free_at[q] = ins.end
    return True


def cswap_decomposed(control: int, a: int, b: int) -> list[Instruction]:
    """Controlled-SWAP of ``a`` and ``b`` over {H, T, Tdg, CNOT}."""
    if len({control, a, b}) != 3:
        raise ValueError(f"cswap needs three distinct qubits, got {(control, a, b)}")
    c = control
    return [
        cx(b, a),
        h(b),
        cx(a, b),
        tdg(b),
        cx(c, b),
        t(b),
        cx(a, b),
        t(a),
        tdg(b),
        cx(c, b),
        cx(c, a),
        t(b),
        t(c),
        tdg(a),
        h(b),
        cx(c, a),
        cx(b, a),
    ]


def swap_decomposed(a: int, b: int) -> list[Instruction]:
    return [cx(a, b), cx(b, a), cx(a, b)]


def unitary_of(instrs: Sequence[Instruction], num_qubits: int) -> np.ndarray:
    """Dense unitary of a gate list (qubit 0 most significant). Test helper for
    small decompositions; measurement and reset are rejected."""
    dim = 2**num_qubits
    u = np.eye(dim, dtype=complex)
    for ins in instrs:
        if not ins.kind.is_unitary:
            raise ValueError("unitary_of only accepts unitary instructions")
        u = _embed(ins.matrix(), ins.qubits, num_qubits) @ u
    return u


def _embed(m: np.ndarray, qubits: Sequence[int], num_qubits: int) -> np.ndarray:
    k = len(qubits)
    rest = [q for q in range(num_qubits) if q not in qubits]
    perm = list(qubits) + rest
    full = np.kron(m, np.eye(2 ** (num_qubits - k)))
    full = full.reshape([2] * (2 * num_qubits))
    # axes of ``full`` are ordered as ``perm``; bring them back to 0..n-1
    inv = np.argsort(perm)
    full = full.transpose(list(inv) + [num_qubits + i for i in inv])
    return full.reshape(2**num_qubits, 2**num_qubits)
