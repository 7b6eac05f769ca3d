"""Stochastic-trajectory simulation with mid-circuit measurement and reset.

Two routes are provided. The single-state functions (``apply_gate``,
``apply_thermal``, ``apply_gate_noise``, ``measure``, ``reset``) act on one
``StateVector`` with a numpy ``Generator`` and serve as a readable reference.
``run`` is the production engine: it simulates a batch of shots at once and
keeps only the qubits that are currently entangled in the state array.

Engine notes:

* A qubit that is in a computational basis state in every shot is held
  "detached" as one classical bit per shot. It joins the state array only when
  a gate can create superposition or entanglement (H, U2, a CNOT whose control
  is in the array) and leaves it when measured, reset, or retired.
* A qubit is retired after its last instruction by an unrecorded Born-rule
  measurement. Nothing acts on it later, so this leaves every recorded outcome
  distribution unchanged.
* Instructions are executed in a dependency-respecting order chosen to keep
  the state array small (see ``_plan``). Per-qubit program order is kept, so
  the sampled distribution is the same as executing in start-time order.
* Every draw is keyed by (seed, shot, instruction index), so results do not
  depend on batch size, worker count, or execution order between shots.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .circuit import Circuit, GateKind, Instruction, gate_matrix, is_padded
from .noise import NoiseProfile, load_noise, preset
from .rng import ShotStreams

__all__ = [
    "Counts",
    "NoiseProfile",
    "ShotBatch",
    "StateVector",
    "apply_gate",
    "apply_gate_noise",
    "apply_thermal",
    "load_noise",
    "measure",
    "preset",
    "reset",
    "run",
    "run_shots",
]

# 2x2 Pauli matrices indexed 0=I, 1=X, 2=Y, 3=Z
PAULIS = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


# ---------------------------------------------------------------------------
# Outcome containers


class Counts:
    """Aggregated outcome frequencies over recorded classical bits.

    Bitstrings list classical bit 0 first (leftmost).
    """

    def __init__(self, counts: Mapping[str, int], num_bits: int | None = None):
        items = {str(k): int(v) for k, v in counts.items() if int(v) != 0}
        if any(v < 0 for v in items.values()):
            raise ValueError("counts must be non-negative")
        widths = {len(k) for k in items}
        if num_bits is None:
            if len(widths) > 1:
                raise ValueError("bitstrings have inconsistent lengths")
            num_bits = widths.pop() if widths else 0
        elif widths - {num_bits}:
            raise ValueError(f"bitstrings must have {num_bits} bits")
        if any(set(k) - {"0", "1"} for k in items):
            raise ValueError("bitstrings may only contain 0 and 1")
        self.num_bits = int(num_bits)
        self._counts = dict(sorted(items.items()))

    @classmethod
    def from_bits(cls, bits: np.ndarray) -> "Counts":
        """Aggregate a (shots, num_bits) 0/1 array."""
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.ndim != 2:
            raise ValueError("bits must be a 2-D array")
        num_bits = bits.shape[1]
        if bits.shape[0] == 0:
            return cls({}, num_bits)
        rows, freq = np.unique(bits, axis=0, return_counts=True)
        keys = ["".join("01"[b] for b in row) for row in rows.tolist()]
        return cls(dict(zip(keys, freq.tolist())), num_bits)

    @property
    def shots(self) -> int:
        return sum(self._counts.values())

    def items(self):
        return self._counts.items()

    def as_dict(self) -> dict[str, int]:
        return dict(self._counts)

    def __getitem__(self, key: str) -> int:
        return self._counts.get(key, 0)

    def __eq__(self, other) -> bool:
        return isinstance(other, Counts) and (self.num_bits, self._counts) == (other.num_bits, other._counts)

    def __repr__(self) -> str:
        return f"Counts(shots={self.shots}, num_bits={self.num_bits}, outcomes={len(self._counts)})"

    def outcome_array(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct outcomes as a (U, num_bits) uint8 array and their counts."""
        if not self._counts:
            return np.zeros((0, self.num_bits), dtype=np.uint8), np.zeros(0, dtype=np.int64)
        keys = list(self._counts)
        arr = np.frombuffer("".join(keys).encode(), dtype=np.uint8).reshape(len(keys), self.num_bits) - ord("0")
        return arr.astype(np.uint8), np.fromiter(self._counts.values(), dtype=np.int64, count=len(keys))

    def marginal(self, bits: Sequence[int]) -> "Counts":
        out: dict[str, int] = {}
        for key, n in self._counts.items():
            sub = "".join(key[b] for b in bits)
            out[sub] = out.get(sub, 0) + n
        return Counts(out, len(bits))

    def merge(self, other: "Counts") -> "Counts":
        if self.num_bits != other.num_bits and self._counts and other._counts:
            raise ValueError("cannot merge counts over different bit widths")
        out = dict(self._counts)
        for key, n in other.items():
            out[key] = out.get(key, 0) + n
        return Counts(out, max(self.num_bits, other.num_bits))

    __add__ = merge

    def to_dict(self) -> dict:
        return {"shots": self.shots, "counts": dict(self._counts)}

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "Counts":
        data = json.loads(text)
        out = cls(data["counts"])
        if "shots" in data and data["shots"] != out.shots:
            raise ValueError("shots field disagrees with the sum of counts")
        return out


@dataclass
class ShotBatch:
    """Per-shot classical records of a run.

    Attributes:
        bits: (shots, num_clbits) recorded bits, readout error included.
        discarded: (shots, d) outcomes of discarded pre-reset measurements,
            readout error included, in circuit order.
        discarded_from: circuit instruction index of each discarded column.
        seed: master seed of the run.
        first_shot: global index of row 0.
    """

    bits: np.ndarray
    discarded: np.ndarray
    discarded_from: tuple[int, ...] = ()
    seed: int = 0
    first_shot: int = 0

    @property
    def shots(self) -> int:
        return self.bits.shape[0]

    def counts(self) -> Counts:
        return Counts.from_bits(self.bits)

    def record(self, i: int) -> dict[int, int]:
        """Classical bit assignment of shot ``i`` of the batch."""
        return {b: int(v) for b, v in enumerate(self.bits[i])}


# ---------------------------------------------------------------------------
# Single-state reference route


@dataclass
class StateVector:
    """Pure state over ``num_qubits`` qubits; qubit 0 is the most significant bit."""

    amplitudes: np.ndarray
    num_qubits: int = field(init=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        n = int(round(np.log2(len(amps))))
        if 2**n != len(amps):
            raise ValueError("amplitude count must be a power of two")
        self.amplitudes = amps
        self.num_qubits = n

    @classmethod
    def zero(cls, num_qubits: int) -> "StateVector":
        amps = np.zeros(2**num_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.num_qubits)

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def _check(self, qubits: Iterable[int]):
        for q in qubits:
            if not 0 <= q < self.num_qubits:
                raise IndexError(f"qubit {q} out of range for {self.num_qubits} qubits")


def _apply_matrix(state: StateVector, m: np.ndarray, qubits: Sequence[int]) -> StateVector:
    state._check(qubits)
    k = len(qubits)
    psi = state.tensor()
    m = m.reshape((2,) * (2 * k))
    out = np.tensordot(m, psi, axes=(list(range(k, 2 * k)), list(qubits)))
    out = np.moveaxis(out, list(range(k)), list(qubits))
    return StateVector(out.reshape(-1))


def apply_gate(state: StateVector, instr: Instruction) -> StateVector:
    """Ideal action of a unitary instruction."""
    if not instr.kind.is_unitary:
        raise ValueError(f"{instr.kind.value} is not a unitary instruction")
    return _apply_matrix(state, instr.matrix(), instr.qubits)


def _qubit_prob_one(state: StateVector, qubit: int) -> float:
    psi = np.moveaxis(state.tensor(), qubit, 0)
    p1 = float(np.sum(np.abs(psi[1]) ** 2))
    return p1 / float(np.sum(np.abs(psi) ** 2))


def _set_qubit(state: StateVector, qubit: int, outcome: int, value: int) -> StateVector:
    """Keep the ``outcome`` branch of ``qubit``, renormalize, and move it to ``value``."""
    psi = np.moveaxis(state.tensor(), qubit, 0)
    branch = psi[outcome]
    out = np.zeros_like(psi)
    out[value] = branch / np.linalg.norm(branch)
    return StateVector(np.moveaxis(out, 0, qubit).reshape(-1))


def apply_thermal(
    state: StateVector, qubit: int, duration: float, noise: NoiseProfile, rng: np.random.Generator
) -> StateVector:
    """Relaxation during ``duration`` timesteps as a probabilistic reset.

    With probability ``p_rel (1 - T_pop)`` the qubit is reset to |0>, with
    probability ``p_rel T_pop`` to |1>, else nothing happens. The reset takes a
    Born-rule sample of the qubit first (unrecorded) and then sets its value,
    which averages to the thermal channel even when the qubit is entangled.
    """
    if duration < 0:
        raise ValueError("duration must be non-negative")
    state._check([qubit])
    p_rel = noise.relaxation_prob(duration)
    if p_rel == 0.0:
        return state
    u = rng.random()
    if u >= p_rel:
        return state
    value = 1 if u < p_rel * noise.excited_population else 0
    outcome = int(rng.random() < _qubit_prob_one(state, qubit))
    return _set_qubit(state, qubit, outcome, value)


def _depolarizing_pauli(u: float, lam: float, m: int) -> int | None:
    """Map one uniform onto 'no error' or a non-identity m-qubit Pauli index."""
    slot = lam / 4**m
    if u >= slot * (4**m - 1):
        return None
    return min(int(u / slot), 4**m - 2) + 1


def _pauli_digits(index: int, m: int) -> list[int]:
    """Per-qubit Pauli labels of an m-qubit Pauli index, first qubit most significant."""
    return [(index >> (2 * (m - 1 - j))) & 3 for j in range(m)]


def apply_gate_noise(
    state: StateVector, instr: Instruction, noise: NoiseProfile, rng: np.random.Generator
) -> StateVector:
    """Pauli channel then depolarizing channel after a non-identity gate."""
    if not instr.kind.is_unitary:
        raise ValueError("gate noise applies to unitary instructions only")
    if instr.idle or instr.kind is GateKind.ID:
        return state
    p = noise.pauli_prob(instr.kind)
    if p > 0:
        for q in instr.qubits:
            u = rng.random()
            if u < 3 * p:
                state = _apply_matrix(state, PAULIS[1 + min(int(u / p), 2)], [q])
    lam = noise.depolarizing_lambda(instr.kind)
    if lam > 0:
        m = len(instr.qubits)
        idx = _depolarizing_pauli(rng.random(), lam, m)
        if idx is not None:
            for q, d in zip(instr.qubits, _pauli_digits(idx, m)):
                if d:
                    state = _apply_matrix(state, PAULIS[d], [q])
    return state


def measure(
    state: StateVector, qubit: int, noise: NoiseProfile, rng: np.random.Generator
) -> tuple[StateVector, int, int]:
    """Born-rule measurement; returns (collapsed state, raw bit, recorded bit)."""
    state._check([qubit])
    raw = int(rng.random() < _qubit_prob_one(state, qubit))
    recorded = raw ^ int(rng.random() < noise.readout_flip_prob)
    return _set_qubit(state, qubit, raw, raw), raw, recorded


def reset(state: StateVector, qubit: int, rng: np.random.Generator | None = None) -> StateVector:
    """Unrecorded measurement followed by a conditional X."""
    state._check([qubit])
    rng = np.random.default_rng() if rng is None else rng
    outcome = int(rng.random() < _qubit_prob_one(state, qubit))
    return _set_qubit(state, qubit, outcome, 0)


# ---------------------------------------------------------------------------
# Batched engine

# Draw counters: instruction index * _STRIDE + slot
_STRIDE = 16
_PAULI = 0  # +j for the j-th acted qubit
_DEPOL = 2
_THERMAL = 3  # +j
_THERMAL_BORN = 5  # +j
_BORN = 7
_READOUT = 8


@dataclass(frozen=True)
class _Step:
    op: str  # "gate", "idle", "measure", "reset", "retire"
    qubits: tuple[int, ...]
    index: int  # counter base: circuit instruction index
    instr: Instruction | None = None
    duration: int = 0


def _merge_idles(c: Circuit) -> list[tuple[Instruction, int, int]]:
    """Collapse each run of consecutive idle identities on one qubit.

    Returns (instruction, index, duration) triples. Sequential unit-time
    relaxations compose exactly into one relaxation of the total duration.
    """
    out: list[tuple[Instruction, int, int]] = []
    open_run: dict[int, int] = {}  # qubit -> position in out of its current idle run
    for idx, ins in enumerate(c.instructions):
        if ins.kind is GateKind.ID:
            q = ins.qubits[0]
            pos = open_run.get(q)
            if pos is not None:
                head, head_idx, dur = out[pos]
                out[pos] = (head, head_idx, dur + ins.duration)
                continue
            open_run[q] = len(out)
            out.append((ins, idx, ins.duration))
        else:
            for q in ins.qubits:
                open_run.pop(q, None)
            out.append((ins, idx, ins.duration))
    return out


def _attaches(ins: Instruction, attached: set[int]) -> list[int]:
    """Qubits that executing ``ins`` pulls into the state array."""
    k = ins.kind
    if k in (GateKind.H, GateKind.U2):
        q = ins.qubits[0]
        return [] if q in attached else [q]
    if k is GateKind.CNOT:
        c, t = ins.qubits
        return [t] if c in attached and t not in attached else []
    return []


def _plan(c: Circuit) -> tuple[list[_Step], int]:
    """Choose an execution order and return it with the peak state-array width.

    Greedy rule: run any ready instruction that does not enlarge the state
    array; otherwise run the earliest pending instruction on a qubit already
    in the array, together with everything it depends on; with an empty array
    run the earliest ready instruction.
    """
    items = _merge_idles(c)
    per_qubit: dict[int, list[int]] = {}
    rank: dict[tuple[int, int], int] = {}  # (qubit, pos) -> place in that qubit's sequence
    for pos, (ins, _, _) in enumerate(items):
        for q in ins.qubits:
            seq = per_qubit.setdefault(q, [])
            rank[q, pos] = len(seq)
            seq.append(pos)
    head = {q: 0 for q in per_qubit}
    done = [False] * len(items)
    attached: set[int] = set()
    steps: list[_Step] = []
    peak = 0
    remaining = len(items)

    def next_on(q: int) -> int | None:
        seq = per_qubit[q]
        return seq[head[q]] if head[q] < len(seq) else None

    def ready(pos: int) -> bool:
        return all(next_on(q) == pos for q in items[pos][0].qubits)

    def execute(pos: int):
        nonlocal peak, remaining
        ins, idx, dur = items[pos]
        attached.update(_attaches(ins, attached))
        peak = max(peak, len(attached))
        if ins.kind is GateKind.ID:
            steps.append(_Step("idle", ins.qubits, idx, ins, dur))
        elif ins.kind is GateKind.MEASURE:
            steps.append(_Step("measure", ins.qubits, idx, ins, dur))
            attached.discard(ins.qubits[0])
        elif ins.kind is GateKind.RESET:
            steps.append(_Step("reset", ins.qubits, idx, ins, dur))
            attached.discard(ins.qubits[0])
        else:
            steps.append(_Step("gate", ins.qubits, idx, ins, dur))
        done[pos] = True
        remaining -= 1
        for q in ins.qubits:
            head[q] += 1
            if next_on(q) is None and q in attached:
                steps.append(_Step("retire", (q,), len(c.instructions) + q))
                attached.discard(q)

    def pull(pos: int):
        # every unexecuted ancestor of pos, run in circuit order
        need, stack = set(), [pos]
        while stack:
            p = stack.pop()
            if p in need or done[p]:
                continue
            need.add(p)
            for q in items[p][0].qubits:
                i = rank[q, p]
                if i > 0 and not done[per_qubit[q][i - 1]]:
                    stack.append(per_qubit[q][i - 1])
        for p in sorted(need):
            execute(p)

    while remaining:
        heads = sorted({p for q in per_qubit if (p := next_on(q)) is not None})
        free = [p for p in heads if ready(p) and not _attaches(items[p][0], attached)]
        if free:
            for p in free:
                if not done[p] and ready(p) and not _attaches(items[p][0], attached):
                    execute(p)
            continue
        live = [p for q in attached if (p := next_on(q)) is not None]
        pull(min(live) if live else min(p for p in heads if ready(p)))
    return steps, peak


class _Batch:
    """State of a block of shots during execution."""

    def __init__(self, num_qubits: int, streams: ShotStreams, noise: NoiseProfile):
        self.B = streams.count
        self.streams = streams
        self.noise = noise
        self.psi = np.ones((self.B, 1), dtype=complex)
        self.order: list[int] = []  # attached qubits, most significant first
        self.value = np.zeros((num_qubits, self.B), dtype=np.uint8)  # detached basis values

    # -- layout helpers
    def _view(self, q: int, psi: np.ndarray | None = None) -> np.ndarray:
        psi = self.psi if psi is None else psi
        j = self.order.index(q)
        return psi.reshape(psi.shape[0], 2**j, 2, 2 ** (len(self.order) - j - 1))

    def attach(self, q: int):
        if q in self.order:
            return
        v = self.value[q].astype(bool)[:, None]
        new = np.empty((self.B, self.psi.shape[1], 2), dtype=complex)
        new[:, :, 0] = np.where(v, 0, self.psi)
        new[:, :, 1] = np.where(v, self.psi, 0)
        self.psi = new.reshape(self.B, -1)
        self.order.append(q)

    def prob_one(self, q: int, rows=None) -> np.ndarray:
        v = self._view(q, self.psi if rows is None else self.psi[rows])
        w = np.abs(v) ** 2
        p1 = w[:, :, 1, :].sum(axis=(1, 2))
        tot = p1 + w[:, :, 0, :].sum(axis=(1, 2))
        return p1 / tot

    def detach(self, q: int, outcome: np.ndarray):
        v = self._view(q)
        new = np.where(outcome.astype(bool)[:, None, None], v[:, :, 1, :], v[:, :, 0, :])
        new = new.reshape(self.B, -1)
        new /= np.linalg.norm(new, axis=1, keepdims=True)
        self.order.remove(q)
        self.psi = new
        self.value[q] = outcome

    # -- unitary pieces
    def apply_1q(self, q: int, m: np.ndarray, rows=None):
        if rows is None:
            v = self._view(q)
            if m[0, 1] == 0 and m[1, 0] == 0:
                if m[0, 0] != 1:
                    v[:, :, 0, :] *= m[0, 0]
                if m[1, 1] != 1:
                    v[:, :, 1, :] *= m[1, 1]
                return
            a, b = v[:, :, 0, :].copy(), v[:, :, 1, :]
            v[:, :, 0, :] = m[0, 0] * a + m[0, 1] * b
            v[:, :, 1, :] = m[1, 0] * a + m[1, 1] * b
            return
        sub = self.psi[rows]
        v = self._view(q, sub)
        a, b = v[:, :, 0, :].copy(), v[:, :, 1, :].copy()
        v[:, :, 0, :] = m[0, 0] * a + m[0, 1] * b
        v[:, :, 1, :] = m[1, 0] * a + m[1, 1] * b
        self.psi[rows] = sub

    def cnot_attached(self, c: int, t: int):
        L = len(self.order)
        jc, jt = self.order.index(c), self.order.index(t)
        psi = self.psi.reshape((self.B,) + (2,) * L)
        idx0 = [slice(None)] * (L + 1)
        idx1 = list(idx0)
        idx0[jc + 1], idx0[jt + 1] = 1, 0
        idx1[jc + 1], idx1[jt + 1] = 1, 1
        idx0, idx1 = tuple(idx0), tuple(idx1)
        tmp = psi[idx0].copy()
        psi[idx0] = psi[idx1]
        psi[idx1] = tmp

    def pauli(self, q: int, which: np.ndarray, rows: np.ndarray):
        """Apply Pauli ``which[i]`` (1=X, 2=Y, 3=Z) on ``q`` for shot ``rows[i]``."""
        if q in self.order:
            for p in (1, 2, 3):
                sel = rows[which == p]
                if len(sel):
                    self.apply_1q(q, PAULIS[p], sel)
        else:
            flip = rows[(which == 1) | (which == 2)]
            self.value[q, flip] ^= 1

    # -- instruction kinds
    def gate(self, ins: Instruction):
        k = ins.kind
        if k is GateKind.CNOT:
            c, t = ins.qubits
            if c in self.order:
                self.attach(t)
                self.cnot_attached(c, t)
            elif t in self.order:
                rows = np.nonzero(self.value[c])[0]
                if len(rows):
                    self.apply_1q(t, PAULIS[1], rows)
            else:
                self.value[t] ^= self.value[c]
            return
        q = ins.qubits[0]
        if k in (GateKind.H, GateKind.U2):
            self.attach(q)
        if q in self.order:
            self.apply_1q(q, gate_matrix(k, ins.params))
        # diagonal gates on a basis state only add a phase per shot

    def gate_noise(self, ins: Instruction, idx: int):
        noise = self.noise
        base = idx * _STRIDE
        p = noise.pauli_prob(ins.kind)
        if p > 0:
            for j, q in enumerate(ins.qubits):
                u = self.streams.uniform(base + _PAULI + j)
                rows = np.nonzero(u < 3 * p)[0]
                if len(rows):
                    which = np.minimum((u[rows] / p).astype(np.int64), 2) + 1
                    self.pauli(q, which, rows)
        lam = noise.depolarizing_lambda(ins.kind)
        if lam > 0:
            m = len(ins.qubits)
            slot = lam / 4**m
            u = self.streams.uniform(base + _DEPOL)
            rows = np.nonzero(u < slot * (4**m - 1))[0]
            if len(rows):
                index = np.minimum((u[rows] / slot).astype(np.int64), 4**m - 2) + 1
                for j, q in enumerate(ins.qubits):
                    digit = (index >> (2 * (m - 1 - j))) & 3
                    sel = digit != 0
                    if sel.any():
                        self.pauli(q, digit[sel], rows[sel])

    def thermal(self, q: int, duration: int, idx: int, slot: int):
        p_rel = self.noise.relaxation_prob(duration)
        if p_rel == 0.0:
            return
        u = self.streams.uniform(idx * _STRIDE + _THERMAL + slot)
        rows = np.nonzero(u < p_rel)[0]
        if not len(rows):
            return
        target = (u[rows] < p_rel * self.noise.excited_population).astype(np.uint8)
        if q not in self.order:
            self.value[q, rows] = target
            return
        born = self.streams.uniform(idx * _STRIDE + _THERMAL_BORN + slot)[rows]
        outcome = (born < self.prob_one(q, rows)).astype(bool)
        sub = self.psi[rows]
        v = self._view(q, sub)
        branch = np.where(outcome[:, None, None], v[:, :, 1, :], v[:, :, 0, :])
        norm = np.sqrt((np.abs(branch) ** 2).sum(axis=(1, 2)))
        branch = branch / norm[:, None, None]
        tgt = target.astype(bool)[:, None, None]
        v[:, :, 0, :] = np.where(tgt, 0, branch)
        v[:, :, 1, :] = np.where(tgt, branch, 0)
        self.psi[rows] = sub

    def sample(self, q: int, counter: int) -> np.ndarray:
        """Born-rule outcome of ``q`` per shot; the qubit leaves the state array."""
        if q not in self.order:
            return self.value[q].copy()
        u = self.streams.uniform(counter)
        outcome = (u < self.prob_one(q)).astype(np.uint8)
        self.detach(q, outcome)
        return outcome

    def readout(self, raw: np.ndarray, idx: int) -> np.ndarray:
        p = self.noise.readout_flip_prob
        if p == 0:
            return raw
        flips = self.streams.uniform(idx * _STRIDE + _READOUT) < p
        return raw ^ flips.astype(np.uint8)


def _check_runnable(c: Circuit):
    if not is_padded(c):
        raise ValueError("circuit has idle gaps; call pad_idle first")


def _run_block(c: Circuit, steps: list[_Step], noise: NoiseProfile, streams: ShotStreams,
               discard_cols: dict[int, int]) -> tuple[np.ndarray, np.ndarray]:
    batch = _Batch(c.num_qubits, streams, noise)
    bits = np.zeros((streams.count, c.num_clbits), dtype=np.uint8)
    discarded = np.zeros((streams.count, len(discard_cols)), dtype=np.uint8)
    gate_noise = noise.has_gate_noise
    for st in steps:
        if st.op == "gate":
            batch.gate(st.instr)
            if gate_noise:
                batch.gate_noise(st.instr, st.index)
            for j, q in enumerate(st.qubits):
                batch.thermal(q, st.duration, st.index, j)
        elif st.op == "idle":
            batch.thermal(st.qubits[0], st.duration, st.index, 0)
        elif st.op == "measure":
            q = st.qubits[0]
            raw = batch.sample(q, st.index * _STRIDE + _BORN)
            rec = batch.readout(raw, st.index)
            if st.instr.clbit is not None:
                bits[:, st.instr.clbit] = rec
            else:
                discarded[:, discard_cols[st.index]] = rec
            batch.thermal(q, st.duration, st.index, 0)
        elif st.op == "reset":
            q = st.qubits[0]
            batch.sample(q, st.index * _STRIDE + _BORN)
            batch.value[q] = 0
            batch.thermal(q, st.duration, st.index, 0)
        else:  # retire
            batch.sample(st.qubits[0], st.index * _STRIDE + _BORN)
    return bits, discarded


def plan_width(c: Circuit) -> int:
    """Peak number of qubits the engine holds in its state array for ``c``."""
    return _plan(c)[1]


def run_shots(
    c: Circuit,
    noise: NoiseProfile | str = "noiseless",
    shots: int = 1000,
    seed: int = 0,
    *,
    first_shot: int = 0,
    block_size: int | None = None,
    workers: int = 1,
) -> ShotBatch:
    """Simulate ``shots`` trajectories and return the per-shot records.

    Args:
        c: Scheduled, idle-padded circuit.
        noise: Profile, preset name, or JSON path.
        shots: Number of shots.
        seed: Master seed; shot ``i`` depends only on ``(seed, first_shot + i)``.
        first_shot: Global index of the first shot, for splitting a run.
        block_size: Shots simulated together; chosen from the plan width if None.
        workers: Threads working on blocks concurrently.
    """
    noise = load_noise(noise)
    if shots < 0:
        raise ValueError("shots must be non-negative")
    _check_runnable(c)
    steps, peak = _plan(c)
    if block_size is None:
        block_size = int(np.clip(2**20 >> peak, 256, 20000))
    discard_idx = [i for i, ins in enumerate(c.instructions)
                   if ins.kind is GateKind.MEASURE and ins.clbit is None]
    discard_cols = {i: j for j, i in enumerate(discard_idx)}
    starts = list(range(0, shots, block_size))

    def one(start: int):
        count = min(block_size, shots - start)
        return _run_block(c, steps, noise, ShotStreams(seed, first_shot + start, count), discard_cols)

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, starts))
    else:
        parts = [one(s) for s in starts]
    if parts:
        bits = np.concatenate([p[0] for p in parts])
        discarded = np.concatenate([p[1] for p in parts])
    else:
        bits = np.zeros((0, c.num_clbits), dtype=np.uint8)
        discarded = np.zeros((0, len(discard_idx)), dtype=np.uint8)
    return ShotBatch(bits, discarded, tuple(discard_idx), seed, first_shot)


def run(
    c: Circuit,
    noise: NoiseProfile | str = "noiseless",
    shots: int = 1000,
    seed: int = 0,
    **kwargs,
) -> Counts:
    """Simulate and aggregate the recorded bits into ``Counts``."""
    return run_shots(c, noise, shots, seed, **kwargs).counts()
