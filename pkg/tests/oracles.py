"""Independent exact references used by the tests.

``exact_distribution`` evolves density matrices branch by branch over the
recorded classical bits, applying every noise channel in closed form. It
shares no code with the trajectory engine beyond the instruction types.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from entspec.circuit import Circuit, GateKind

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1, -1]).astype(complex)
P0 = np.diag([1, 0]).astype(complex)
P1 = np.diag([0, 1]).astype(complex)
PAULI = [I2, X, Y, Z]


def matrix_of(kind: GateKind, params=()) -> np.ndarray:
    """Gate matrices written out independently of the package."""
    if kind is GateKind.H:
        return np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    if kind is GateKind.T:
        return np.diag([1, np.exp(1j * math.pi / 4)])
    if kind is GateKind.TDG:
        return np.diag([1, np.exp(-1j * math.pi / 4)])
    if kind is GateKind.U1:
        return np.diag([1, np.exp(1j * params[0])])
    if kind is GateKind.U2:
        phi, lam = params
        return np.array([[1, -np.exp(1j * lam)], [np.exp(1j * phi), np.exp(1j * (phi + lam))]]) / math.sqrt(2)
    if kind is GateKind.CNOT:
        m = np.eye(4, dtype=complex)
        m[[2, 3]] = m[[3, 2]]
        return m
    if kind is GateKind.ID:
        return I2
    raise ValueError(kind)


def embed(m: np.ndarray, qubits, n: int) -> np.ndarray:
    """Full 2^n operator of ``m`` acting on ``qubits`` (qubit 0 most significant)."""
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    k = len(qubits)
    for col in range(dim):
        bits = [(col >> (n - 1 - q)) & 1 for q in range(n)]
        sub_in = sum(bits[q] << (k - 1 - j) for j, q in enumerate(qubits))
        for sub_out in range(2**k):
            amp = m[sub_out, sub_in]
            if amp == 0:
                continue
            nb = list(bits)
            for j, q in enumerate(qubits):
                nb[q] = (sub_out >> (k - 1 - j)) & 1
            row = sum(b << (n - 1 - q) for q, b in enumerate(nb))
            out[row, col] += amp
    return out


def statevector(instrs, n: int) -> np.ndarray:
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1
    for ins in instrs:
        psi = embed(matrix_of(ins.kind, ins.params), ins.qubits, n) @ psi
    return psi


class _DM:
    def __init__(self, n: int):
        self.n = n
        self.cache = {}

    def op(self, m, qubits):
        key = (m.tobytes(), tuple(qubits))
        if key not in self.cache:
            self.cache[key] = embed(m, qubits, self.n)
        return self.cache[key]

    def conj(self, rho, m, qubits):
        u = self.op(m, qubits)
        return u @ rho @ u.conj().T

    def reset_to(self, rho, q, v):
        a = self.conj(rho, P0, [q]) + self.conj(self.conj(rho, P1, [q]), X, [q])
        return a if v == 0 else self.conj(a, X, [q])

    def thermal(self, rho, q, duration, noise):
        p = noise.relaxation_prob(duration)
        if p == 0:
            return rho
        tp = noise.excited_population
        return (1 - p) * rho + p * ((1 - tp) * self.reset_to(rho, q, 0) + tp * self.reset_to(rho, q, 1))

    def gate_noise(self, rho, ins, noise):
        p = noise.pauli_prob(ins.kind)
        if p > 0:
            for q in ins.qubits:
                rho = (1 - 3 * p) * rho + p * sum(self.conj(rho, P, [q]) for P in PAULI[1:])
        lam = noise.depolarizing_lambda(ins.kind)
        if lam > 0:
            m = len(ins.qubits)
            acc = np.zeros_like(rho)
            for combo in itertools.product(range(4), repeat=m):
                if any(combo):
                    op = PAULI[combo[0]]
                    for c in combo[1:]:
                        op = np.kron(op, PAULI[c])
                    acc += self.conj(rho, op, ins.qubits)
            rho = (1 - lam * (4**m - 1) / 4**m) * rho + lam / 4**m * acc
        return rho


def exact_distribution(c: Circuit, noise) -> dict[str, float]:
    """Exact probability of every recorded bitstring under ``noise``."""
    n = c.num_qubits
    dm = _DM(n)
    rho0 = np.zeros((2**n, 2**n), dtype=complex)
    rho0[0, 0] = 1
    branches = {(): rho0}
    bit_order: list[int] = []
    for ins in c.instructions:
        new = {}
        for rec, rho in branches.items():
            k = ins.kind
            if k is GateKind.MEASURE:
                q = ins.qubits[0]
                parts = [dm.conj(rho, P0, [q]), dm.conj(rho, P1, [q])]
                if ins.clbit is None:
                    outs = {rec: parts[0] + parts[1]}
                else:
                    outs = {rec + (0,): parts[0], rec + (1,): parts[1]}
            elif k is GateKind.RESET:
                outs = {rec: dm.reset_to(rho, ins.qubits[0], 0)}
            else:
                if k is not GateKind.ID:
                    rho = dm.conj(rho, matrix_of(k, ins.params), ins.qubits)
                    rho = dm.gate_noise(rho, ins, noise)
                outs = {rec: rho}
            for r, m in outs.items():
                for q in ins.qubits:
                    m = dm.thermal(m, q, ins.duration, noise)
                new[r] = new.get(r, 0) + m
        branches = new
        if ins.kind is GateKind.MEASURE and ins.clbit is not None:
            bit_order.append(ins.clbit)
    dist = {}
    for rec, rho in branches.items():
        bits = ["0"] * c.num_clbits
        for b, v in zip(bit_order, rec):
            bits[b] = str(v)
        key = "".join(bits)
        dist[key] = dist.get(key, 0.0) + float(np.real(np.trace(rho)))
    # readout flips act on the record only, independently per bit
    f = noise.readout_flip_prob
    if f > 0:
        for b in bit_order:
            flipped = {}
            for key, p in dist.items():
                other = key[:b] + ("1" if key[b] == "0" else "0") + key[b + 1:]
                flipped[key] = flipped.get(key, 0.0) + (1 - f) * p
                flipped[other] = flipped.get(other, 0.0) + f * p
            dist = flipped
    return dist


def within_sigma(counts, dist: dict[str, float], k: float = 3.0, floor: float = 0.0) -> list[str]:
    """Outcomes whose observed frequency lies outside k binomial sigmas."""
    shots = counts.shots
    bad = []
    keys = set(dist) | {key for key, _ in counts.items()}
    for key in keys:
        p = dist.get(key, 0.0)
        sigma = math.sqrt(max(p * (1 - p), 1e-12) / shots)
        obs = counts[key] / shots
        if abs(obs - p) > k * sigma + floor:
            bad.append(f"{key}: observed {obs:.5f}, exact {p:.5f}")
    return bad
