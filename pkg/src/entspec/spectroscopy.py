"""Circuit builders for the six spectroscopy algorithms and their post-processing.

Conventions:

* A state-preparation hook is a callable ``prep(a_qubits, b_qubits)`` that
  returns the instructions preparing one copy of the bipartite state with
  subsystem A on ``a_qubits`` and B on ``b_qubits`` (``k`` qubits each), all
  starting from |0>. ``theta_prep(theta)`` is the built-in k=1 family.
* Hadamard-test circuits put the control ancilla on qubit 0 and record it in
  classical bit 0.
* Two-copy-test circuits label every classical bit with a ``BitLabel`` giving
  the logical copy, whether it is a primed copy, subsystem and position. The
  primed copies carry the permutation: A of copy i is compared with A of primed
  copy i-1 (mod n) and B of copy i with B of primed copy i.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from .circuit import (
    DEFAULT_DURATIONS,
    Circuit,
    DurationTable,
    Instruction,
    asap_start_times,
    cswap_decomposed,
    cx,
    from_timed,
    h,
    measure,
    measure_and_reset,
    pad_idle,
    reset,
    u2,
)
from .sim import Counts, StateVector, apply_gate

PrepHook = Callable[[Sequence[int], Sequence[int]], list]

#: confidence level of every statistical interval (one-sigma equivalent)
CONFIDENCE = 0.84


class Algorithm(str, enum.Enum):
    HT = "ht"
    QE_HT_4K = "qe-ht-4k"
    QE_HT_3K = "qe-ht-3k"
    TCT = "tct"
    QE_TCT_6K = "qe-tct-6k"
    QE_TCT_4K = "qe-tct-4k"

    @property
    def family(self) -> str:
        return "ht" if self in (Algorithm.HT, Algorithm.QE_HT_4K, Algorithm.QE_HT_3K) else "tct"

    @classmethod
    def parse(cls, name: "str | Algorithm") -> "Algorithm":
        if isinstance(name, Algorithm):
            return name
        key = str(name).strip().lower().replace("_", "-")
        for alg in cls:
            if key in (alg.value, alg.name.lower().replace("_", "-")):
                return alg
        raise ValueError(f"unknown algorithm {name!r}; choose from {[a.value for a in cls]}")


ALGORITHMS = tuple(Algorithm)


def expected_width(algorithm: Algorithm | str, n: int, k: int) -> int:
    """Register count of each algorithm's circuit."""
    return {
        Algorithm.HT: 2 * k * n + 1,
        Algorithm.QE_HT_4K: 4 * k + 1,
        Algorithm.QE_HT_3K: 3 * k + 1,
        Algorithm.TCT: 4 * k * n,
        Algorithm.QE_TCT_6K: 6 * k,
        Algorithm.QE_TCT_4K: 4 * k,
    }[Algorithm.parse(algorithm)]


# ---------------------------------------------------------------------------
# State preparation and exact reference values


def build_state_prep(theta: float, a: int = 0, b: int = 1) -> list[Instruction]:
    """k=1 preparation: H on A, U2(theta - pi/2, pi/2) on B, then CNOT A->B.

    The reduced state of A has eigenvalues (1 +- sin(theta))/2, so theta=0 is
    maximally entangled and theta=pi/2 is a product state.
    """
    if not 0.0 <= theta <= math.pi:
        raise ValueError(f"theta must lie in [0, pi], got {theta}")
    return [h(a), u2(b, theta - math.pi / 2, math.pi / 2), cx(a, b)]


def theta_prep(theta: float) -> PrepHook:
    """Preparation hook for the k=1 theta family."""
    build_state_prep(theta)  # validate once

    def prep(a_qubits: Sequence[int], b_qubits: Sequence[int]) -> list[Instruction]:
        if len(a_qubits) != 1 or len(b_qubits) != 1:
            raise ValueError("the theta family is defined for k=1 only")
        return build_state_prep(theta, a_qubits[0], b_qubits[0])

    prep.theta = theta
    prep.k = 1
    return prep


def prep_makespan(prep: PrepHook, k: int, durations: DurationTable = DEFAULT_DURATIONS) -> int:
    """Scheduled makespan of one preparation block (T_sp)."""
    instrs = prep(tuple(range(k)), tuple(range(k, 2 * k)))
    starts = asap_start_times(instrs, durations)
    return max((s + durations.of(i.kind) for s, i in zip(starts, instrs)), default=0)


def prepared_state(prep: PrepHook, k: int) -> StateVector:
    state = StateVector.zero(2 * k)
    for ins in prep(tuple(range(k)), tuple(range(k, 2 * k))):
        state = apply_gate(state, ins)
    return state


def reduced_density_matrix(prep: PrepHook, k: int) -> np.ndarray:
    """rho_A of the prepared state by dense partial trace over B."""
    psi = prepared_state(prep, k).amplitudes.reshape(2**k, 2**k)
    return psi @ psi.conj().T


def prep_eigenvalues(prep: PrepHook, k: int) -> np.ndarray:
    vals = np.linalg.eigvalsh(reduced_density_matrix(prep, k))
    return np.clip(vals, 0.0, 1.0)[::-1]


def reduced_eigenvalues(theta: float) -> np.ndarray:
    """Eigenvalues of rho_A for the theta family, largest first."""
    return prep_eigenvalues(theta_prep(theta), 1)


def trace_oracle(theta: float, n: int) -> float:
    """Exact Tr(rho_A^n) for the theta family."""
    return float(np.sum(reduced_eigenvalues(theta) ** n))


def prep_trace(prep: PrepHook, k: int, n: int) -> float:
    return float(np.sum(prep_eigenvalues(prep, k) ** n))


def thetas_for_even_traces(n: int, count: int = 20) -> np.ndarray:
    """Angles whose traces Tr(rho_A^n) are evenly spaced over [2^(1-n), 1].

    The trace rises monotonically on theta in [0, pi/2]; each target is
    inverted by bracketing root search. Returned angles increase.
    """
    if count < 2:
        raise ValueError("count must be at least 2")
    if n < 1:
        raise ValueError("n must be positive")
    lo = 2.0 ** (1 - n)
    targets = np.linspace(lo, 1.0, count)
    out = np.empty(count)
    for i, target in enumerate(targets):
        if i == 0 or n == 1:
            out[i] = 0.0 if i == 0 else math.pi / 2
            continue
        if i == count - 1:
            out[i] = math.pi / 2
            continue
        out[i] = brentq(lambda t: trace_oracle(t, n) - target, 0.0, math.pi / 2, xtol=1e-13, rtol=1e-15)
    return out


# ---------------------------------------------------------------------------
# Circuit assembly helpers


class _Program:
    """Instruction list with movable preparation blocks."""

    def __init__(self, durations: DurationTable):
        self.durations = durations
        self.instrs: list[Instruction] = []
        self.blocks: list[list[int]] = []

    def add(self, *instrs: Instruction):
        self.instrs.extend(instrs)

    def prep(self, prep: PrepHook, a_qubits: Sequence[int], b_qubits: Sequence[int],
             lead: Sequence[Instruction] = ()):
        """Add a preparation block; ``lead`` instructions (resets of reused
        registers) join the block so they move with it."""
        block = prep(tuple(a_qubits), tuple(b_qubits))
        allowed = set(a_qubits) | set(b_qubits)
        for ins in block:
            if not set(ins.qubits) <= allowed or not ins.kind.is_unitary:
                raise ValueError("a preparation block may only apply gates to its own qubits")
        start = len(self.instrs)
        self.instrs.extend(lead)
        self.instrs.extend(block)
        self.blocks.append(list(range(start, len(self.instrs))))

    def build(self, num_qubits: int, num_clbits: int, clbit_labels=(), name: str = "") -> Circuit:
        """Schedule ASAP, then move every instruction of a preparation block as
        late as its successors allow, then pad idle time."""
        d = self.durations
        starts = asap_start_times(self.instrs, d)
        following: list[list[int]] = [[] for _ in self.instrs]
        last_on: dict[int, int] = {}
        for i, ins in enumerate(self.instrs):
            for q in ins.qubits:
                if q in last_on:
                    following[last_on[q]].append(i)
                last_on[q] = i
        for idxs in reversed(self.blocks):
            for i in reversed(idxs):
                if following[i]:
                    latest = min(starts[j] for j in following[i]) - d.of(self.instrs[i].kind)
                    starts[i] = max(starts[i], latest)
        return pad_idle(from_timed(self.instrs, starts, d, num_qubits, num_clbits,
                                   clbit_labels=clbit_labels, name=name))


def _check_nk(n: int, k: int):
    if int(n) != n or n < 2:
        raise ValueError(f"n must be an integer >= 2, got {n}")
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")


def _resolve_prep(prep, k: int) -> PrepHook:
    if prep is None:
        raise ValueError("a preparation hook or theta is required")
    if isinstance(prep, (int, float)):
        if k != 1:
            raise ValueError("theta preparation is defined for k=1; pass a hook for k>1")
        return theta_prep(float(prep))
    return prep


def _reg(start: int, k: int) -> tuple[int, ...]:
    return tuple(range(start, start + k))


# ---------------------------------------------------------------------------
# Hadamard-test family


def _cswap_block(prog: _Program, anc: int, first: Sequence[int], other: Sequence[int]):
    for p, q in zip(first, other):
        prog.add(*cswap_decomposed(anc, p, q))


def build_ht(n: int, k: int = 1, prep=None, *, shift: str = "right",
             durations: DurationTable = DEFAULT_DURATIONS) -> Circuit:
    """Hadamard test of the cyclic shift of A over n copies, width 2kn+1.

    The shift is the product of transpositions (1 2)(1 3)...(1 n) between A
    of copy 1 and A of each other copy; ``shift="left"`` applies them in the
    reverse order, which implements the inverse shift.
    """
    _check_nk(n, k)
    prep = _resolve_prep(prep, k)
    if shift not in ("right", "left"):
        raise ValueError("shift must be 'right' or 'left'")
    prog = _Program(durations)
    anc = 0
    a = [_reg(1 + 2 * k * j, k) for j in range(n)]
    b = [_reg(1 + 2 * k * j + k, k) for j in range(n)]
    prog.add(h(anc))
    for j in range(n):
        prog.prep(prep, a[j], b[j])
    order = range(1, n) if shift == "right" else range(n - 1, 0, -1)
    for j in order:
        _cswap_block(prog, anc, a[0], a[j])
    prog.add(h(anc), measure(anc, 0))
    return prog.build(2 * k * n + 1, 1, ("ancilla",), f"ht(n={n},k={k})")


def build_qe_ht_4k(n: int, k: int = 1, prep=None, *, copies: int | None = None,
                   durations: DurationTable = DEFAULT_DURATIONS) -> Circuit:
    """Hadamard test reusing one 2k-qubit slot for copies 2..n, width 4k+1.

    ``copies`` stops after that many copies have entered the permutation,
    giving a circuit whose ancilla estimates Tr(rho_A^copies).
    """
    _check_nk(n, k)
    prep = _resolve_prep(prep, k)
    m = n if copies is None else copies
    if not 2 <= m <= n:
        raise ValueError("copies must lie in [2, n]")
    prog = _Program(durations)
    anc = 0
    a1, b1 = _reg(1, k), _reg(1 + k, k)
    a2, b2 = _reg(1 + 2 * k, k), _reg(1 + 3 * k, k)
    prog.add(h(anc))
    prog.prep(prep, a1, b1)
    prog.prep(prep, a2, b2)
    _cswap_block(prog, anc, a1, a2)
    for _ in range(3, m + 1):
        for q in a2 + b2:
            prog.add(*measure_and_reset(q))
        prog.prep(prep, a2, b2)
        _cswap_block(prog, anc, a1, a2)
    prog.add(h(anc), measure(anc, 0))
    return prog.build(4 * k + 1, 1, ("ancilla",), f"qe-ht-4k(n={m},k={k})")


def build_qe_ht_3k(n: int, k: int = 1, prep=None, *,
                   durations: DurationTable = DEFAULT_DURATIONS) -> Circuit:
    """Hadamard test over three k-qubit registers, width 3k+1.

    Copy 1 keeps only its A half; every later copy is prepared across the
    second and third registers after they are reset.
    """
    _check_nk(n, k)
    prep = _resolve_prep(prep, k)
    prog = _Program(durations)
    anc = 0
    r1, r2, r3 = _reg(1, k), _reg(1 + k, k), _reg(1 + 2 * k, k)
    prog.add(h(anc))
    prog.prep(prep, r1, r2)
    for q in r2:
        prog.add(*measure_and_reset(q))
    prog.prep(prep, r2, r3)
    _cswap_block(prog, anc, r1, r2)
    for _ in range(3, n + 1):
        for q in r2 + r3:
            prog.add(*measure_and_reset(q))
        prog.prep(prep, r2, r3)
        _cswap_block(prog, anc, r1, r2)
    prog.add(h(anc), measure(anc, 0))
    return prog.build(3 * k + 1, 1, ("ancilla",), f"qe-ht-3k(n={n},k={k})")


# ---------------------------------------------------------------------------
# Two-copy-test family


class BitLabel(NamedTuple):
    """Logical origin of a measured bit in a two-copy-test circuit."""

    copy: int
    primed: bool
    subsystem: str  # "A" or "B"
    position: int


def _bell_pair(prog: _Program, labels: list, ctrl: int, tgt: int, ctrl_label: BitLabel, tgt_label: BitLabel):
    c0 = len(labels)
    prog.add(cx(ctrl, tgt), h(ctrl), measure(ctrl, c0), measure(tgt, c0 + 1))
    labels.extend([ctrl_label, tgt_label])


def _ring_copy(j: int, n: int) -> tuple[int, bool]:
    """Ring position j -> (logical copy, primed)."""
    return j // 2, bool(j % 2)


def _ring_edge(j: int, n: int) -> str:
    """Subsystem compared between ring positions j and j+1 (mod 2n)."""
    return "B" if j % 2 == 0 else "A"


def _pair_halves(prog, labels, n, k, j1, reg1, j2, reg2, sub):
    """Bell-measure subsystem ``sub`` of ring copies j1 and j2 held in reg1/reg2."""
    (c1, p1), (c2, p2) = _ring_copy(j1, n), _ring_copy(j2, n)
    if p1:  # control on the unprimed copy
        (c1, p1, reg1), (c2, p2, reg2) = (c2, p2, reg2), (c1, p1, reg1)
    for pos in range(k):
        _bell_pair(prog, labels, reg1[pos], reg2[pos],
                   BitLabel(c1, p1, sub, pos), BitLabel(c2, p2, sub, pos))


def build_tct(n: int, k: int = 1, prep=None, *,
              durations: DurationTable = DEFAULT_DURATIONS) -> Circuit:
    """Two-copy test with the permutation wired into the Bell pairing, width 4kn."""
    _check_nk(n, k)
    prep = _resolve_prep(prep, k)
    prog = _Program(durations)
    labels: list[BitLabel] = []

    def regs(copy: int, primed: bool):
        base = 2 * k * (copy + (n if primed else 0))
        return _reg(base, k), _reg(base + k, k)

    for primed in (False, True):
        for i in range(n):
            prog.prep(prep, *regs(i, primed))
    for i in range(n):
        _pair_halves(prog, labels, n, k, 2 * i, regs(i, False)[1], 2 * i + 1, regs(i, True)[1], "B")
        _pair_halves(prog, labels, n, k, 2 * i, regs(i, False)[0],
                     (2 * i - 1) % (2 * n), regs((i - 1) % n, True)[0], "A")
    return prog.build(4 * k * n, 4 * k * n, labels, f"tct(n={n},k={k})")


class _RegisterPool:
    """k-qubit registers with reuse tracking; reused registers get a reset."""

    def __init__(self, count: int, k: int):
        self.k = k
        self.free = list(range(count))
        self.used: set[int] = set()

    def qubits(self, r: int) -> tuple[int, ...]:
        return _reg(r * self.k, self.k)

    def take(self, near: int | None = None) -> tuple[int, int, list[Instruction]]:
        """Two free registers, the first closest to ``near``, and the resets
        needed before reusing them."""
        if len(self.free) < 2:
            raise RuntimeError("register pool exhausted")
        cands = sorted(self.free)
        if near is not None:
            first = min(cands, key=lambda r: (abs(r - near), r))
        else:
            first = cands[0]
        cands.remove(first)
        second = cands[0]
        resets = []
        for r in (first, second):
            self.free.remove(r)
            if r in self.used:
                # the data measurement on this register already happened
                resets.extend(reset(q) for q in self.qubits(r))
            self.used.add(r)
        return first, second, resets

    def release(self, *regs: int):
        self.free.extend(regs)


def _build_qe_tct(n: int, k: int, prep, registers: int, durations: DurationTable) -> Circuit:
    """Ring schedule shared by the reduced-width two-copy tests.

    The 2n copies form a ring in which neighbours share one Bell-paired
    subsystem: copy i -B- primed copy i -A- copy i+1 -B- ... Copies are
    consumed from both ends of the ring starting at copy 0. A consumed copy
    leaves one half waiting (a "leftover") for its next ring neighbour.
    With 6 registers the next forward and backward copies are prepared
    together; with 4 they alternate, one copy at a time.
    """
    prog = _Program(durations)
    labels: list[BitLabel] = []
    pool = _RegisterPool(registers, k)
    size = 2 * n
    # state per live copy: ring index -> {"A": reg, "B": reg}
    live: dict[int, dict[str, int]] = {}

    def place(j: int, pair_sub: str | None, near: int | None):
        """Prepare ring copy j; the half compared first goes nearest ``near``."""
        first, second, resets = pool.take(near)
        if pair_sub is None or pair_sub == "A":
            halves = {"A": first, "B": second}
        else:
            halves = {"B": first, "A": second}
        live[j] = halves
        prog.prep(prep, pool.qubits(halves["A"]), pool.qubits(halves["B"]), resets)

    def pair(j1: int, j2: int):
        sub = _ring_edge(j1, n) if (j1 + 1) % size == j2 else _ring_edge(j2, n)
        r1, r2 = live[j1].pop(sub), live[j2].pop(sub)
        _pair_halves(prog, labels, n, k, j1, pool.qubits(r1), j2, pool.qubits(r2), sub)
        pool.release(r1, r2)
        for j in (j1, j2):
            if not live[j]:
                del live[j]

    def place_fwd(lf: int) -> int:
        sub = _ring_edge(lf, n)
        place(lf + 1, sub, live[lf][sub])
        return lf + 1

    def place_bwd(lb: int) -> int:
        nb = (lb - 1) % size
        sub = _ring_edge(nb, n)
        place(nb, sub, live[lb][sub])
        return nb

    if registers not in (4, 6):
        raise ValueError("registers must be 4 or 6")
    place(0, None, None)
    if registers == 6:
        # forward and backward neighbours are prepared side by side, then paired
        nf, nb = place_fwd(0), place_bwd(0)
        pair(0, nf)
        pair(nb, 0)
        lf, lb = nf, nb
        while (lb - lf - 1) % size > 1:  # copies still to place
            nf, nb = place_fwd(lf), place_bwd(lb)
            pair(lf, nf)
            pair(nb, lb)
            lf, lb = nf, nb
    else:
        # one new copy at a time, alternating between the two ends
        lf = place_fwd(0)
        pair(0, lf)
        lb, turn = 0, "bwd"
        while (lb - lf - 1) % size > 1:
            if turn == "bwd":
                nb = place_bwd(lb)
                pair(nb, lb)
                lb, turn = nb, "fwd"
            else:
                nf = place_fwd(lf)
                pair(lf, nf)
                lf, turn = nf, "bwd"
    # a single copy is left between the two leftovers
    mid = lf + 1
    if (mid + 1) % size != lb:
        raise AssertionError("ring schedule lost track of its copies")
    sub = _ring_edge(lf, n)
    place(mid, sub, live[lf][sub])
    pair(lf, mid)
    pair(mid, lb)
    if live:
        raise AssertionError("unpaired halves left in the ring schedule")
    name = f"qe-tct-{registers}k(n={n},k={k})"
    return prog.build(registers * k, 4 * k * n, labels, name)


def build_qe_tct_6k(n: int, k: int = 1, prep=None, *,
                    durations: DurationTable = DEFAULT_DURATIONS) -> Circuit:
    """Two-copy test holding at most three copies at once, width 6k."""
    _check_nk(n, k)
    return _build_qe_tct(n, k, _resolve_prep(prep, k), 6, durations)


def build_qe_tct_4k(n: int, k: int = 1, prep=None, *,
                    durations: DurationTable = DEFAULT_DURATIONS) -> Circuit:
    """Two-copy test holding at most two copies at once, width 4k.

    Reused registers do not always line up with a copy's natural layout, so
    some copies are prepared with B above A or across non-adjacent registers.
    """
    _check_nk(n, k)
    return _build_qe_tct(n, k, _resolve_prep(prep, k), 4, durations)


BUILDERS = {
    Algorithm.HT: build_ht,
    Algorithm.QE_HT_4K: build_qe_ht_4k,
    Algorithm.QE_HT_3K: build_qe_ht_3k,
    Algorithm.TCT: build_tct,
    Algorithm.QE_TCT_6K: build_qe_tct_6k,
    Algorithm.QE_TCT_4K: build_qe_tct_4k,
}


def build(algorithm: Algorithm | str, n: int, k: int = 1, prep=None, **kwargs) -> Circuit:
    """Build any algorithm's circuit; ``prep`` is a hook or, for k=1, an angle."""
    return BUILDERS[Algorithm.parse(algorithm)](n, k, prep, **kwargs)


# ---------------------------------------------------------------------------
# Estimators


def hoeffding_halfwidth(shots: int, confidence: float = CONFIDENCE) -> float:
    """Half-width of a two-sided interval on the mean of a +-1 variable."""
    if shots <= 0:
        raise ValueError("shots must be positive")
    return 2.0 * math.sqrt(-math.log(1.0 - confidence) / (2.0 * shots))


@dataclass(frozen=True)
class SpectroscopyEstimate:
    """Estimate of Tr(rho_A^n) with its statistical interval.

    ``raw`` is the statistic before clamping or square root: p0 - p1 for the
    Hadamard-test family, the mean parity for the two-copy family.
    """

    value: float
    ci_low: float
    ci_high: float
    raw: float
    shots: int
    algorithm: str = ""
    k: int = 0
    n: int = 0
    theta: float | None = None

    @property
    def halfwidth(self) -> float:
        return max(self.value - self.ci_low, self.ci_high - self.value)

    def to_dict(self) -> dict:
        keys = ("algorithm", "k", "n", "theta", "shots", "value", "ci_low", "ci_high", "raw")
        d = asdict(self)
        return {key: d[key] for key in keys}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _clamp01(x: float) -> float:
    return min(max(x, 0.0), 1.0)


def estimate_ht(counts: Counts, bit: int = 0, **meta) -> SpectroscopyEstimate:
    """Tr(rho_A^n) from ancilla statistics: clamp(p0 - p1) with a Hoeffding interval."""
    shots = counts.shots
    if shots == 0:
        raise ValueError("no shots to estimate from")
    marg = counts.marginal([bit]) if counts.num_bits != 1 else counts
    raw = (marg["0"] - marg["1"]) / shots
    hw = hoeffding_halfwidth(shots)
    return SpectroscopyEstimate(_clamp01(raw), _clamp01(raw - hw), _clamp01(raw + hw), raw, shots, **meta)


def _parity_mean(counts: Counts, pairs: Sequence[tuple[int, int]]) -> float:
    outcomes, freq = counts.outcome_array()
    if counts.shots == 0:
        raise ValueError("no shots to estimate from")
    r = outcomes[:, [p for p, _ in pairs]]
    s = outcomes[:, [q for _, q in pairs]]
    parity = (r & s).sum(axis=1) & 1
    return float(np.dot(1 - 2 * parity.astype(np.int64), freq) / freq.sum())


def estimate_bell_overlap(counts: Counts, m: int, r_bits: Sequence[int] | None = None,
                          s_bits: Sequence[int] | None = None) -> float:
    """Tr(rho sigma) from a Bell-basis measurement of two m-qubit states.

    ``r_bits[i]`` and ``s_bits[i]`` are the bits measured on qubit i of the
    two states; by default the first m bits are r and the next m are s.
    """
    r_bits = list(range(m)) if r_bits is None else list(r_bits)
    s_bits = list(range(m, 2 * m)) if s_bits is None else list(s_bits)
    if len(r_bits) != m or len(s_bits) != m:
        raise ValueError("need m bits for each state")
    if counts.num_bits < 2 * m or max(r_bits + s_bits) >= counts.num_bits:
        raise ValueError(f"counts have {counts.num_bits} bits, need {2 * m}")
    return _parity_mean(counts, list(zip(r_bits, s_bits)))


def tct_pairs(n: int, k: int, bit_map: Sequence[BitLabel]) -> list[tuple[int, int]]:
    """Bit pairs whose products enter the two-copy parity.

    A of copy l is paired with A of primed copy l-1 (mod n) and B of copy l
    with B of primed copy l.
    """
    if len(bit_map) != 4 * k * n:
        raise ValueError(f"bit map has {len(bit_map)} entries, expected {4 * k * n}")
    where = {}
    for bit, label in enumerate(bit_map):
        label = BitLabel(*label)
        if label in where:
            raise ValueError(f"bit map repeats {label}")
        if not (0 <= label.copy < n and label.subsystem in ("A", "B") and 0 <= label.position < k):
            raise ValueError(f"bit map entry {label} out of range")
        where[label] = bit
    pairs = []
    for l in range(n):
        for pos in range(k):
            pairs.append((where[BitLabel(l, False, "A", pos)], where[BitLabel((l - 1) % n, True, "A", pos)]))
            pairs.append((where[BitLabel(l, False, "B", pos)], where[BitLabel(l, True, "B", pos)]))
    return pairs


def estimate_tct(counts: Counts, n: int, k: int, bit_map: Sequence[BitLabel], **meta) -> SpectroscopyEstimate:
    """Tr(rho_A^n) as the square root of the mean Bell-pair parity."""
    meta.update(n=n, k=k)
    if counts.num_bits != 4 * k * n:
        raise ValueError(f"counts have {counts.num_bits} bits, expected {4 * k * n}")
    raw = _parity_mean(counts, tct_pairs(n, k, bit_map))
    hw = hoeffding_halfwidth(counts.shots)

    def root(x):
        return min(math.sqrt(max(x, 0.0)), 1.0)

    return SpectroscopyEstimate(root(raw), root(raw - hw), root(raw + hw), raw, counts.shots, **meta)


def estimate(circuit: Circuit, counts: Counts, algorithm: Algorithm | str, n: int, k: int,
             **meta) -> SpectroscopyEstimate:
    alg = Algorithm.parse(algorithm)
    if alg.family == "ht":
        return estimate_ht(counts, algorithm=alg.value, n=n, k=k, **meta)
    return estimate_tct(counts, n, k, circuit.clbit_labels, algorithm=alg.value, **meta)


# ---------------------------------------------------------------------------
# Spectrum reconstruction


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    notes: tuple[str, ...] = ()


def power_sums(eigenvalues: Sequence[float], m: int | None = None) -> np.ndarray:
    lam = np.asarray(eigenvalues, dtype=float)
    m = len(lam) if m is None else m
    return np.array([np.sum(lam**j) for j in range(1, m + 1)])


def elementary_symmetric(traces: Sequence[float]) -> np.ndarray:
    """e_0..e_m from power sums p_1..p_m via Newton's identities."""
    p = np.asarray(traces, dtype=float)
    e = np.zeros(len(p) + 1)
    e[0] = 1.0
    for j in range(1, len(p) + 1):
        acc = 0.0
        for i in range(1, j + 1):
            acc += (-1) ** (i - 1) * e[j - i] * p[i - 1]
        e[j] = acc / j
    return e


def reconstruct_spectrum(traces: Sequence[float]) -> Spectrum:
    """The m largest eigenvalues from Tr(rho), ..., Tr(rho^m), with notes on any
    projection applied to noisy inputs."""
    traces = np.asarray(traces, dtype=float)
    if traces.ndim != 1 or len(traces) == 0:
        raise ValueError("need at least Tr(rho)")
    if not np.all(np.isfinite(traces)):
        raise ValueError("traces must be finite")
    if abs(traces[0] - 1.0) > 1e-6:
        raise ValueError(f"Tr(rho) must be 1, got {traces[0]}")
    e = elementary_symmetric(traces)
    coeffs = np.array([(-1) ** j * e[j] for j in range(len(e))])
    roots = np.roots(coeffs) if len(coeffs) > 1 else np.array([])
    roots = _polish(coeffs, roots)
    notes = []
    if np.any(np.abs(roots.imag) > 1e-9):
        notes.append("complex roots projected to their real parts")
    vals = roots.real
    if np.any(vals < -1e-12) or np.any(vals > 1 + 1e-12):
        notes.append("roots outside [0, 1] clamped")
    vals = np.clip(vals, 0.0, 1.0)
    return Spectrum(np.sort(vals)[::-1], tuple(notes))


def _polish(coeffs: np.ndarray, roots: np.ndarray, steps: int = 3) -> np.ndarray:
    """A few Newton steps on each companion-matrix root."""
    if len(roots) == 0:
        return roots.astype(complex)
    dcoeffs = np.polyder(coeffs)
    out = roots.astype(complex)
    for _ in range(steps):
        f = np.polyval(coeffs, out)
        df = np.polyval(dcoeffs, out)
        ok = np.abs(df) > 1e-8
        out[ok] = out[ok] - f[ok] / df[ok]
    return out


def newton_girard(traces: Sequence[float]) -> np.ndarray:
    """Largest eigenvalues, descending, from the traces of powers 1..m."""
    return reconstruct_spectrum(traces).eigenvalues


# ---------------------------------------------------------------------------
# Jobs


@dataclass(frozen=True)
class SpectroscopyJob:
    """One estimation run: algorithm, sizes, state, shot budget and seed."""

    algorithm: Algorithm
    n: int
    k: int = 1
    theta: float | None = None
    shots: int = 100_000
    seed: int = 0
    prep: PrepHook | None = None

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm.parse(self.algorithm))
        _check_nk(self.n, self.k)
        if self.shots <= 0:
            raise ValueError("shots must be positive")
        if self.prep is None:
            if self.theta is None:
                raise ValueError("give theta or a preparation hook")
            if not 0.0 <= self.theta <= math.pi:
                raise ValueError("theta must lie in [0, pi]")
            if self.k != 1:
                raise ValueError("theta preparation is defined for k=1; pass a hook for k>1")

    def hook(self) -> PrepHook:
        return self.prep if self.prep is not None else theta_prep(self.theta)

    def circuit(self, durations: DurationTable = DEFAULT_DURATIONS) -> Circuit:
        return build(self.algorithm, self.n, self.k, self.hook(), durations=durations)

    def true_trace(self) -> float:
        return prep_trace(self.hook(), self.k, self.n)

    def run(self, noise="noiseless", **run_kwargs) -> SpectroscopyEstimate:
        from .noise import load_noise
        from .sim import run

        noise = load_noise(noise)
        c = self.circuit(noise.durations)
        counts = run(c, noise, self.shots, self.seed, **run_kwargs)
        return estimate(c, counts, self.algorithm, self.n, self.k, theta=self.theta)
