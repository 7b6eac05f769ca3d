"""Standard and effective depth of circuits with qubit resets.

Information can flow along a qubit from its initialization (t=0 or the end of
a reset) until the next reset on that qubit, and it can cross between qubits
at every multi-qubit gate, in both directions. The effective depth is the
longest elapsed time along any such path. Without resets it equals the
makespan.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .circuit import (
    DEFAULT_DURATIONS,
    Circuit,
    DurationTable,
    GateKind,
    Instruction,
    cswap_decomposed,
    h,
    measure,
    measure_and_reset,
    swap_decomposed,
    u1,
)
from .spectroscopy import ALGORITHMS, Algorithm, PrepHook, _Program, _check_nk, _reg, _resolve_prep, build


@dataclass(frozen=True)
class DepthReport:
    """Depth figures of one circuit.

    ``witness_path`` lists circuit instruction indices along a path attaining
    the effective depth, in time order; ``path_start`` is the initialization
    time the path begins at.
    """

    standard_depth: int
    effective_depth: int
    witness_path: tuple[int, ...] = ()
    path_start: int = 0
    circuit: Circuit | None = field(default=None, repr=False, compare=False)

    def to_dict(self, include_path: bool = True) -> dict:
        d = {"depth": self.standard_depth, "effective_depth": self.effective_depth}
        if include_path:
            d["path_start"] = self.path_start
            path = []
            for i in self.witness_path:
                entry = {"index": i}
                if self.circuit is not None:
                    ins = self.circuit.instructions[i]
                    entry.update(kind=ins.kind.value, qubits=list(ins.qubits), start=ins.start, end=ins.end)
                path.append(entry)
            d["witness_path"] = path
        return d

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def effective_depth(c: Circuit) -> DepthReport:
    """Longest information-flow path, by dynamic programming in time order.

    For every instruction the earliest initialization time from which a path
    can reach it is propagated along each of its qubits; the path length at an
    instruction is its end time minus that origin. Resets end a path on their
    qubit and start a new segment at their end.
    """
    seg_start: dict[int, int] = {}
    last: dict[int, int | None] = {}  # qubit -> last instruction in current segment
    origin: list[int] = [0] * len(c.instructions)
    back: list[int | None] = [None] * len(c.instructions)
    best, best_idx = 0, None
    for idx, ins in enumerate(c.instructions):
        if ins.kind is GateKind.RESET:
            q = ins.qubits[0]
            seg_start[q] = ins.end
            last[q] = None
            continue
        o, via = None, None
        for q in ins.qubits:
            pred = last.get(q)
            cand = seg_start.get(q, 0) if pred is None else origin[pred]
            if o is None or cand < o:
                o, via = cand, pred
        origin[idx], back[idx] = o, via
        for q in ins.qubits:
            last[q] = idx
        length = ins.end - o
        if length > best:
            best, best_idx = length, idx
    path = []
    while best_idx is not None:
        path.append(best_idx)
        best_idx = back[best_idx]
    path.reverse()
    start = origin[path[0]] if path else 0
    return DepthReport(c.makespan, best, tuple(path), start, c)


def flow_graph(c: Circuit):
    """The information-flow graph as a weighted networkx DiGraph.

    Nodes are ``("init", q, t)`` segment starts and instruction indices. An
    edge from I to J means information can pass from I's end into J, weighted
    by ``end(J) - end(I)``; an edge from a segment start weighs
    ``end(J) - t``. The longest path length equals the effective depth.
    """
    import networkx as nx

    g = nx.DiGraph()
    tail: dict[int, object] = {}
    tail_end: dict[int, int] = {}
    for q in range(c.num_qubits):
        node = ("init", q, 0)
        g.add_node(node)
        tail[q], tail_end[q] = node, 0
    for idx, ins in enumerate(c.instructions):
        if ins.kind is GateKind.RESET:
            q = ins.qubits[0]
            node = ("init", q, ins.end)
            g.add_node(node)
            tail[q], tail_end[q] = node, ins.end
            continue
        g.add_node(idx)
        for q in ins.qubits:
            g.add_edge(tail[q], idx, weight=ins.end - tail_end[q])
        for q in ins.qubits:
            tail[q], tail_end[q] = idx, ins.end
    return g


def reset_intervals(c: Circuit) -> dict[int, list[tuple[int, int]]]:
    """Per qubit, the (start, end) of every stretch between resets.

    A stretch starts at t=0 or at the end of a reset and ends at the start of
    the next reset or at the end of the qubit's last operation.
    """
    out: dict[int, list[tuple[int, int]]] = {}
    open_at: dict[int, int] = {}
    last_end: dict[int, int] = {}
    for ins in c.instructions:
        for q in ins.qubits:
            open_at.setdefault(q, 0)
            if ins.kind is GateKind.RESET:
                out.setdefault(q, []).append((open_at[q], ins.start))
                open_at[q] = ins.end
                last_end.pop(q, None)
            else:
                last_end[q] = ins.end
    for q, end in last_end.items():
        out.setdefault(q, []).append((open_at[q], end))
    return out


def max_reset_interval(c: Circuit, qubits: Iterable[int] | None = None) -> int:
    """Naive exposure metric: longest time any single qubit goes between resets."""
    spans = reset_intervals(c)
    qs = spans.keys() if qubits is None else qubits
    return max((e - s for q in qs for s, e in spans.get(q, [])), default=0)


def build_contrived_qe_ht(n: int, k: int = 1, prep=None, *,
                          durations: DurationTable = DEFAULT_DURATIONS) -> Circuit:
    """Qubit-efficient Hadamard test whose control hops between two ancillas.

    Before every reuse of the second slot the control is swapped into the
    spare ancilla, the vacated ancilla is reset, and the control is swapped
    back; then the spare is reset. Each ancilla is reset often, yet the
    control's information lives for the whole circuit. Width 4k+2.
    """
    _check_nk(n, k)
    prep = _resolve_prep(prep, k)
    prog = _Program(durations)
    a0, a1 = 0, 1
    a_1, b_1 = _reg(2, k), _reg(2 + k, k)
    a_2, b_2 = _reg(2 + 2 * k, k), _reg(2 + 3 * k, k)
    prog.add(h(a0))
    prog.prep(prep, a_1, b_1)
    prog.prep(prep, a_2, b_2)
    for p, q in zip(a_1, a_2):
        prog.add(*cswap_decomposed(a0, p, q))
    for _ in range(3, n + 1):
        prog.add(*swap_decomposed(a0, a1))
        prog.add(*measure_and_reset(a0))
        prog.add(*swap_decomposed(a0, a1))
        prog.add(*measure_and_reset(a1))
        for q in a_2 + b_2:
            prog.add(*measure_and_reset(q))
        prog.prep(prep, a_2, b_2)
        for p, q in zip(a_1, a_2):
            prog.add(*cswap_decomposed(a0, p, q))
    prog.add(h(a0), measure(a0, 0))
    return prog.build(4 * k + 2, 1, ("ancilla",), f"contrived-qe-ht(n={n},k={k})")


def stretched_prep(prep: PrepHook, extra: int) -> PrepHook:
    """``prep`` followed by ``extra`` identity-valued U1(0) gates on every qubit,
    lengthening the preparation makespan by ``extra`` single-qubit steps."""
    if extra < 0:
        raise ValueError("extra must be non-negative")

    def stretched(a_qubits: Sequence[int], b_qubits: Sequence[int]) -> list[Instruction]:
        out = list(prep(a_qubits, b_qubits))
        for q in tuple(a_qubits) + tuple(b_qubits):
            out.extend(u1(q, 0.0) for _ in range(extra))
        return out

    return stretched


TABLE_COLUMNS = ("algorithm", "n", "k", "width", "depth", "effective_depth")


def depth_table(k: int = 1, n_range: Sequence[int] = range(2, 7), prep=None,
                algorithms: Sequence[Algorithm | str] = ALGORITHMS, *,
                durations: DurationTable = DEFAULT_DURATIONS) -> list[dict]:
    """Width, depth and effective depth of every builder over ``n_range``.

    ``prep`` defaults to the theta family at theta=pi/4 for k=1; depths do
    not depend on the angle.
    """
    if prep is None:
        prep = 0.7853981633974483
    rows = []
    for alg in algorithms:
        alg = Algorithm.parse(alg)
        for n in n_range:
            c = build(alg, n, k, prep, durations=durations)
            rep = effective_depth(c)
            rows.append({"algorithm": alg.value, "n": n, "k": k, "width": c.width,
                         "depth": rep.standard_depth, "effective_depth": rep.effective_depth})
    return rows


def table_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=TABLE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()
