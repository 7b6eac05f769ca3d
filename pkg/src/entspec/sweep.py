"""Batch sweeps over states and algorithms, with slope regressions.

Every job gets its own seed derived from ``(seed, algorithm, n, state index)``,
so the output does not depend on how jobs are spread over worker processes.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .noise import NoiseProfile, load_noise
from .spectroscopy import (
    ALGORITHMS,
    CONFIDENCE,
    Algorithm,
    SpectroscopyJob,
    thetas_for_even_traces,
    trace_oracle,
)

ROW_COLUMNS = ("algorithm", "n", "k", "theta", "true_trace", "estimate", "ci_low", "ci_high")
REGRESSION_COLUMNS = ("algorithm", "n", "slope", "intercept", "slope_stderr")


@dataclass(frozen=True)
class SweepRow:
    algorithm: str
    n: int
    k: int
    theta: float
    true_trace: float
    estimate: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class Regression:
    algorithm: str
    n: int
    slope: float
    intercept: float
    slope_stderr: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    regressions: tuple[Regression, ...]

    def regression(self, algorithm: Algorithm | str, n: int) -> Regression:
        name = Algorithm.parse(algorithm).value
        for reg in self.regressions:
            if reg.algorithm == name and reg.n == n:
                return reg
        raise KeyError((name, n))

    def slopes(self) -> dict[tuple[str, int], float]:
        return {(r.algorithm, r.n): r.slope for r in self.regressions}

    def rows_csv(self) -> str:
        return _csv(ROW_COLUMNS, [asdict(r) for r in self.rows])

    def regressions_csv(self) -> str:
        return _csv(REGRESSION_COLUMNS, [asdict(r) for r in self.regressions])

    def to_json(self) -> str:
        return json.dumps({"rows": [asdict(r) for r in self.rows],
                           "regressions": [asdict(r) for r in self.regressions]}, indent=1)


def _fmt(value) -> str:
    return repr(float(value)) if isinstance(value, (float, np.floating)) else str(value)


def _csv(columns: Sequence[str], records: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for rec in records:
        writer.writerow([_fmt(rec[c]) for c in columns])
    return buf.getvalue()


def slope_regression(true_trace: Sequence[float], estimate: Sequence[float],
                     confidence: float = CONFIDENCE) -> tuple[float, float, float]:
    """Least-squares slope and intercept of estimate on truth.

    The slope error is the half-width of the two-sided t interval at the
    given one-sided quantile (0.84 gives a 68% interval).
    """
    x = np.asarray(true_trace, dtype=float)
    y = np.asarray(estimate, dtype=float)
    if len(x) < 3:
        raise ValueError("need at least three points for a slope error")
    fit = stats.linregress(x, y)
    t = stats.t.ppf(confidence, len(x) - 2)
    return float(fit.slope), float(fit.intercept), float(t * fit.stderr)


def job_seed(seed: int, algorithm: Algorithm, n: int, index: int) -> int:
    alg_idx = ALGORITHMS.index(algorithm)
    return int(np.random.SeedSequence([seed, alg_idx, n, index]).generate_state(1, np.uint64)[0] >> 1)


def _run_job(args) -> tuple[float, float, float]:
    job, noise = args
    est = job.run(noise)
    return est.value, est.ci_low, est.ci_high


def run_sweep(
    algorithms: Sequence[Algorithm | str],
    n_values: Sequence[int],
    *,
    k: int = 1,
    shots: int = 100_000,
    noise: NoiseProfile | str = "noiseless",
    seed: int = 0,
    states: int = 20,
    thetas: Sequence[float] | None = None,
    workers: int = 1,
) -> SweepResult:
    """Estimate Tr(rho_A^n) over a family of states for every (algorithm, n).

    Args:
        algorithms: Algorithms to run.
        n_values: Trace powers.
        k: Qubits per subsystem; only k=1 has a built-in state family.
        shots: Shots per estimate.
        noise: Profile, preset name or JSON path.
        seed: Master seed.
        states: States per (algorithm, n) when ``thetas`` is not given; their
            exact traces are evenly spaced for each n.
        thetas: Explicit angles, used for every n.
        workers: Worker processes; output is identical for any value.
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    if k != 1:
        raise ValueError("sweeps use the k=1 state family")
    noise = load_noise(noise)
    algs = [Algorithm.parse(a) for a in algorithms]
    plan = []
    for alg in algs:
        for n in n_values:
            grid = thetas_for_even_traces(n, states) if thetas is None else np.asarray(thetas, float)
            for i, theta in enumerate(grid):
                job = SpectroscopyJob(alg, n, k, float(theta), shots, job_seed(seed, alg, n, i))
                plan.append((alg, n, float(theta), job))
    args = [(job, noise) for *_, job in plan]
    if workers > 1 and len(plan) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_job, args, chunksize=1))
    else:
        results = [_run_job(a) for a in args]
    rows = [SweepRow(alg.value, n, k, theta, trace_oracle(theta, n), *res)
            for (alg, n, theta, _), res in zip(plan, results)]
    regressions = []
    for alg in algs:
        for n in n_values:
            group = [r for r in rows if r.algorithm == alg.value and r.n == n]
            if len(group) >= 3:
                slope, intercept, err = slope_regression([r.true_trace for r in group],
                                                         [r.estimate for r in group])
                regressions.append(Regression(alg.value, n, slope, intercept, err))
    return SweepResult(tuple(rows), tuple(regressions))
