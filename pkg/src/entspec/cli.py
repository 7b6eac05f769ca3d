"""Command-line front end: ``entspec {sweep,simulate,depth,spectrum}``.

Exit codes: 0 success, 1 usage error, 2 input parse error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence

EXIT_OK, EXIT_USAGE, EXIT_PARSE = 0, 1, 2


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text: str) -> list[int]:
    """'2,3,4' or '2-6' or a mix like '2-4,8'."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"no integers in {text!r}")
    return out


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


def _algorithms(values: Sequence[str] | None):
    from .spectroscopy import ALGORITHMS, Algorithm

    if not values:
        return list(ALGORITHMS)
    names = [v for item in values for v in item.split(",") if v]
    try:
        return [Algorithm.parse(v) for v in names]
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _noise(spec: str):
    from .noise import load_noise

    try:
        return load_noise(spec)
    except (OSError, json.JSONDecodeError, TypeError) as exc:
        raise InputError(f"cannot read noise profile {spec!r}: {exc}") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _write(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_sweep(args) -> int:
    from .sweep import run_sweep

    if args.shots <= 0:
        raise UsageError("--shots must be positive")
    if args.k != 1:
        raise UsageError("sweeps support --k 1 only (the built-in state family)")
    if args.states < 3 and args.theta is None:
        raise UsageError("--states must be at least 3")
    result = run_sweep(
        _algorithms(args.algorithm), args.n, k=args.k, shots=args.shots, noise=_noise(args.noise),
        seed=args.seed, states=args.states, thetas=args.theta, workers=args.workers,
    )
    if args.format == "json":
        _write(result.to_json() + "\n", args.out)
    elif args.out is None:
        sys.stdout.write(result.rows_csv() + "\n" + result.regressions_csv())
    else:
        out = Path(args.out)
        out.write_text(result.rows_csv())
        reg_path = out.with_name(out.stem + ".regression" + (out.suffix or ".csv"))
        reg_path.write_text(result.regressions_csv())
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .circuit import pad_idle
    from .sim import run
    from .textio import CircuitParseError, load_circuit

    noise = _noise(args.noise)
    try:
        circuit = load_circuit(args.file, noise.durations)
    except CircuitParseError as exc:
        raise InputError(f"{args.file}: {exc}") from None
    except OSError as exc:
        raise InputError(str(exc)) from None
    if args.shots <= 0:
        raise UsageError("--shots must be positive")
    counts = run(pad_idle(circuit), noise, args.shots, args.seed)
    _write(counts.to_json() + "\n", args.out)
    return EXIT_OK


def _builder_circuit(name: str, n: int, k: int, theta: float):
    from .depthlab import build_contrived_qe_ht
    from .spectroscopy import build

    if k != 1:
        raise UsageError("--builder supports --k 1 (the built-in state family)")
    if name == "contrived":
        return build_contrived_qe_ht(n, k, theta)
    try:
        return build(name, n, k, theta)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_depth(args) -> int:
    from .depthlab import depth_table, effective_depth, table_csv
    from .spectroscopy import ALGORITHMS

    if args.table:
        if args.file is not None:
            raise UsageError("--table builds circuits; do not pass a file")
        algs = ALGORITHMS if args.builder is None else _algorithms([args.builder])
        rows = depth_table(args.k, args.n, args.theta, algs)
        _write(table_csv(rows), args.out)
        return EXIT_OK
    if (args.file is None) == (args.builder is None):
        raise UsageError("give exactly one of FILE or --builder")
    if args.file is not None:
        from .textio import CircuitParseError, load_circuit

        try:
            circuit = load_circuit(args.file)
        except CircuitParseError as exc:
            raise InputError(f"{args.file}: {exc}") from None
        except OSError as exc:
            raise InputError(str(exc)) from None
    else:
        if len(args.n) != 1:
            raise UsageError("--builder needs a single --n")
        circuit = _builder_circuit(args.builder, args.n[0], args.k, args.theta)
    report = effective_depth(circuit)
    _write(report.to_json(indent=None if args.compact else 1) + "\n", args.out)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    from .spectroscopy import reconstruct_spectrum

    if (args.file is None) == (not args.traces):
        raise UsageError("give traces inline or with --file, not both")
    text = Path(args.file).read_text() if args.file else " ".join(args.traces)
    tokens = text.replace(",", " ").split()
    try:
        traces = [float(t) for t in tokens]
    except ValueError:
        raise InputError(f"non-numeric trace value in {text.strip()!r}") from None
    if not traces or not all(math.isfinite(t) for t in traces):
        raise InputError("need finite traces starting with Tr(rho)")
    try:
        spec = reconstruct_spectrum(traces)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = {"eigenvalues": [float(v) for v in spec.eigenvalues], "notes": list(spec.notes)}
    sys.stdout.write(json.dumps(out) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="entspec", description="Entanglement spectroscopy circuits, simulation and depth analysis.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sweep", help="estimate traces over a state family and regress slopes")
    s.add_argument("--algorithm", action="append", help="algorithm name(s), comma separated; default all")
    s.add_argument("--n", type=_int_list, default=[2], help="trace powers, e.g. 2,3 or 2-5")
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--theta", type=_float_list, help="explicit angles instead of the even-trace grid")
    s.add_argument("--shots", type=int, default=100_000)
    s.add_argument("--noise", default="noiseless", help="preset name or JSON file")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="output path; regressions go next to it as <stem>.regression.csv")
    s.add_argument("--states", type=int, default=20)
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    m = sub.add_parser("simulate", help="run a circuit file and print counts")
    m.add_argument("file")
    m.add_argument("--noise", default="noiseless")
    m.add_argument("--shots", type=int, default=1000)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out")
    m.set_defaults(func=cmd_simulate)

    d = sub.add_parser("depth", help="standard and effective depth")
    d.add_argument("file", nargs="?")
    d.add_argument("--builder", help="algorithm name or 'contrived'")
    d.add_argument("--n", type=_int_list, default=[2])
    d.add_argument("--k", type=int, default=1)
    d.add_argument("--theta", type=float, default=math.pi / 4)
    d.add_argument("--table", action="store_true", help="CSV table over --n for all (or one) builders")
    d.add_argument("--compact", action="store_true", help="single-line JSON")
    d.add_argument("--out")
    d.set_defaults(func=cmd_depth)

    e = sub.add_parser("spectrum", help="eigenvalues from traces of powers")
    e.add_argument("traces", nargs="*", help='traces Tr(rho) .. Tr(rho^m), e.g. "1 0.5"')
    e.add_argument("--file")
    e.set_defaults(func=cmd_spectrum)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
