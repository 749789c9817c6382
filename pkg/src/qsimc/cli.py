"""Command-line front end: ``qsimc <command> ...``.

Model arguments accept a ``.hml`` path, a bundled model name
(``schwinger.hml``), a catalog generator (``schwinger:L``, ``bose-hubbard:L,d``) or
an explicit Pauli sum (``pauli:XI=1,IX=1,ZZ=0.5``).

Exit codes: 0 success, 1 diagnostics or user-level failure, 2 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analogue import CalibrationResult, HardwareTemplate, calibrate
from .bench import (
    Analogue,
    Digital,
    Exact,
    Hybrid,
    build_problem,
    gauss_drift_experiment,
    parse_strategy,
    simulate,
    strategy_compare,
    trotter_scaling_experiment,
)
from .catalog import BUNDLED, bose_hubbard_source, bundled_path, schwinger_source
from .encodings import EncodingError, QubitHamiltonian, direct_encode, parity_encode, to_qubits
from .errors import QsimError
from .model import Model, ModelError, parse_model, validate
from .trotter import TrotterPlan, export_circuit, resource_count, trotterize


class UsageError(QsimError):
    """Bad command-line input; reported with exit code 1."""


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------


def _parse_param(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or not name.strip():
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"parameter value must be a number: {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _template(text: str) -> HardwareTemplate:
    try:
        L, d = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"template must be L,d, got {text!r}") from None
    return HardwareTemplate(L, d)


def _pauli_sum(src: str) -> QubitHamiltonian:
    weights: dict[str, float] = {}
    n = None
    for item in src.split(","):
        letters, sep, w = item.strip().partition("=")
        if not sep or not letters or set(letters) - set("IXYZ"):
            raise UsageError(f"bad Pauli term {item!r}; expected e.g. XZ=0.5")
        if n is not None and len(letters) != n:
            raise UsageError("all Pauli strings must have the same length")
        n = len(letters)
        weights[letters] = weights.get(letters, 0.0) + float(w)
    return QubitHamiltonian.from_dict(n, weights)


def _read_source(src: str) -> tuple[str, str]:
    """Return ``(display name, .hml text)`` for a path, bundled name or catalog generator."""
    kind, _, arg = src.partition(":")
    try:
        if kind == "schwinger" and arg:
            return src, schwinger_source(int(arg))
        if kind == "bose-hubbard" and arg:
            L, d = (int(v) for v in arg.split(","))
            return src, bose_hubbard_source(L, d)
    except ValueError:
        raise UsageError(f"bad catalog generator {src!r}") from None
    path = Path(src)
    if path.is_file():
        return src, path.read_text(encoding="utf-8", errors="replace")
    if src in BUNDLED:
        return src, bundled_path(src).read_text(encoding="utf-8")
    raise UsageError(f"no such model file: {src}")


def load_source(src: str) -> Model | QubitHamiltonian:
    if src.startswith("pauli:"):
        return _pauli_sum(src[len("pauli:"):])
    name, text = _read_source(src)
    model, diags = parse_model(text)
    errors = [d for d in diags if d.severity == "error"]
    if model is None or errors:
        raise ModelError(errors or diags, name)
    return model


def _qubit_form(source, bindings) -> QubitHamiltonian:
    if isinstance(source, QubitHamiltonian):
        return source
    return to_qubits(source.hamiltonian, bindings)


def _times(args) -> list[float]:
    if args.times:
        return args.times
    if args.points < 1:
        raise UsageError("--points must be >= 1")
    return [float(t) for t in np.linspace(0.0, args.time, args.points + 1)[1:]]


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


class Output:
    def __init__(self, args):
        self.quiet = args.quiet
        self.plot_data = Path(args.plot_data) if args.plot_data else None
        self.figures = Path(args.figures) if args.figures else None

    def info(self, msg: str) -> None:
        if not self.quiet:
            print(msg, file=sys.stderr)

    def emit(self, text: str) -> None:
        sys.stdout.write(text)

    def series(self, data: dict[str, list[tuple[float, float]]]) -> None:
        if self.plot_data is None:
            return
        self.plot_data.mkdir(parents=True, exist_ok=True)
        for name, points in data.items():
            path = self.plot_data / f"{name}.csv"
            with path.open("w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["x", "y"])
                for x, y in points:
                    w.writerow([repr(float(x)), repr(float(y))])
            self.info(f"wrote {path}")

    def figure(self, render, obj) -> None:
        if self.figures is None:
            return
        from . import plotting

        path = getattr(plotting, render)(obj, self.figures)
        self.info(f"wrote {path}")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_validate(args, out: Output) -> int:
    name, text = _read_source(args.file)
    diags = validate(text, args.dim_cap)
    for d in diags:
        print(d.format(name), file=sys.stderr if args.quiet else sys.stdout)
    errors = sum(d.severity == "error" for d in diags)
    out.info(f"{name}: {errors} error(s), {len(diags) - errors} warning(s)")
    return 1 if errors else 0


def cmd_compile(args, out: Output) -> int:
    Hq = _qubit_form(load_source(args.file), args.bindings)
    circ = trotterize(Hq, TrotterPlan(args.time, args.steps, args.order))
    text = export_circuit(circ)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8", newline="\n")
        out.info(f"wrote {args.output}")
    else:
        out.emit(text)
    rc = resource_count(circ).as_dict()
    out.info("resources: " + ", ".join(f"{k}={v}" for k, v in rc.items()))
    return 0


def _strategy_from_args(args):
    if args.mode == "exact":
        return Exact()
    if args.mode == "digital":
        return Digital(args.steps, args.order)
    if args.mode == "analogue":
        params = None
        if args.params:
            params = CalibrationResult.from_json(Path(args.params).read_text(encoding="utf-8")).params
            if args.template is None:
                return Analogue(HardwareTemplate(len(params.eps)), params)
        return Analogue(args.template, params)
    terms = args.analogue_terms
    if terms not in ("auto", "all", "none"):
        terms = tuple(_int_list(terms))
    return Hybrid(args.steps, () if terms == "none" else terms, args.template)


def cmd_simulate(args, out: Output) -> int:
    source = load_source(args.file)
    prob = build_problem(source, args.bindings, args.seed, args.dim_cap)
    strat = _strategy_from_args(args)
    report = simulate(prob, strat, _times(args))
    out.emit(json.dumps(report.as_dict(args.timing), sort_keys=True, indent=2) + "\n")
    out.series({f"fidelity_{report.strategy}": list(zip(report.times, report.fidelities))}
               if report.error is None else {})
    if report.error:
        print(f"error: {report.error}", file=sys.stderr)
        return 1
    return 0


def cmd_calibrate(args, out: Output) -> int:
    source = load_source(args.target)
    Hq = _qubit_form(source, args.bindings)
    tpl = args.template
    emap = None
    if isinstance(source, Model):
        try:
            emap, _ = parity_encode(source)
        except EncodingError:
            emap = None
    if emap is None or emap.n_sim != tpl.length:
        emap, _ = direct_encode(Hq.n_qubits, tpl.length)
    result = calibrate(Hq, tpl, emap, seed=args.seed, starts=args.starts, jobs=args.jobs)
    text = result.to_json()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
        out.info(f"wrote {args.out}")
    else:
        out.emit(text)
    out.info(f"residual={result.residual:.6g} converged={result.converged}")
    return 0


def cmd_bench_scaling(args, out: Output) -> int:
    source = load_source(args.file)
    results = []
    for order in args.orders:
        res = trotter_scaling_experiment(source, args.time, args.n_list, order, args.seed,
                                         bindings=args.bindings, jobs=args.jobs)
        results.append(res)
        out.series(res.plot_data())
        if res.slope is not None:
            lo, hi = res.interval or (float("nan"), float("nan"))
            out.info(f"order {order}: slope {res.slope:.4f} (95% CI {lo:.4f}, {hi:.4f})")
        else:
            out.info(f"order {order}: slope undefined" + (" (exact)" if res.exact else ""))
    if args.format == "csv":
        out.emit("order," + results[0].to_csv().splitlines()[0] + "\n")
        for res in results:
            out.emit("".join(f"{res.order},{ln}\n" for ln in res.to_csv().splitlines()[1:]))
    else:
        docs = [json.loads(r.to_json()) for r in results]
        out.emit(json.dumps(docs[0] if len(docs) == 1 else docs, sort_keys=True, indent=2) + "\n")
    out.figure("plot_trotter_scaling", results)
    return 0


def cmd_bench_compare(args, out: Output) -> int:
    source = load_source(args.file)
    strategies = [parse_strategy(s) for s in args.strategies]
    times = _times(args)
    cmp = strategy_compare(source, strategies, times[-1], times, args.seed, args.bindings, args.jobs)
    out.emit(cmp.to_csv() if args.format == "csv" else cmp.to_json(args.timing))
    out.series(cmp.plot_data())
    for r in cmp.reports:
        if r.error:
            out.info(f"{r.strategy}: failed: {r.error}")
    if cmp.reports:
        out.figure("plot_strategy_fidelity", cmp)
    return 0


def cmd_bench_drift(args, out: Output) -> int:
    source = load_source(args.file)
    if not isinstance(source, Model):
        raise UsageError("gauss-drift needs a model with Gauss metadata")
    times = args.times or [0.0] + _times(args)
    res = gauss_drift_experiment(source, times, parse_strategy(args.strategy), args.bindings, args.seed)
    out.emit(res.to_csv() if args.format == "csv" else res.to_json())
    out.series(res.plot_data())
    out.info(f"{res.strategy}: max drift {res.max_drift:.3g}")
    out.figure("plot_gauss_drift", res)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0, help="RNG seed for calibration starts and bootstraps")
    g.add_argument("--dim-cap", type=int, default=None, help="largest dense dimension allowed")
    g.add_argument("--quiet", "-q", action="store_true", help="suppress progress messages on stderr")
    g.add_argument("--jobs", "-j", type=int, default=1, help="worker threads for independent work items")
    g.add_argument("--param", dest="params_kv", action="append", type=_parse_param, default=[],
                   metavar="NAME=VALUE", help="bind a model parameter (repeatable)")
    g.add_argument("--plot-data", metavar="DIR", help="write (x, y) series as CSV files into DIR")
    g.add_argument("--figures", metavar="DIR", help="render PNG figures into DIR")
    g.add_argument("--timing", action="store_true", help="include wall-clock seconds in JSON reports")
    g.add_argument("--format", choices=("json", "csv"), default="json", help="stdout format for bench tables")

    # global options live on each subcommand so they are not reset by subparser defaults
    p = argparse.ArgumentParser(prog="qsimc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", parents=[common], help="check a model file")
    v.add_argument("file")
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("compile", parents=[common], help="Trotterize a model to OpenQASM 3")
    c.add_argument("file")
    c.add_argument("--time", "-t", type=float, required=True)
    c.add_argument("--steps", "-n", type=int, default=1)
    c.add_argument("--order", type=int, choices=(1, 2), default=1)
    c.add_argument("-o", "--output", help="output .qasm file (stdout if omitted)")
    c.set_defaults(func=cmd_compile)

    def time_grid(sp, default_time=None):
        sp.add_argument("--time", "-t", type=float, default=default_time, required=default_time is None)
        sp.add_argument("--points", type=int, default=10, help="evenly spaced grid points in (0, T]")
        sp.add_argument("--times", type=_float_list, help="explicit comma-separated time grid")

    s = sub.add_parser("simulate", parents=[common], help="evolve a model with one strategy")
    s.add_argument("file")
    s.add_argument("--mode", choices=("exact", "digital", "analogue", "hybrid"), default="exact")
    time_grid(s)
    s.add_argument("--steps", "-n", type=int, default=16)
    s.add_argument("--order", type=int, choices=(1, 2), default=1)
    s.add_argument("--template", type=_template, help="simulator template L,d")
    s.add_argument("--params", help="calibration JSON to use instead of calibrating")
    s.add_argument("--analogue-terms", default="auto", help="hybrid analogue block: auto|all|none|i,j,...")
    s.set_defaults(func=cmd_simulate)

    k = sub.add_parser("calibrate", parents=[common], help="fit Bose-Hubbard parameters to a target")
    k.add_argument("target")
    k.add_argument("--template", type=_template, required=True, help="simulator template L,d")
    k.add_argument("--starts", type=int, default=8)
    k.add_argument("--out", help="output JSON (stdout if omitted)")
    k.set_defaults(func=cmd_calibrate)

    b = sub.add_parser("bench", help="benchmark experiments")
    bsub = b.add_subparsers(dest="experiment", required=True)

    ts = bsub.add_parser("trotter-scaling", parents=[common], help="operator error against step count")
    ts.add_argument("file")
    ts.add_argument("--time", "-t", type=float, default=1.0)
    ts.add_argument("--n-list", type=_int_list, default=[2 ** k for k in range(1, 9)])
    ts.add_argument("--order", dest="orders", type=_int_list, default=[1], help="1, 2 or 1,2")
    ts.set_defaults(func=cmd_bench_scaling)

    sc = bsub.add_parser("strategy-compare", parents=[common], help="fidelity against resources")
    sc.add_argument("file")
    sc.add_argument("--strategy", dest="strategies", action="append", default=[],
                    help="exact | digital:N[:ORDER] | analogue[:L,d] | hybrid:N[:auto|all|none|i,j] (repeatable)")
    time_grid(sc, 1.0)
    sc.set_defaults(func=cmd_bench_compare)

    gd = bsub.add_parser("gauss-drift", parents=[common], help="Gauss-law drift along the evolution")
    gd.add_argument("file")
    gd.add_argument("--strategy", default="exact")
    time_grid(gd, 5.0)
    gd.set_defaults(func=cmd_bench_drift)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    args.bindings = dict(args.params_kv)
    out = Output(args)
    try:
        return args.func(args, out)
    except ModelError as exc:
        for d in exc.diagnostics:
            print(d.format(exc.filename), file=sys.stderr)
        return 1
    except (QsimError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
