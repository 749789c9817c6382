"""Benchmark harness: Trotter scaling, Gauss-law drift, strategy comparison.

Every experiment compares against the exact oracle in :mod:`qsimc.exact`.
Outputs are deterministic for fixed inputs and seed; wall-clock time is kept
on the report objects but only serialized on request.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .analogue import AnalogueSimulator, BHParams, CalibrationResult, HardwareTemplate, calibrate
from .encodings import (
    EncodingError,
    EncodingMap,
    PauliString,
    QubitHamiltonian,
    direct_encode,
    parity_encode,
    to_qubits,
)
from .errors import QsimError
from .exact import Propagator, bits_to_state, expectation, fidelity, operator_error
from .model import Model, gauss_operators, initial_bits
from .operators import hamiltonian_matrix
from .trotter import TrotterPlan, apply_circuit, circuit_unitary, resource_count, trotterize

MAX_BENCH_QUBITS = 10


# ---------------------------------------------------------------------------
# strategies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Exact:
    def label(self) -> str:
        return "exact"


@dataclass(frozen=True)
class Digital:
    n: int
    order: int = 1

    def label(self) -> str:
        return f"digital(n={self.n},order={self.order})"


@dataclass(frozen=True)
class Analogue:
    template: HardwareTemplate | None = None
    params: BHParams | None = None

    def label(self) -> str:
        if self.template is None:
            return "analogue"
        return f"analogue(L={self.template.length},d={self.template.cutoff})"


@dataclass(frozen=True)
class Hybrid:
    """Per slice: analogue block evolved on the simulator, then digital rotations.

    ``analogue_terms`` indexes the qubit Hamiltonian, or is ``"auto"`` (the
    single-qubit Z fields and the identity) or ``"all"``.
    """

    n: int
    analogue_terms: tuple[int, ...] | str = "auto"
    template: HardwareTemplate | None = None

    def label(self) -> str:
        part = self.analogue_terms if isinstance(self.analogue_terms, str) else ",".join(map(str, self.analogue_terms))
        return f"hybrid(n={self.n},analogue=[{part}])"


Strategy = Exact | Digital | Analogue | Hybrid


def parse_strategy(text: str) -> Strategy:
    """``exact``, ``digital:N[:ORDER]``, ``analogue[:L,d]``, ``hybrid:N[:i,j,...|auto|none|all]``."""
    parts = text.strip().split(":")
    kind = parts[0]
    try:
        if kind == "exact" and len(parts) == 1:
            return Exact()
        if kind == "digital" and len(parts) in (2, 3):
            return Digital(int(parts[1]), int(parts[2]) if len(parts) == 3 else 1)
        if kind == "analogue" and len(parts) in (1, 2):
            if len(parts) == 1:
                return Analogue()
            L, d = (int(v) for v in parts[1].split(","))
            return Analogue(HardwareTemplate(L, d))
        if kind == "hybrid" and len(parts) in (2, 3):
            n = int(parts[1])
            if len(parts) == 2 or parts[2] in ("auto", "all"):
                return Hybrid(n, parts[2] if len(parts) == 3 else "auto")
            if parts[2] == "none":
                return Hybrid(n, ())
            return Hybrid(n, tuple(int(v) for v in parts[2].split(",")))
    except ValueError as exc:
        raise QsimError(f"bad strategy {text!r}: {exc}") from None
    raise QsimError(f"bad strategy {text!r}")


# ---------------------------------------------------------------------------
# problem setup
# ---------------------------------------------------------------------------


@dataclass
class Problem:
    name: str
    Hq: QubitHamiltonian
    H: np.ndarray
    psi0: np.ndarray
    observables: dict[str, np.ndarray]
    emap: EncodingMap
    seed: int = 0
    _exact: Propagator | None = field(default=None, repr=False)

    @property
    def exact(self) -> Propagator:
        if self._exact is None:
            self._exact = Propagator(self.H)
        return self._exact


def build_problem(source: Model | QubitHamiltonian, bindings: Mapping[str, float] | None = None,
                  seed: int = 0, dim_cap: int | None = None, max_qubits: int = MAX_BENCH_QUBITS) -> Problem:
    if isinstance(source, QubitHamiltonian):
        Hq = source
        name = "qubit_hamiltonian"
        bits = "0" * Hq.n_qubits
        extra = {}
        emap, _ = direct_encode(Hq.n_qubits)
    else:
        Hq = to_qubits(source.hamiltonian, bindings)
        name = source.name
        bits = initial_bits(source)
        extra = {f"G{l}": hamiltonian_matrix(G, bindings, dim_cap) for l, G in gauss_operators(source)}
        try:
            emap, _ = parity_encode(source)
        except EncodingError:
            emap, _ = direct_encode(len(source.register))
    if Hq.n_qubits > max_qubits:
        raise QsimError(f"qubit form has {Hq.n_qubits} qubits; benchmark limit is {max_qubits}")
    if dim_cap is not None and 2 ** Hq.n_qubits > dim_cap:
        raise QsimError(f"dimension {2 ** Hq.n_qubits} exceeds cap {dim_cap}")
    H = Hq.matrix()
    obs = {"energy": H, **extra}
    return Problem(name, Hq, H, bits_to_state(bits), obs, emap, seed)


# ---------------------------------------------------------------------------
# Trotter scaling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingResult:
    t: float
    order: int
    rows: tuple[tuple[int, float], ...]
    slope: float | None
    interval: tuple[float, float] | None
    exact: bool

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "operator_error"])
        for n, err in self.rows:
            w.writerow([n, repr(err)])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {"t": self.t, "order": self.order, "rows": [{"n": n, "operator_error": e} for n, e in self.rows],
               "slope": self.slope, "slope_ci95": list(self.interval) if self.interval else None,
               "flag": "exact" if self.exact else None}
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    def plot_data(self) -> dict[str, list[tuple[float, float]]]:
        return {f"trotter_scaling_order{self.order}": [(float(n), e) for n, e in self.rows]}


def loglog_slope(ns, errs) -> float:
    return float(np.polyfit(np.log(ns), np.log(errs), 1)[0])


def trotter_scaling_experiment(source: Model | QubitHamiltonian, t: float, n_list: Sequence[int],
                               order: int = 1, seed: int = 0, resamples: int = 200,
                               bindings: Mapping[str, float] | None = None, jobs: int = 1,
                               term_order: Sequence[int] | None = None) -> ScalingResult:
    """Operator error of the compiled circuit against ``exp(-iHt)`` for each ``n``.

    The log-log slope is a least-squares fit over rows with error above 1e-10;
    its 95% interval comes from a seeded bootstrap over rows.
    """
    prob = build_problem(source, bindings, seed)
    U = prob.exact.unitary(t)
    to = tuple(term_order) if term_order is not None else None

    def err(n):
        c = trotterize(prob.Hq, TrotterPlan(t, int(n), order, to))
        return operator_error(circuit_unitary(c), U)

    errors = _pmap(err, list(n_list), jobs)
    rows = tuple((int(n), e) for n, e in zip(n_list, errors))
    fit = [(n, e) for n, e in rows if e >= 1e-10]
    if len(fit) < 2:
        return ScalingResult(t, order, rows, None, None, not fit)
    ns = np.array([n for n, _ in fit], dtype=float)
    es = np.array([e for _, e in fit])
    slope = loglog_slope(ns, es)
    rng = np.random.default_rng(seed)
    boots = []
    for _ in range(resamples):
        idx = rng.integers(0, len(ns), len(ns))
        if len(set(ns[idx])) < 2:
            continue
        boots.append(loglog_slope(ns[idx], es[idx]))
    ci = (float(np.percentile(boots, 2.5)), float(np.percentile(boots, 97.5))) if boots else None
    return ScalingResult(t, order, rows, slope, ci, False)


# ---------------------------------------------------------------------------
# strategy execution
# ---------------------------------------------------------------------------


@dataclass
class SimulationReport:
    model: str
    strategy: str
    times: list[float]
    fidelities: list[float]
    observables: dict[str, list[float]]
    resources: dict[str, float]
    wall_seconds: float = 0.0
    error: str | None = None

    def as_dict(self, timing: bool = False) -> dict:
        doc = {"model": self.model, "strategy": self.strategy, "times": self.times,
               "fidelities": self.fidelities, "observables": self.observables,
               "resources": self.resources, "error": self.error}
        if timing:
            doc["wall_seconds"] = self.wall_seconds
        return doc


def _check_times(times: Sequence[float]) -> list[float]:
    times = [float(t) for t in times]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise QsimError("time grid must be strictly increasing")
    if not times:
        raise QsimError("empty time grid")
    return times


def _hybrid_indices(prob: Problem, strat: Hybrid) -> tuple[int, ...]:
    if strat.analogue_terms == "auto":
        out = []
        for k, (letters, _) in enumerate(prob.Hq.terms):
            sup = PauliString(letters).support
            if not sup or (len(sup) == 1 and letters[sup[0]] == "Z"):
                out.append(k)
        return tuple(out)
    if strat.analogue_terms == "all":
        return tuple(range(len(prob.Hq)))
    bad = [k for k in strat.analogue_terms if not 0 <= k < len(prob.Hq)]
    if bad or len(set(strat.analogue_terms)) != len(strat.analogue_terms):
        raise QsimError(f"hybrid partition invalid: term indices {strat.analogue_terms}")
    return tuple(strat.analogue_terms)


def _simulator(prob: Problem, Hq: QubitHamiltonian, template: HardwareTemplate | None,
               params: BHParams | None) -> tuple[AnalogueSimulator, CalibrationResult | None]:
    tpl = template or HardwareTemplate(prob.emap.n_sim, 2)
    emap = prob.emap
    if emap.n_sim != tpl.length:
        emap, _ = direct_encode(prob.Hq.n_qubits, tpl.length)
    cal = None
    if params is None:
        cal = calibrate(Hq, tpl, emap, seed=prob.seed)
        params = cal.params
    return AnalogueSimulator(tpl, params, emap), cal


def run_strategy(prob: Problem, strat: Strategy, times: Sequence[float]) -> tuple[list[np.ndarray], dict]:
    """States at each time plus a resource summary.

    Zero-duration evolution is the identity for every strategy, so ``t = 0``
    returns the initial state itself rather than a roundoff-perturbed copy.
    """
    times = _check_times(times)
    states, res = _run_strategy(prob, strat, times)
    return [prob.psi0.copy() if t == 0 else psi for t, psi in zip(times, states)], res


def _run_strategy(prob: Problem, strat: Strategy, times: list[float]) -> tuple[list[np.ndarray], dict]:
    res: dict[str, float] = {}
    if isinstance(strat, Exact):
        return [prob.exact.evolve(prob.psi0, t) for t in times], res
    if isinstance(strat, Digital):
        states = []
        circ = None
        for t in times:
            circ = trotterize(prob.Hq, TrotterPlan(t, strat.n, strat.order))
            states.append(apply_circuit(circ, prob.psi0))
        res.update({f"gates_{k}": v for k, v in resource_count(circ).as_dict().items()})
        return states, res
    if isinstance(strat, Analogue):
        sim, cal = _simulator(prob, prob.Hq, strat.template, strat.params)
        states, leaks = [], []
        for t in times:
            psi, leak = sim.evolve(prob.psi0, t)
            states.append(psi)
            leaks.append(leak)
        res.update({"parameters": sim.tpl.n_params, "max_leakage": max(leaks)})
        if cal is not None:
            res["residual"] = cal.residual
        return states, res
    if isinstance(strat, Hybrid):
        idx = _hybrid_indices(prob, strat)
        rest = tuple(k for k in range(len(prob.Hq)) if k not in idx)
        Ha, Hd = prob.Hq.subset(idx), prob.Hq.subset(rest)
        sim = None
        if len(Ha):
            sim, cal = _simulator(prob, Ha, strat.template, None)
            res.update({"parameters": sim.tpl.n_params, "residual": cal.residual})
        states, max_leak = [], 0.0
        for t in times:
            dt = t / strat.n
            step = trotterize(Hd, TrotterPlan(dt, 1)) if len(Hd) else None
            psi = prob.psi0.copy()
            for _ in range(strat.n):
                if sim is not None:
                    psi, leak = sim.evolve(psi, dt)
                    max_leak = max(max_leak, leak)
                if step is not None:
                    psi = apply_circuit(step, psi)
            states.append(psi)
        if len(Hd):
            full = trotterize(Hd, TrotterPlan(times[-1], strat.n))
            res.update({f"gates_{k}": v for k, v in resource_count(full).as_dict().items()})
        if sim is not None:
            res["max_leakage"] = max_leak
        res["analogue_terms"] = len(idx)
        return states, res
    raise QsimError(f"unknown strategy {strat!r}")


def simulate(prob: Problem, strat: Strategy, times: Sequence[float]) -> SimulationReport:
    times = _check_times(times)
    start = time.perf_counter()
    try:
        states, res = run_strategy(prob, strat, times)
    except (QsimError, ValueError) as exc:
        return SimulationReport(prob.name, strat.label(), times, [], {}, {}, time.perf_counter() - start, str(exc))
    fids = [fidelity(prob.exact.evolve(prob.psi0, t), psi) for t, psi in zip(times, states)]
    obs = {k: [expectation(psi, O) for psi in states] for k, O in prob.observables.items()}
    return SimulationReport(prob.name, strat.label(), times, fids, obs, res, time.perf_counter() - start)


def _cost(r: SimulationReport) -> tuple:
    return (r.resources.get("gates_two_qubit", 0), r.resources.get("gates_total", 0),
            r.resources.get("parameters", 0))


def rank_reports(reports: Sequence[SimulationReport]) -> list[int]:
    """Indices ordered by final fidelity (desc), then resource cost, then input order."""
    ok = [i for i, r in enumerate(reports) if r.error is None]
    ok.sort(key=lambda i: (-round(reports[i].fidelities[-1], 12), _cost(reports[i]), i))
    return ok


@dataclass
class Comparison:
    model: str
    t: float
    times: list[float]
    seed: int
    reports: list[SimulationReport]

    @property
    def ranking(self) -> list[int]:
        return rank_reports(self.reports)

    def summary(self, timing: bool = False) -> dict:
        ranked = [{"rank": k + 1, "strategy": self.reports[i].strategy,
                   "final_fidelity": self.reports[i].fidelities[-1],
                   "resources": self.reports[i].resources}
                  for k, i in enumerate(self.ranking)]
        failed = [{"strategy": r.strategy, "error": r.error} for r in self.reports if r.error]
        return {"model": self.model, "t": self.t, "times": self.times, "seed": self.seed,
                "ranking": ranked, "failed": failed,
                "reports": [r.as_dict(timing) for r in self.reports],
                "objective": "Frobenius distance on the encoded subspace (analogue calibration)"}

    def to_json(self, timing: bool = False) -> str:
        return json.dumps(self.summary(timing), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        names = sorted({k for r in self.reports for k in r.observables})
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["strategy", "t", "fidelity", *names])
        for r in self.reports:
            if r.error:
                continue
            for k, t in enumerate(r.times):
                w.writerow([r.strategy, repr(t), repr(r.fidelities[k]),
                            *(repr(r.observables[n][k]) for n in names)])
        return buf.getvalue()

    def plot_data(self) -> dict[str, list[tuple[float, float]]]:
        return {f"fidelity_{_slug(r.strategy)}": list(zip(r.times, r.fidelities))
                for r in self.reports if not r.error}


def _slug(label: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in label).strip("_")


def strategy_compare(source: Model | QubitHamiltonian, strategies: Sequence[Strategy], t: float,
                     times: Sequence[float] | None = None, seed: int = 0,
                     bindings: Mapping[str, float] | None = None, jobs: int = 1) -> Comparison:
    times = _check_times(times if times is not None else np.linspace(0, t, 11)[1:])
    prob = build_problem(source, bindings, seed)
    prob.exact  # eigendecompose once before fanning out
    reports = _pmap(lambda s: simulate(prob, s, times), list(strategies), jobs)
    return Comparison(prob.name, float(t), times, seed, reports)


# ---------------------------------------------------------------------------
# Gauss-law drift
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DriftResult:
    strategy: str
    labels: tuple[str, ...]
    rows: tuple[tuple[float, tuple[float, ...], float], ...]  # (t, deviations, max |<[H,G]>|)

    @property
    def max_drift(self) -> float:
        return max((abs(d) for _, devs, _ in self.rows for d in devs), default=0.0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", *(f"dev_{l}" for l in self.labels), "max_commutator"])
        for t, devs, comm in self.rows:
            w.writerow([repr(t), *(repr(d) for d in devs), repr(comm)])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {"strategy": self.strategy, "labels": list(self.labels), "max_drift": self.max_drift,
               "rows": [{"t": t, "deviations": list(d), "max_commutator": c} for t, d, c in self.rows]}
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    def plot_data(self) -> dict[str, list[tuple[float, float]]]:
        return {f"gauss_drift_{l}": [(t, devs[k]) for t, devs, _ in self.rows]
                for k, l in enumerate(self.labels)}


def gauss_drift_experiment(model: Model, times: Sequence[float], strategy: Strategy = Exact(),
                           bindings: Mapping[str, float] | None = None, seed: int = 0) -> DriftResult:
    """Deviation of each ``<G_l>`` from its ``t = 0`` value along the evolution."""
    gauss = gauss_operators(model)
    if not gauss:
        raise QsimError("model declares no Gauss operators (meta gauss)")
    times = [float(t) for t in times]
    prob = build_problem(model, bindings, seed)
    ops = [(f"G{l}", prob.observables[f"G{l}"]) for l, _ in gauss]
    comms = [prob.H @ G - G @ prob.H for _, G in ops]
    states, _ = run_strategy(prob, strategy, times)
    ref = [expectation(prob.psi0, G) for _, G in ops]
    rows = []
    for t, psi in zip(times, states):
        devs = tuple(expectation(psi, G) - r for (_, G), r in zip(ops, ref))
        comm = max(abs(np.vdot(psi, C @ psi)) for C in comms)
        rows.append((t, devs, float(comm)))
    return DriftResult(strategy.label(), tuple(l for l, _ in ops), tuple(rows))


def _pmap(fn, items: list, jobs: int) -> list:
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]
