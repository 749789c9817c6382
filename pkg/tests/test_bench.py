from __future__ import annotations

import json

import numpy as np
import pytest

from qsimc import cli
from qsimc.analogue import BHParams, HardwareTemplate, instantiate_template
from qsimc.bench import (
    Analogue,
    Digital,
    Exact,
    Hybrid,
    build_problem,
    gauss_drift_experiment,
    parse_strategy,
    rank_reports,
    run_strategy,
    simulate,
    strategy_compare,
    trotter_scaling_experiment,
)
from qsimc.catalog import load_bundled, schwinger_model
from qsimc.encodings import PauliString, QubitHamiltonian, boson_binary_reduce, to_qubits
from qsimc.errors import QsimError
from qsimc.model import gauss_operators, parse_model
from qsimc.operators import hamiltonian_matrix

XZ = QubitHamiltonian.from_dict(1, {"X": 1.0, "Z": 1.0})


# -- strategies ------------------------------------------------------------------------------


@pytest.mark.parametrize("text,strategy", [
    ("exact", Exact()),
    ("digital:4", Digital(4)),
    ("digital:8:2", Digital(8, 2)),
    ("analogue", Analogue()),
    ("analogue:3,2", Analogue(HardwareTemplate(3, 2))),
    ("hybrid:8", Hybrid(8)),
    ("hybrid:8:all", Hybrid(8, "all")),
    ("hybrid:8:none", Hybrid(8, ())),
    ("hybrid:8:0,2", Hybrid(8, (0, 2))),
])
def test_parse_strategy(text, strategy):
    assert parse_strategy(text) == strategy


@pytest.mark.parametrize("bad", ["", "digital", "digital:x", "analogue:3", "hybrid", "quantum:1"])
def test_parse_strategy_rejects(bad):
    with pytest.raises(QsimError):
        parse_strategy(bad)


# -- trotter scaling -------------------------------------------------------------------------------


def test_single_term_flagged_exact():
    res = trotter_scaling_experiment(QubitHamiltonian.from_dict(1, {"Z": 0.8}), 1.0, [1, 2, 4, 8])
    assert all(e < 1e-10 for _, e in res.rows)
    assert res.slope is None and res.exact
    assert json.loads(res.to_json())["flag"] == "exact"


def test_xz_slopes_with_interval():
    ns = [2 ** k for k in range(1, 9)]
    r1 = trotter_scaling_experiment(XZ, 1.0, ns, order=1)
    r2 = trotter_scaling_experiment(XZ, 1.0, ns, order=2)
    assert -1.15 <= r1.slope <= -0.85
    assert -2.2 <= r2.slope <= -1.8
    lo, hi = r1.interval
    assert lo <= r1.slope <= hi
    assert [n for n, _ in r1.rows] == ns


def test_scaling_jobs_do_not_change_output():
    ns = [2, 4, 8, 16]
    a = trotter_scaling_experiment(XZ, 1.0, ns, seed=3)
    b = trotter_scaling_experiment(XZ, 1.0, ns, seed=3, jobs=4)
    assert a.to_csv() == b.to_csv() and a.to_json() == b.to_json()


def test_scaling_rejects_large_models():
    big = QubitHamiltonian.from_dict(11, {"Z" * 11: 1.0})
    with pytest.raises(QsimError):
        trotter_scaling_experiment(big, 1.0, [1, 2])


# -- strategy comparison ---------------------------------------------------------------------------


def test_more_steps_not_worse():
    cmp = strategy_compare(XZ, [Digital(1), Digital(64)], 1.0)
    f1, f64 = (r.fidelities[-1] for r in cmp.reports)
    assert f64 >= f1
    assert cmp.ranking == [1, 0]


def test_analogue_on_template_generated_target():
    tpl = HardwareTemplate(3, 2)
    target = boson_binary_reduce(instantiate_template(tpl, BHParams(0.8, 0.0, (0.3, -0.4, 1.1))))
    cmp = strategy_compare(target, [Analogue(tpl)], 2.0)
    rep = cmp.reports[0]
    assert rep.error is None
    assert rep.fidelities[-1] >= 0.999
    assert rep.resources["residual"] < 1e-8


def test_empty_strategy_list():
    cmp = strategy_compare(XZ, [], 1.0)
    assert cmp.reports == [] and cmp.ranking == []
    assert json.loads(cmp.to_json())["ranking"] == []


def test_inapplicable_strategy_reported_and_run_continues():
    cmp = strategy_compare(XZ, [Hybrid(2, (5,)), Digital(2)], 1.0)
    assert cmp.reports[0].error and "hybrid partition" in cmp.reports[0].error
    assert cmp.reports[1].error is None
    assert cmp.ranking == [1]
    assert json.loads(cmp.to_json())["failed"][0]["strategy"] == Hybrid(2, (5,)).label()


@pytest.fixture(scope="module")
def schwinger2_comparison():
    strategies = [Digital(4), Digital(64), Analogue(), Hybrid(8), Hybrid(8, ()), Hybrid(8, "all"), Exact()]
    return strategy_compare(schwinger_model(2), strategies, 2.0, seed=0)


def test_report_invariants(schwinger2_comparison):
    cmp = schwinger2_comparison
    for r in cmp.reports:
        assert r.error is None
        assert all(0.0 <= f <= 1.0 for f in r.fidelities)
        assert all(b > a for a, b in zip(r.times, r.times[1:]))
        assert all(v >= 0 for v in r.resources.values())
        assert set(r.observables) == {"energy", "G0", "G1"}
    exact = cmp.reports[-1]
    assert all(f == pytest.approx(1.0, abs=1e-12) for f in exact.fidelities)
    digital = cmp.reports[0].resources
    assert {"gates_total", "gates_two_qubit", "gates_depth", "gates_rz"} <= set(digital)
    assert {"parameters", "residual"} <= set(cmp.reports[2].resources)
    hybrid = cmp.reports[3].resources
    assert {"parameters", "residual", "gates_total"} <= set(hybrid)


def test_hybrid_boundaries(schwinger2_comparison):
    digital8 = simulate(build_problem(schwinger_model(2)), Digital(8), schwinger2_comparison.times)
    hybrid_none = schwinger2_comparison.reports[4]
    np.testing.assert_allclose(hybrid_none.fidelities, digital8.fidelities, atol=1e-12)
    for k in digital8.observables:
        np.testing.assert_allclose(hybrid_none.observables[k], digital8.observables[k], atol=1e-12)
    analogue, hybrid_all = schwinger2_comparison.reports[2], schwinger2_comparison.reports[5]
    np.testing.assert_allclose(hybrid_all.fidelities, analogue.fidelities, atol=1e-12)
    for k in analogue.observables:
        np.testing.assert_allclose(hybrid_all.observables[k], analogue.observables[k], atol=1e-12)


def test_hybrid_empty_block_same_circuit_resources():
    prob = build_problem(schwinger_model(2))
    _, rd = run_strategy(prob, Digital(8), [1.0])
    _, rh = run_strategy(prob, Hybrid(8, ()), [1.0])
    assert {k: v for k, v in rh.items() if k.startswith("gates_")} == rd


def test_ranking_ties_broken_by_resources():
    a = simulate(build_problem(XZ), Exact(), [1.0])
    b = simulate(build_problem(XZ), Digital(3), [1.0])
    b.fidelities = list(a.fidelities)
    assert rank_reports([b, a]) == [1, 0]


def test_comparison_outputs_deterministic():
    def run():
        c = strategy_compare(schwinger_model(2), [Digital(4), Analogue(), Hybrid(4)], 1.0, seed=5)
        return c.to_csv(), c.to_json(), json.dumps(c.plot_data())

    assert run() == run()


def test_timing_only_on_request(schwinger2_comparison):
    assert "wall_seconds" not in schwinger2_comparison.to_json()
    assert "wall_seconds" in schwinger2_comparison.to_json(timing=True)


def test_time_grid_validation():
    with pytest.raises(QsimError):
        strategy_compare(XZ, [Exact()], 1.0, times=[0.5, 0.2])


# -- Gauss drift ----------------------------------------------------------------------------------


def test_exact_drift_on_bundled_model():
    res = gauss_drift_experiment(load_bundled("schwinger.hml"), np.linspace(0, 5, 11))
    assert res.max_drift < 1e-10
    assert res.labels == ("G0", "G1", "G2", "G3")
    assert max(c for _, _, c in res.rows) < 1e-10


def test_single_time_zero_drift():
    res = gauss_drift_experiment(load_bundled("schwinger.hml"), [0.0], Digital(25))
    assert res.max_drift == 0.0


def test_drift_requires_gauss_metadata():
    m, _ = parse_model("model a\nsite 0 qubit\nterm 1 : Z@0\n")
    with pytest.raises(QsimError, match="Gauss"):
        gauss_drift_experiment(m, [0.0, 1.0])


def test_trotter_drift_finite_and_at_roundoff():
    """Each hopping bond's Pauli strings commute with one another, so the
    Trotter product of a bond equals its exact exponential; every other string
    is diagonal.  The digital circuit therefore conserves each G_l exactly and
    only roundoff accumulates with the gate count."""
    m = load_bundled("schwinger.hml")
    times = np.linspace(0, 5, 6)
    drifts = [gauss_drift_experiment(m, times, Digital(n)).max_drift for n in (25, 50, 100)]
    assert all(np.isfinite(d) and d < 1e-10 for d in drifts)


def test_hopping_strings_commute_within_bond_but_not_with_gauss():
    m = schwinger_model(2)
    hq = to_qubits(m.hamiltonian)
    offdiag = [PauliString(p) for p, _ in hq.terms if set(p) - {"I", "Z"}]
    assert len(offdiag) == 4
    assert all(a.commutes_with(b) for a in offdiag for b in offdiag)
    G = {l: hamiltonian_matrix(g) for l, g in gauss_operators(m)}
    for P in offdiag:
        M = P.matrix()
        assert max(np.max(np.abs(M @ g - g @ M)) for g in G.values()) > 0.5
    H = hq.matrix()
    assert max(np.max(np.abs(H @ g - g @ H)) for g in G.values()) < 1e-12


def test_initial_state_is_dynamic():
    prob = build_problem(schwinger_model(2))
    overlap = abs(np.vdot(prob.psi0, prob.exact.evolve(prob.psi0, 1.0))) ** 2
    assert overlap < 0.99


# -- CLI -------------------------------------------------------------------------------------------


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_cli_validate(capsys, tmp_path):
    assert run_cli(capsys, "validate", "schwinger.hml")[0] == 0
    bad = tmp_path / "bad.hml"
    bad.write_text("model a\nsite 0 qubit\nterm 1.0 : Z@1\n")
    code, out, _ = run_cli(capsys, "validate", str(bad))
    assert code == 1
    assert f"{bad}:3:" in out and "undeclared site 1" in out


def test_cli_compile(capsys, tmp_path):
    target = tmp_path / "xz.qasm"
    code, _, err = run_cli(capsys, "compile", "pauli:X=1,Z=1", "--time", "1", "--steps", "4", "-o", str(target))
    assert code == 0 and "resources:" in err
    text = target.read_text()
    assert text.startswith("OPENQASM 3.0;\nqubit[1] q;\n")
    assert text.count("rz(") == 8


def test_cli_simulate_modes(capsys):
    for mode in ("exact", "digital", "analogue", "hybrid"):
        code, out, _ = run_cli(capsys, "simulate", "schwinger:2", "--mode", mode, "--time", "1", "--points", "2",
                               "--steps", "8", "-q")
        doc = json.loads(out)
        assert code == 0 and doc["error"] is None and len(doc["fidelities"]) == 2


def test_cli_calibrate_and_reuse(capsys, tmp_path):
    params = tmp_path / "params.json"
    code, _, _ = run_cli(capsys, "calibrate", "pauli:Z=0.65", "--template", "1,2", "--out", str(params), "-q")
    assert code == 0
    doc = json.loads(params.read_text())
    assert doc["converged"] and doc["params"]["eps"][0] == pytest.approx(-1.3, abs=1e-8)
    code, out, _ = run_cli(capsys, "simulate", "pauli:Z=0.65", "--mode", "analogue", "--params", str(params),
                           "--time", "2", "-q")
    assert code == 0 and min(json.loads(out)["fidelities"]) >= 0.999


def test_cli_calibrate_infeasible(capsys):
    code, out, _ = run_cli(capsys, "calibrate", "pauli:Y=1", "--template", "1,2", "-q")
    assert code == 0 and json.loads(out)["converged"] is False


def test_cli_errors(capsys):
    assert run_cli(capsys, "compile", "missing.hml", "--time", "1")[0] == 1
    assert run_cli(capsys, "bench", "strategy-compare", "pauli:X=1", "--strategy", "bogus")[0] == 1
    assert run_cli(capsys, "bench", "gauss-drift", "pauli:X=1")[0] == 1


def test_cli_internal_error_exit_code(capsys, monkeypatch):
    monkeypatch.setattr(cli, "build_problem", lambda *a, **k: (_ for _ in ()).throw(RuntimeError("boom")))
    code, _, err = run_cli(capsys, "simulate", "pauli:X=1", "--time", "1")
    assert code == 2 and "internal error" in err


def test_cli_empty_strategy_list(capsys):
    code, out, _ = run_cli(capsys, "bench", "strategy-compare", "pauli:X=1,Z=1", "-q")
    assert code == 0 and json.loads(out)["reports"] == []


@pytest.mark.parametrize("argv", [
    ["bench", "trotter-scaling", "pauli:X=1,Z=1", "--order", "1,2"],
    ["bench", "trotter-scaling", "pauli:X=1,Z=1", "--format", "csv"],
    ["bench", "strategy-compare", "schwinger:2", "--strategy", "digital:4", "--strategy", "analogue",
     "--strategy", "hybrid:4", "--time", "1", "--points", "3"],
    ["bench", "strategy-compare", "schwinger:2", "--strategy", "digital:4", "--format", "csv"],
    ["bench", "gauss-drift", "schwinger:2", "--strategy", "digital:10", "--points", "4"],
])
def test_cli_bench_byte_reproducible(capsys, tmp_path, argv):
    outputs = []
    for k in range(2):
        pd = tmp_path / f"pd{k}"
        code, out, _ = run_cli(capsys, *argv, "--seed", "9", "--plot-data", str(pd), "-q")
        assert code == 0
        files = {p.name: p.read_bytes() for p in sorted(pd.iterdir())}
        assert files
        outputs.append((out, files))
    assert outputs[0] == outputs[1]


def test_cli_figures(capsys, tmp_path):
    figs = tmp_path / "figs"
    code, _, _ = run_cli(capsys, "bench", "trotter-scaling", "pauli:X=1,Z=1", "--order", "1,2", "--figures",
                         str(figs), "-q")
    assert code == 0
    png = figs / "trotter_scaling.png"
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    code, _, _ = run_cli(capsys, "bench", "gauss-drift", "schwinger:2", "--points", "3", "--figures", str(figs), "-q")
    assert code == 0 and (figs / "gauss_drift.png").exists()
    code, _, _ = run_cli(capsys, "bench", "strategy-compare", "schwinger:2", "--strategy", "digital:2",
                         "--figures", str(figs), "-q")
    assert code == 0 and (figs / "strategy_fidelity.png").exists()


def test_cli_param_binding(capsys):
    code, out, _ = run_cli(capsys, "bench", "gauss-drift", "schwinger:2", "--param", "kappa=0", "--points", "2", "-q")
    assert code == 0 and json.loads(out)["max_drift"] < 1e-10
    with pytest.raises(SystemExit) as exc:
        cli.main(["bench", "gauss-drift", "schwinger:2", "--param", "bogus"])
    assert exc.value.code == 2
