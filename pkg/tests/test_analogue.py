from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsimc.analogue import (
    AnalogueSimulator,
    BHParams,
    CalibrationResult,
    HardwareTemplate,
    SubspaceObjective,
    analogue_evolve,
    calibrate,
    instantiate_template,
    pattern_search,
    projected_block,
    subspace_projector,
)
from qsimc.encodings import QubitHamiltonian, direct_encode, parity_encode
from qsimc.errors import LeakageError, QsimError
from qsimc.exact import Propagator, basis_state, fidelity
from qsimc.operators import SiteRegister, boson, hamiltonian_matrix


def hq(n, **w):
    return QubitHamiltonian.from_dict(n, w)


# -- instantiate_template ----------------------------------------------------------------


def test_hopping_only_one_particle_block():
    tpl = HardwareTemplate(2, 2)
    M = hamiltonian_matrix(instantiate_template(tpl, BHParams(1.0, 0.0, (0.0, 0.0))))
    one = [1, 2]  # |01>, |10>
    np.testing.assert_allclose(np.linalg.eigvalsh(M[np.ix_(one, one)]), [-1, 1])


def test_on_site_interaction_d3():
    tpl = HardwareTemplate(1, 3)
    M = hamiltonian_matrix(instantiate_template(tpl, BHParams(0.0, 2.0, (0.0,))))
    np.testing.assert_allclose(M, np.diag([0, 0, 2]))


def test_site_offsets():
    tpl = HardwareTemplate(2, 2)
    M = hamiltonian_matrix(instantiate_template(tpl, BHParams(0.0, 0.0, (0.0, 5.0))))
    np.testing.assert_allclose(M, np.diag([0, 5, 0, 5]))


def test_bounds_enforced():
    tpl = HardwareTemplate(2)
    with pytest.raises(QsimError):
        instantiate_template(tpl, BHParams(-1.0, 0.0, (0.0, 0.0)))
    with pytest.raises(QsimError):
        instantiate_template(tpl, BHParams(1.0, 0.0, (0.0,)))
    with pytest.raises(QsimError):
        HardwareTemplate(0)
    with pytest.raises(QsimError):
        HardwareTemplate(2, 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(2, 3), st.floats(0, 3), st.floats(0, 3),
       st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_template_hermitian(L, d, J, U, eps):
    M = hamiltonian_matrix(instantiate_template(HardwareTemplate(L, d), BHParams(J, U, tuple(eps[:L]))))
    np.testing.assert_allclose(M, M.conj().T, atol=1e-14)


# -- subspace_projector -----------------------------------------------------------------------


def test_projector_full_space_for_d2():
    emap, _ = direct_encode(3)
    np.testing.assert_array_equal(subspace_projector(emap, HardwareTemplate(3, 2)), np.eye(8))


def test_projector_rank_two_for_d3():
    emap, _ = direct_encode(1)
    P = subspace_projector(emap, HardwareTemplate(1, 3))
    np.testing.assert_array_equal(P, np.diag([1, 1, 0]))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2), st.integers(2, 4))
def test_projector_idempotent_hermitian(n_target, extra, d):
    emap, _ = direct_encode(n_target, n_target + extra)
    tpl = HardwareTemplate(n_target + extra, d)
    if d ** tpl.length > 512:
        return
    P = subspace_projector(emap, tpl)
    assert np.max(np.abs(P @ P - P)) < 1e-12
    assert np.max(np.abs(P - P.conj().T)) < 1e-12
    assert round(np.trace(P).real) == 2 ** n_target


def test_projector_mismatch():
    emap, _ = direct_encode(2)
    with pytest.raises(QsimError):
        subspace_projector(emap, HardwareTemplate(3))


# -- calibrate ---------------------------------------------------------------------------------


def test_identity_recovery():
    tpl = HardwareTemplate(3, 2)
    emap, _ = direct_encode(3)
    truth = BHParams(0.7, 3.0, (0.0, 0.0, 0.0))
    res = calibrate(projected_block(tpl, truth, emap), tpl, emap)
    assert res.residual < 1e-8
    assert res.converged
    assert res.params.J == pytest.approx(0.7, abs=1e-8)


def test_identity_recovery_parity_layout_d3():
    reg = SiteRegister.of("fermion", "spin", "fermion")
    emap, _ = parity_encode(reg)
    tpl = HardwareTemplate(3, 3)
    truth = BHParams(0.4, 2.0, (0.3, -1.1, 0.8))
    res = calibrate(projected_block(tpl, truth, emap), tpl, emap)
    assert res.residual < 1e-8 and res.converged
    np.testing.assert_allclose(res.params.vector()[[0, 2, 3, 4]], [0.4, 0.3, -1.1, 0.8], atol=1e-7)


@pytest.mark.parametrize("omega", [1.3, -0.6, 2.0])
def test_single_qubit_z_field(omega):
    tpl = HardwareTemplate(1, 2)
    emap, _ = direct_encode(1)
    res = calibrate(hq(1, Z=omega / 2), tpl, emap)
    assert res.converged
    assert res.params.eps[0] == pytest.approx(-omega, abs=1e-8)


def test_z_field_fidelity_over_time():
    omega = 1.3
    target = hq(1, Z=omega / 2)
    tpl = HardwareTemplate(1, 2)
    emap, _ = direct_encode(1)
    res = calibrate(target, tpl, emap)
    psi0 = np.array([1, 1j]) / np.sqrt(2)
    P = Propagator(target.matrix())
    for t in np.linspace(0, 2, 21):
        psi, leak = analogue_evolve(tpl, res.params, emap, psi0, t)
        assert leak == 0.0
        assert fidelity(psi, P.evolve(psi0, t)) >= 0.999


def test_infeasible_target_not_converged():
    tpl = HardwareTemplate(1, 2)
    emap, _ = direct_encode(1)
    res = calibrate(hq(1, Y=1.0), tpl, emap)
    assert res.converged is False
    assert res.residual == pytest.approx(np.sqrt(2), rel=1e-9)


def test_calibrate_dimension_mismatch():
    emap, _ = direct_encode(2)
    with pytest.raises(QsimError):
        calibrate(np.eye(2), HardwareTemplate(2), emap)
    with pytest.raises(QsimError):
        calibrate(np.full((4, 4), np.nan), HardwareTemplate(2), emap)


def test_shift_invariance():
    tpl = HardwareTemplate(3, 2)
    emap, _ = direct_encode(3)
    target = projected_block(tpl, BHParams(0.9, 0.0, (0.5, -0.2, 0.1)), emap) + 0.3 * np.diag(
        [0, 1, 0, 1, 1, 0, 0, 1]) + 0.2 * np.ones((8, 8))
    a = calibrate(target, tpl, emap)
    b = calibrate(target + 7.5 * np.eye(8), tpl, emap)
    assert a.residual == pytest.approx(b.residual, abs=1e-9)
    np.testing.assert_allclose(a.params.vector(), b.params.vector(), atol=1e-9)


def test_objective_matches_definition():
    tpl = HardwareTemplate(2, 3)
    emap, _ = direct_encode(2)
    rng = np.random.default_rng(0)
    T = rng.normal(size=(4, 4))
    T = T + T.T
    obj = SubspaceObjective(T, tpl, emap)
    x = np.array([0.8, 1.5, -0.3, 0.6])
    D = projected_block(tpl, BHParams.from_vector(x), emap) - T
    lam = np.trace(D).real / 4  # closed-form optimal shift
    assert obj(x) == pytest.approx(np.linalg.norm(D - lam * np.eye(4)), abs=1e-12)
    # U does not touch the 0/1 subspace
    assert list(obj.active) == [True, False, True, True]


def test_pattern_search_history_monotone():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(3, 5))
    b = rng.normal(size=5)
    f = lambda x: float(np.linalg.norm(x @ A - b))  # noqa: E731
    x, fx, evals, hist = pattern_search(f, np.zeros(3), np.full(3, -np.inf), np.zeros(3, bool), 1.0, 1e-12, 5000)
    assert all(b <= a for a, b in zip(hist, hist[1:]))
    assert fx == hist[-1] == f(x)
    xstar = np.linalg.lstsq(A.T, b, rcond=None)[0]
    assert fx == pytest.approx(f(xstar), abs=1e-9)


def test_pattern_search_respects_bounds():
    f = lambda x: abs(x[0] + 3.0)  # noqa: E731
    x, fx, _, _ = pattern_search(f, np.array([1.0]), np.array([0.0]), np.zeros(1, bool), 1.0, 1e-12, 1000)
    assert x[0] == 0.0 and fx == 3.0


def test_calibration_history_monotone():
    tpl = HardwareTemplate(3, 2)
    emap, _ = direct_encode(2, 3)
    res = calibrate(hq(2, XX=0.5, YY=0.5, ZI=0.3), tpl, emap)
    assert all(b <= a for a, b in zip(res.history, res.history[1:]))


@pytest.mark.parametrize("seed", range(4))
def test_recovery_from_scattered_starts(seed):
    rng = np.random.default_rng(100 + seed)
    L = int(rng.integers(2, 5))
    tpl = HardwareTemplate(L, 2)
    emap, _ = direct_encode(L)
    truth = BHParams(float(rng.uniform(0, 2)), 0.0, tuple(rng.uniform(-2, 2, L)))
    res = calibrate(projected_block(tpl, truth, emap), tpl, emap, seed=seed,
                    init=BHParams(0.0, 0.0, tuple(rng.uniform(-5, 5, L))))
    assert res.residual < 1e-6


def test_determinism():
    tpl = HardwareTemplate(3, 2)
    emap, _ = direct_encode(3)
    target = hq(3, XXI=0.5, YYI=0.5, IXX=0.3, IYY=0.3, ZII=0.2, IIZ=-0.7)
    a = calibrate(target, tpl, emap, seed=42)
    b = calibrate(target, tpl, emap, seed=42)
    c = calibrate(target, tpl, emap, seed=42, jobs=4)
    assert a.to_json() == b.to_json() == c.to_json()
    assert a.history == b.history


def test_result_json_round_trip():
    res = CalibrationResult(BHParams(0.5, 1.0, (0.1, -0.2)), 1e-9, 42, True, 7)
    text = res.to_json()
    assert list(__import__("json").loads(text)) == ["converged", "iterations", "params", "residual", "seed"]
    assert CalibrationResult.from_json(text) == res


# -- analogue_evolve -----------------------------------------------------------------------------


def test_evolve_zero_time():
    tpl = HardwareTemplate(2, 3)
    emap, _ = direct_encode(2)
    psi0 = np.array([0, 1, 1, 0]) / np.sqrt(2)
    psi, leak = analogue_evolve(tpl, BHParams(1.0, 1.0, (0.0, 0.0)), emap, psi0, 0.0)
    np.testing.assert_allclose(psi, psi0)
    assert leak == 0.0


def test_d2_never_leaks():
    tpl = HardwareTemplate(3, 2)
    emap, _ = direct_encode(3)
    sim = AnalogueSimulator(tpl, BHParams(1.3, 0.0, (0.2, -0.5, 0.9)), emap)
    psi0 = np.ones(8) / np.sqrt(8)
    for t in np.linspace(0, 4, 9):
        psi, leak = sim.evolve(psi0, t)
        assert leak == 0.0
        assert abs(np.linalg.norm(psi) - 1) < 1e-12


def test_d3_leaks_and_bound_raises():
    tpl = HardwareTemplate(2, 3)
    emap, _ = direct_encode(2)
    params = BHParams(1.0, 0.0, (0.0, 0.0))
    psi0 = basis_state(4, 3)  # both sites occupied: hopping reaches |2,0>, |0,2>
    leaks = [AnalogueSimulator(tpl, params, emap, leakage_bound=1.0).evolve(psi0, t)[1]
             for t in np.linspace(0.1, 1.5, 8)]
    assert max(leaks) > 0.5
    with pytest.raises(LeakageError, match="encoding subspace abandoned"):
        for t in np.linspace(0.1, 1.5, 8):
            analogue_evolve(tpl, params, emap, psi0, t)


def test_large_u_suppresses_leakage():
    tpl = HardwareTemplate(2, 3)
    emap, _ = direct_encode(2)
    psi0 = basis_state(4, 3)
    weak = max(analogue_evolve(tpl, BHParams(1.0, 0.0, (0, 0)), emap, psi0, t, 1.0)[1] for t in (0.3, 0.7, 1.1))
    strong = max(analogue_evolve(tpl, BHParams(1.0, 50.0, (0, 0)), emap, psi0, t, 1.0)[1] for t in (0.3, 0.7, 1.1))
    assert strong < 0.01 < weak
    assert SiteRegister((boson(3),) * 2).dim == 9
