"""Analogue back end: calibrate a Bose-Hubbard chain against a target.

The simulator Hamiltonian is::

    H_sim = -J sum_j (b+_j b_{j+1} + h.c.) + (U/2) sum_j n_j (n_j - 1) + sum_j eps_j n_j

Calibration compares the block of ``H_sim`` on the encoded subspace
(occupations 0/1 on mapped sites, 0 elsewhere) with the qubit-encoded target,
modulo a uniform energy shift, in Frobenius norm.  The on-site ``U`` term
vanishes on that subspace, so it is invisible to the objective and is held
at its initial value; it still governs leakage when ``cutoff > 2``.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .encodings import EncodingMap, QubitHamiltonian, to_qubits
from .errors import LeakageError, QsimError
from .exact import Propagator
from .operators import Hamiltonian, OperatorTerm, SiteRegister, boson, hamiltonian_matrix


@dataclass(frozen=True)
class HardwareTemplate:
    length: int
    cutoff: int = 2

    def __post_init__(self):
        if self.length < 1:
            raise QsimError("template needs at least one site")
        if self.cutoff < 2:
            raise QsimError("boson cutoff must be >= 2")

    @property
    def register(self) -> SiteRegister:
        return SiteRegister(tuple(boson(self.cutoff) for _ in range(self.length)))

    @property
    def n_params(self) -> int:
        return self.length + 2

    def lower_bounds(self) -> np.ndarray:
        return np.array([0.0, 0.0] + [-np.inf] * self.length)


@dataclass(frozen=True)
class BHParams:
    J: float
    U: float
    eps: tuple[float, ...]

    @classmethod
    def from_vector(cls, x) -> BHParams:
        x = [float(v) for v in x]
        return cls(x[0], x[1], tuple(x[2:]))

    @classmethod
    def zeros(cls, length: int, J: float = 0.0, U: float = 0.0) -> BHParams:
        return cls(J, U, (0.0,) * length)

    def vector(self) -> np.ndarray:
        return np.array([self.J, self.U, *self.eps], dtype=float)

    def as_dict(self) -> dict:
        return {"J": self.J, "U": self.U, "eps": list(self.eps)}


def _check_params(tpl: HardwareTemplate, p: BHParams) -> None:
    if len(p.eps) != tpl.length:
        raise QsimError(f"expected {tpl.length} site offsets, got {len(p.eps)}")
    if p.J < 0 or p.U < 0:
        raise QsimError("template bounds violated: J and U must be >= 0")
    if not np.all(np.isfinite(p.vector())):
        raise QsimError("non-finite template parameter")


def instantiate_template(tpl: HardwareTemplate, params: BHParams) -> Hamiltonian:
    _check_params(tpl, params)
    terms = []
    for j in range(tpl.length - 1):
        terms.append(OperatorTerm.make(-params.J, [(j, "Cr"), (j + 1, "An")]))
        terms.append(OperatorTerm.make(-params.J, [(j, "An"), (j + 1, "Cr")]))
    for j in range(tpl.length):
        terms.append(OperatorTerm.make(params.U / 2, [(j, "N2")]))
        terms.append(OperatorTerm.make(params.eps[j], [(j, "N")]))
    return Hamiltonian.build(tpl.register, terms)


def subspace_isometry(emap: EncodingMap, tpl: HardwareTemplate) -> np.ndarray:
    """Columns are simulator basis states encoding each target qubit basis state."""
    if emap.n_sim != tpl.length:
        raise QsimError(f"encoding map covers {emap.n_sim} simulator sites, template has {tpl.length}")
    d, L, n = tpl.cutoff, tpl.length, emap.n_target
    E = np.zeros((d ** L, 2 ** n))
    for col in range(2 ** n):
        occ = [0] * L
        for k, site in enumerate(emap.target_to_sim):
            occ[site] = (col >> (n - 1 - k)) & 1
        row = 0
        for o in occ:
            row = row * d + o
        E[row, col] = 1.0
    return E


def subspace_projector(emap: EncodingMap, tpl: HardwareTemplate) -> np.ndarray:
    E = subspace_isometry(emap, tpl)
    return (E @ E.T).astype(complex)


def projected_block(tpl: HardwareTemplate, params: BHParams, emap: EncodingMap) -> np.ndarray:
    E = subspace_isometry(emap, tpl)
    return E.T @ hamiltonian_matrix(instantiate_template(tpl, params)) @ E


@dataclass(frozen=True)
class CalibrationResult:
    params: BHParams
    residual: float
    iterations: int
    converged: bool
    seed: int = 0
    gradient_norm: float = 0.0
    history: tuple[float, ...] = field(default=(), compare=False, repr=False)

    def to_json(self) -> str:
        doc = {"params": self.params.as_dict(), "residual": self.residual,
               "iterations": self.iterations, "converged": self.converged, "seed": self.seed}
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> CalibrationResult:
        doc = json.loads(text)
        p = doc["params"]
        return cls(BHParams(float(p["J"]), float(p["U"]), tuple(float(e) for e in p["eps"])),
                   float(doc["residual"]), int(doc["iterations"]), bool(doc["converged"]),
                   int(doc.get("seed", 0)))


def _traceless(M: np.ndarray) -> np.ndarray:
    return M - np.trace(M) / M.shape[0] * np.eye(M.shape[0])


def _realvec(M: np.ndarray) -> np.ndarray:
    return np.concatenate([M.real.ravel(), M.imag.ravel()])


class SubspaceObjective:
    """``f(x) = ||B(x) - T - lambda I||_F`` with the optimal shift ``lambda``.

    ``B`` is linear in ``x = (J, U, eps...)``, so the objective is a linear
    residual over traceless parts, evaluated directly (not via a Gram matrix)
    to keep small residuals accurate.
    """

    def __init__(self, target: np.ndarray, tpl: HardwareTemplate, emap: EncodingMap):
        E = subspace_isometry(emap, tpl)
        if target.shape != (E.shape[1], E.shape[1]):
            raise QsimError(
                f"target dimension {target.shape[0]} does not match encoded subspace {E.shape[1]}")
        if not np.all(np.isfinite(target)):
            raise QsimError("non-finite target Hamiltonian")
        self.dim = E.shape[1]
        cols = []
        for k in range(tpl.n_params):
            unit = np.zeros(tpl.n_params)
            unit[k] = 1.0
            block = E.T @ hamiltonian_matrix(instantiate_template(tpl, BHParams.from_vector(unit))) @ E
            cols.append(_realvec(_traceless(block)))
        self.A = np.array(cols)  # (n_params, 2 dim^2)
        self.t = _realvec(_traceless(np.asarray(target, dtype=complex)))
        self.active = np.linalg.norm(self.A, axis=1) > 0
        self.scale = float(np.linalg.norm(self.t))

    def __call__(self, x: np.ndarray) -> float:
        val = float(np.linalg.norm(x @ self.A - self.t))
        if not np.isfinite(val):
            raise QsimError("non-finite objective")
        return val

    def gradient(self, x: np.ndarray) -> np.ndarray:
        """Gradient of ``f^2 / 2``."""
        return self.A @ (x @ self.A - self.t)


def pattern_search(f, x0: np.ndarray, lower: np.ndarray, frozen: np.ndarray, step: float,
                   tol: float, max_evals: int, min_step: float = 1e-13
                   ) -> tuple[np.ndarray, float, int, list[float]]:
    """Deterministic compass search with shrinking radius.

    Each coordinate is probed at ``+-step``; a successful move is repeated with
    doubled length while it keeps improving.  The radius halves after a sweep
    without improvement.  Only strict improvements are accepted, so the
    returned history is non-increasing.
    """
    x = np.maximum(np.array(x0, dtype=float), lower)
    fx = f(x)
    evals = 1
    history = [fx]
    r = step
    while fx >= tol and r > min_step and evals < max_evals:
        improved = False
        for k in range(len(x)):
            if frozen[k]:
                continue
            for sgn in (1.0, -1.0):
                if evals >= max_evals:
                    break
                y = x.copy()
                y[k] = max(x[k] + sgn * r, lower[k])
                if y[k] == x[k]:
                    continue
                fy = f(y)
                evals += 1
                if fy < fx:
                    x, fx = y, fy
                    history.append(fx)
                    improved = True
                    stride = 2 * r
                    while evals < max_evals:
                        z = x.copy()
                        z[k] = max(x[k] + sgn * stride, lower[k])
                        if z[k] == x[k]:
                            break
                        fz = f(z)
                        evals += 1
                        if fz >= fx:
                            break
                        x, fx = z, fz
                        history.append(fx)
                        stride *= 2
                    break
        if not improved:
            r *= 0.5
    return x, fx, evals, history


def calibrate(target, tpl: HardwareTemplate, emap: EncodingMap, init: BHParams | None = None,
              seed: int = 0, tol: float = 1e-8, gtol: float = 1e-6, max_evals: int = 10_000,
              starts: int = 8, jobs: int = 1) -> CalibrationResult:
    """Fit ``(J, U, eps)`` so the encoded block of ``H_sim`` matches ``target``.

    Args:
        target: qubit-encoded target as a :class:`QubitHamiltonian`, a
            :class:`Hamiltonian` (encoded on the fly) or a dense matrix.
        tpl: simulator template.
        emap: target-to-simulator site map.
        init: first starting point; the remaining ``starts - 1`` points are
            drawn from ``numpy.random.default_rng(seed)``.

    Returns:
        The best of all starts (lowest residual, earliest start on ties).
        ``converged`` is true when the residual is below ``tol``, or when the
        projected gradient is below ``gtol`` and the residual is negligible
        relative to the target; a stationary but poor fit is not converged.
    """
    if isinstance(target, Hamiltonian):
        target = to_qubits(target)
    T = target.matrix() if isinstance(target, QubitHamiltonian) else np.asarray(target, dtype=complex)
    obj = SubspaceObjective(T, tpl, emap)
    init = init or BHParams.zeros(tpl.length, J=1.0, U=1.0)
    _check_params(tpl, init)
    x0 = init.vector()
    lower = tpl.lower_bounds()
    frozen = ~obj.active
    spread = max(1.0, obj.scale / np.sqrt(obj.dim))

    rng = np.random.default_rng(seed)
    points = [x0]
    for _ in range(starts - 1):
        x = x0.copy()
        x[0] = rng.uniform(0.0, 2 * spread)
        rng.uniform(0.0, 2 * spread)  # U draw kept so streams do not depend on which params are frozen
        x[2:] = rng.uniform(-spread, spread, tpl.length)
        x[frozen] = x0[frozen]
        points.append(x)

    def run(x):
        return pattern_search(obj, x, lower, frozen, spread, tol, max_evals)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(run, points))
    else:
        runs = [run(x) for x in points]
    best = min(range(len(runs)), key=lambda i: (runs[i][1], i))
    x, fx, evals, history = runs[best]
    g = obj.gradient(x)
    at_bound = (x <= lower) & (g > 0)
    g[at_bound | frozen] = 0.0
    gnorm = float(np.linalg.norm(g))
    relative = fx / obj.scale if obj.scale > 0 else fx
    converged = bool(fx < tol or (gnorm < gtol and relative < 1e-6))
    return CalibrationResult(BHParams.from_vector(x), fx, evals, converged, seed, gnorm, tuple(history))


class AnalogueSimulator:
    """Exact evolution under a calibrated ``H_sim``, decoded to target space."""

    def __init__(self, tpl: HardwareTemplate, params: BHParams, emap: EncodingMap,
                 leakage_bound: float = 0.5, dim_cap: int | None = None):
        self.tpl = tpl
        self.E = subspace_isometry(emap, tpl).astype(complex)
        self.H = hamiltonian_matrix(instantiate_template(tpl, params), dim_cap=dim_cap)
        self.propagator = Propagator(self.H, dim_cap)
        self.leakage_bound = leakage_bound

    def encode(self, psi: np.ndarray) -> np.ndarray:
        return self.E @ psi

    def decode(self, phi: np.ndarray) -> tuple[np.ndarray, float]:
        psi = self.E.conj().T @ phi
        kept = float(np.vdot(psi, psi).real)
        leakage = max(0.0, 1.0 - kept / float(np.vdot(phi, phi).real))
        if leakage > self.leakage_bound:
            raise LeakageError(f"encoding subspace abandoned: leakage {leakage:.3g}")
        return psi / np.sqrt(kept), leakage

    def evolve(self, psi0: np.ndarray, t: float) -> tuple[np.ndarray, float]:
        return self.decode(self.propagator.evolve(self.encode(psi0), t))


def analogue_evolve(tpl: HardwareTemplate, params: BHParams, emap: EncodingMap, psi0: np.ndarray,
                    t: float, leakage_bound: float = 0.5) -> tuple[np.ndarray, float]:
    """Encode, evolve under the simulator, project back; returns ``(state, leakage)``."""
    return AnalogueSimulator(tpl, params, emap, leakage_bound).evolve(psi0, t)
