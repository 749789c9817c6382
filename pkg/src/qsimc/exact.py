"""Exact dense time evolution and comparison metrics."""

from __future__ import annotations

import numpy as np

from .errors import QsimError
from .operators import DEFAULT_DIM_CAP

HERMITIAN_TOL = 1e-10
EIGEN_RESIDUAL_TOL = 1e-9


def _check_hermitian(H: np.ndarray, what: str = "Hamiltonian") -> None:
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise QsimError(f"{what} must be a square matrix")
    dev = np.max(np.abs(H - H.conj().T), initial=0.0)
    if not dev < HERMITIAN_TOL:
        raise QsimError(f"{what} is not Hermitian (deviation {dev:.3g})")


class Propagator:
    """``exp(-iHt)`` for a fixed Hermitian ``H`` via one eigendecomposition."""

    def __init__(self, H: np.ndarray, dim_cap: int | None = None):
        H = np.asarray(H, dtype=complex)
        _check_hermitian(H)
        cap = DEFAULT_DIM_CAP if dim_cap is None else dim_cap
        if H.shape[0] > cap:
            raise QsimError(f"dimension {H.shape[0]} exceeds cap {cap}")
        self.H = H
        self.energies, self.vectors = np.linalg.eigh(H)
        res = np.max(np.abs(H @ self.vectors - self.vectors * self.energies), initial=0.0)
        if res > EIGEN_RESIDUAL_TOL * max(1.0, float(np.max(np.abs(self.energies), initial=0.0))):
            raise QsimError(f"eigendecomposition residual {res:.3g} too large")

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def unitary(self, t: float) -> np.ndarray:
        V = self.vectors
        return (V * np.exp(-1j * self.energies * t)) @ V.conj().T

    def evolve(self, psi0: np.ndarray, t: float) -> np.ndarray:
        psi0 = np.asarray(psi0, dtype=complex)
        if psi0.shape[0] != self.dim:
            raise QsimError(f"state dimension {psi0.shape[0]} != Hamiltonian dimension {self.dim}")
        V = self.vectors
        return V @ (np.exp(-1j * self.energies * t) * (V.conj().T @ psi0))


def evolve_exact(H: np.ndarray, psi0: np.ndarray, t: float) -> np.ndarray:
    """Return ``exp(-iHt) psi0`` for a Hermitian ``H``."""
    return Propagator(H).evolve(psi0, t)


def unitary_exact(H: np.ndarray, t: float) -> np.ndarray:
    return Propagator(H).unitary(t)


def basis_state(dim: int, index: int = 0) -> np.ndarray:
    psi = np.zeros(dim, dtype=complex)
    psi[index] = 1.0
    return psi


def bits_to_state(bits: str, dims: tuple[int, ...] | None = None) -> np.ndarray:
    """Product basis state ``|b0 b1 ...>`` with site 0 most significant."""
    dims = dims or (2,) * len(bits)
    index = 0
    for b, d in zip(bits, dims):
        index = index * d + int(b)
    return basis_state(int(np.prod(dims)), index)


def fidelity(psi: np.ndarray, phi: np.ndarray) -> float:
    psi = np.asarray(psi)
    phi = np.asarray(phi)
    if psi.shape != phi.shape:
        raise QsimError("state dimension mismatch")
    return float(min(1.0, abs(np.vdot(psi, phi)) ** 2))


def operator_error(U: np.ndarray, V: np.ndarray) -> float:
    """Phase-optimal Frobenius distance ``min_phi ||U - e^{i phi} V||_F``.

    For unitaries this equals ``sqrt(2d - 2|tr(U^dag V)|)``.  The norm is
    evaluated at the optimal phase ``arg tr(U^dag V)`` rather than through that
    formula, which loses half the digits to cancellation when ``U ~ V``.
    The optimal phase factor is ``conj(tr(U^dag V)) / |tr(U^dag V)|``.
    """
    U = np.asarray(U)
    V = np.asarray(V)
    if U.shape != V.shape or U.shape[0] != U.shape[1]:
        raise QsimError("operator dimension mismatch")
    overlap = np.vdot(U, V)  # tr(U^dag V)
    phase = overlap.conjugate() / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.linalg.norm(U - phase * V))


def expectation(psi: np.ndarray, O: np.ndarray) -> float:
    O = np.asarray(O)
    psi = np.asarray(psi)
    if O.shape[0] != psi.shape[0]:
        raise QsimError("observable dimension mismatch")
    _check_hermitian(O, "observable")
    val = np.vdot(psi, O @ psi)
    if abs(val.imag) > 1e-10:
        raise QsimError(f"expectation has imaginary residue {val.imag:.3g}")
    return float(val.real)
