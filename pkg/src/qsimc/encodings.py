"""Transformations between abstraction levels.

* :func:`jordan_wigner` realizes fermionic modes on qubits with Z-strings over
  lower-indexed modes; spin and qubit sites pass through without strings.
* :func:`boson_binary_reduce` identifies hard-core (cutoff 2) bosons with qubits.
* :func:`parity_encode` lays a matter/link chain onto a Bose-Hubbard register,
  matter on even simulator sites and gauge links on odd ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Mapping

import numpy as np

from .errors import EncodingError
from .operators import (
    BOSON,
    FERMION,
    SPIN,
    Hamiltonian,
    Site,
    SiteRegister,
    boson,
    primitive_matrix,
    resolve_bindings,
)

_MUL = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}

_PAULI_M = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
}

# local expansions in the Pauli basis; Cr = |1><0| = (X - iY)/2
_LOCAL = {
    "I": {"I": 1},
    "X": {"X": 1}, "Y": {"Y": 1}, "Z": {"Z": 1},
    "Sp": {"X": 0.5, "Y": 0.5j}, "Sm": {"X": 0.5, "Y": -0.5j},
    "Cr": {"X": 0.5, "Y": -0.5j}, "An": {"X": 0.5, "Y": 0.5j},
    "N": {"I": 0.5, "Z": -0.5},
    "N2": {},
}


@dataclass(frozen=True)
class PauliString:
    letters: str
    phase: complex = 1

    def __post_init__(self):
        if self.phase not in (1, -1, 1j, -1j):
            raise ValueError(f"phase must be one of +-1, +-i, got {self.phase}")
        if set(self.letters) - set("IXYZ"):
            raise ValueError(f"bad Pauli letters {self.letters!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @property
    def is_identity(self) -> bool:
        return set(self.letters) <= {"I"}

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(k for k, c in enumerate(self.letters) if c != "I")

    def __mul__(self, other: PauliString) -> PauliString:
        if len(other.letters) != len(self.letters):
            raise ValueError("length mismatch")
        phase = self.phase * other.phase
        out = []
        for a, b in zip(self.letters, other.letters):
            p, c = _MUL[a, b]
            phase *= p
            out.append(c)
        return PauliString("".join(out), phase)

    def commutes_with(self, other: PauliString) -> bool:
        anti = sum(a != "I" and b != "I" and a != b for a, b in zip(self.letters, other.letters))
        return anti % 2 == 0

    def matrix(self) -> np.ndarray:
        return self.phase * reduce(np.kron, (_PAULI_M[c] for c in self.letters), np.eye(1, dtype=complex))

    def __str__(self) -> str:
        sign = {1: "+", -1: "-", 1j: "+i", -1j: "-i"}[self.phase]
        return sign + self.letters


@dataclass(frozen=True)
class QubitHamiltonian:
    """Real-weighted sum of phase-free Pauli strings, in first-appearance order."""

    n_qubits: int
    terms: tuple[tuple[str, float], ...]

    def __post_init__(self):
        seen = set()
        for letters, w in self.terms:
            if len(letters) != self.n_qubits:
                raise EncodingError("Pauli string length does not match qubit count")
            if letters in seen:
                raise EncodingError(f"duplicate Pauli string {letters}")
            if not np.isreal(w):
                raise EncodingError("weights must be real")
            seen.add(letters)

    @classmethod
    def from_dict(cls, n_qubits: int, weights: Mapping[str, float]) -> QubitHamiltonian:
        """Build from ``{letters: weight}``; zero weights are dropped."""
        return cls(n_qubits, tuple((k, float(v)) for k, v in weights.items() if v != 0))

    def __len__(self) -> int:
        return len(self.terms)

    def strings(self) -> list[PauliString]:
        return [PauliString(p) for p, _ in self.terms]

    def weights(self) -> dict[str, float]:
        return dict(self.terms)

    def subset(self, indices) -> QubitHamiltonian:
        return QubitHamiltonian(self.n_qubits, tuple(self.terms[i] for i in indices))

    def matrix(self) -> np.ndarray:
        dim = 2 ** self.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for letters, w in self.terms:
            out += w * PauliString(letters).matrix()
        return out


def _multiply(a: dict[str, complex], b: dict[str, complex]) -> dict[str, complex]:
    out: dict[str, complex] = {}
    for pa, ca in a.items():
        for pb, cb in b.items():
            prod = PauliString(pa) * PauliString(pb)
            out[prod.letters] = out.get(prod.letters, 0) + ca * cb * prod.phase
    return out


def _embed(n: int, site_letters: dict[int, str]) -> str:
    letters = ["I"] * n
    for k, c in site_letters.items():
        letters[k] = c
    return "".join(letters)


def _to_paulis(H: Hamiltonian, bindings: Mapping[str, float] | None) -> QubitHamiltonian:
    reg = H.register
    n = len(reg)
    values = resolve_bindings(H, bindings)
    fermions = [k for k, s in enumerate(reg.sites) if s.kind == FERMION]
    total: dict[str, complex] = {}
    for t in H.terms:
        coef = t.coefficient.bind(values).value()
        op = {"I" * n: coef}
        for i, name in t.factors:
            factor = {_embed(n, {i: c}): v for c, v in _LOCAL[name].items()}
            if reg.sites[i].kind == FERMION and name in ("Cr", "An"):
                string = {_embed(n, {k: "Z" for k in fermions if k < i}): 1}
                factor = _multiply(string, factor)
            op = _multiply(op, factor)
        for p, v in op.items():
            total[p] = total.get(p, 0) + v
    scale = max((abs(v) for v in total.values()), default=0.0)
    out = {}
    for p, v in total.items():
        if abs(v) <= 1e-14 * max(scale, 1.0):
            continue
        if abs(v.imag) > 1e-12 * max(scale, 1.0):
            raise EncodingError(f"non-Hermitian Hamiltonian: Pauli string {p} has complex weight {v}")
        out[p] = v.real
    return QubitHamiltonian.from_dict(n, out)


def jordan_wigner(H: Hamiltonian, bindings: Mapping[str, float] | None = None) -> QubitHamiltonian:
    """Encode fermion/spin/qubit Hamiltonians as Pauli sums.

    Raises:
        EncodingError: the register holds bosonic sites or the result is not
            Hermitian.
    """
    if any(s.kind == BOSON for s in H.register.sites):
        raise EncodingError("BosonMode sites are not Jordan-Wigner encodable")
    return _to_paulis(H, bindings)


def boson_binary_reduce(H: Hamiltonian, bindings: Mapping[str, float] | None = None,
                        cutoff: int = 2) -> QubitHamiltonian:
    """Hard-core boson reduction: occupation ``{0, 1}`` becomes the qubit basis."""
    if cutoff != 2:
        raise EncodingError("only hard-core (cutoff 2) boson reduction is supported")
    bad = [k for k, s in enumerate(H.register.sites) if s.kind == BOSON and s.cutoff != 2]
    if bad:
        raise EncodingError(f"boson site {bad[0]} has cutoff > 2")
    return _to_paulis(H, bindings)


def to_qubits(H: Hamiltonian, bindings: Mapping[str, float] | None = None) -> QubitHamiltonian:
    if any(s.kind == BOSON for s in H.register.sites):
        return boson_binary_reduce(H, bindings)
    return jordan_wigner(H, bindings)


def fock_space_matrix(H: Hamiltonian, bindings: Mapping[str, float] | None = None) -> np.ndarray:
    """Second-quantized matrix built by acting on occupation-number states.

    Fermionic operators pick up ``(-1)^(occupied fermion modes below)``; this
    path shares no code with the Pauli algebra and serves as its oracle.
    """
    reg = H.register
    if any(s.dim != 2 for s in reg.sites):
        raise EncodingError("Fock construction supports two-level sites only")
    n = len(reg)
    values = resolve_bindings(H, bindings)
    dim = 2 ** n
    out = np.zeros((dim, dim), dtype=complex)
    fermion = [s.kind == FERMION for s in reg.sites]
    for t in H.terms:
        coef = t.coefficient.bind(values).value()
        for col in range(dim):
            occ = tuple((col >> (n - 1 - k)) & 1 for k in range(n))
            states = {occ: coef}
            for i, name in reversed(t.factors):
                nxt: dict[tuple, complex] = {}
                for st, amp in states.items():
                    for new, factor in _apply_local(st, i, name, reg.sites[i], fermion):
                        nxt[new] = nxt.get(new, 0) + amp * factor
                states = nxt
            for st, amp in states.items():
                row = sum(b << (n - 1 - k) for k, b in enumerate(st))
                out[row, col] += amp
    return out


def _apply_local(st: tuple, i: int, name: str, site: Site, fermion: list[bool]):
    o = st[i]
    if site.kind == FERMION:
        sign = (-1) ** sum(st[k] for k in range(i) if fermion[k])
        if name == "I":
            yield st, 1
        elif name == "N":
            if o:
                yield st, 1
        elif name == "Cr":
            if not o:
                yield st[:i] + (1,) + st[i + 1:], sign
        elif name == "An":
            if o:
                yield st[:i] + (0,) + st[i + 1:], sign
        return
    col = primitive_matrix(name, site)[:, o]
    for r in range(2):
        if col[r] != 0:
            yield st[:i] + (r,) + st[i + 1:], col[r]


# ---------------------------------------------------------------------------
# target -> simulator layouts
# ---------------------------------------------------------------------------

MATTER = "matter"
GAUGE_LINK = "gaugeLink"
UNUSED = "unused"


@dataclass(frozen=True)
class EncodingMap:
    target_to_sim: tuple[int, ...]
    roles: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.target_to_sim)) != len(self.target_to_sim):
            raise EncodingError("encoding map must be injective")
        if any(not 0 <= s < len(self.roles) for s in self.target_to_sim):
            raise EncodingError("encoding map targets a site outside the simulator")
        for t, s in enumerate(self.target_to_sim):
            if self.roles[s] == UNUSED:
                raise EncodingError(f"target site {t} mapped to an unused simulator site")

    @property
    def n_target(self) -> int:
        return len(self.target_to_sim)

    @property
    def n_sim(self) -> int:
        return len(self.roles)


def parity_encode(target, cutoff: int = 2) -> tuple[EncodingMap, SiteRegister]:
    """Matter site ``l`` -> simulator ``2l``; link ``(l, l+1)`` -> ``2l+1``.

    ``target`` is a model or a register alternating fermion and spin sites and
    ending on a matter site.
    """
    reg = target if isinstance(target, SiteRegister) else target.register
    for k, s in enumerate(reg.sites):
        want = FERMION if k % 2 == 0 else SPIN
        if s.kind != want:
            raise EncodingError(f"non-alternating register: site {k} is {s.label()}, expected {want}")
    if len(reg) % 2 == 0:
        raise EncodingError("non-alternating register: chain must end on a matter site")
    roles = tuple(MATTER if k % 2 == 0 else GAUGE_LINK for k in range(len(reg)))
    return EncodingMap(tuple(range(len(reg))), roles), SiteRegister(tuple(boson(cutoff) for _ in roles))


def direct_encode(n_target: int, n_sim: int | None = None, cutoff: int = 2
                  ) -> tuple[EncodingMap, SiteRegister]:
    """Target site ``k`` -> simulator site ``k``; extra simulator sites unused."""
    n_sim = n_target if n_sim is None else n_sim
    if n_sim < n_target:
        raise EncodingError("simulator chain shorter than target register")
    roles = tuple(MATTER if k < n_target else UNUSED for k in range(n_sim))
    return EncodingMap(tuple(range(n_target)), roles), SiteRegister(tuple(boson(cutoff) for _ in roles))
