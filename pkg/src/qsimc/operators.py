"""Operator-algebra intermediate representation.

A :class:`Hamiltonian` is a weighted sum of :class:`OperatorTerm` objects over a
:class:`SiteRegister`.  Sites may be qubits, spin-1/2 links, fermionic modes or
truncated bosonic modes.  Dense matrices use the Kronecker convention in which
site 0 is the most significant factor.

Fermionic ``Cr``/``An`` factors are realized with a parity (Z) string over the
lower-indexed fermionic modes of the register, so that the dense matrix of a
term is the faithful second-quantized operator.  Spin, qubit and boson sites
never enter those strings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .errors import DimensionCapError, IncompatibleOperatorError, QsimError, UnboundParameterError

DEFAULT_DIM_CAP = 4096

QUBIT = "qubit"
FERMION = "fermion"
SPIN = "spin"
BOSON = "boson"

OPS = ("I", "X", "Y", "Z", "Sp", "Sm", "Cr", "An", "N", "N2")

COMPATIBLE = {
    QUBIT: ("I", "X", "Y", "Z", "Sp", "Sm"),
    SPIN: ("I", "X", "Y", "Z", "Sp", "Sm"),
    FERMION: ("I", "Cr", "An", "N"),
    BOSON: ("I", "Cr", "An", "N", "N2"),
}

_DAGGER = {"I": "I", "X": "X", "Y": "Y", "Z": "Z", "Sp": "Sm", "Sm": "Sp",
           "Cr": "An", "An": "Cr", "N": "N", "N2": "N2"}

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class Site:
    kind: str
    cutoff: int = 2

    def __post_init__(self):
        if self.kind not in COMPATIBLE:
            raise QsimError(f"unknown site kind {self.kind!r}")
        if self.kind != BOSON and self.cutoff != 2:
            raise QsimError(f"{self.kind} sites have dimension 2")
        if self.cutoff < 2:
            raise QsimError("boson cutoff must be >= 2")

    @property
    def dim(self) -> int:
        return self.cutoff

    def label(self) -> str:
        return f"boson({self.cutoff})" if self.kind == BOSON else self.kind


def boson(cutoff: int) -> Site:
    return Site(BOSON, cutoff)


@dataclass(frozen=True)
class SiteRegister:
    sites: tuple[Site, ...]

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))

    def __len__(self) -> int:
        return len(self.sites)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self.sites)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.sites else 1

    def check_dim(self, cap: int | None = None) -> int:
        cap = DEFAULT_DIM_CAP if cap is None else cap
        d = self.dim
        if d > cap:
            raise DimensionCapError(f"Hilbert dimension {d} exceeds cap {cap}")
        return d

    @classmethod
    def of(cls, *kinds: str | Site) -> SiteRegister:
        return cls(tuple(k if isinstance(k, Site) else Site(k) for k in kinds))


def primitive_matrix(op: str, site: Site) -> np.ndarray:
    """Local matrix of a primitive operator on one site (no parity string)."""
    if op not in COMPATIBLE[site.kind]:
        raise IncompatibleOperatorError(
            f"operator {op} incompatible with site kind {site.label()}")
    d = site.dim
    if op in _PAULI:
        return _PAULI[op].copy() if op != "I" else np.eye(d, dtype=complex)
    if op == "Sp":
        return (_PAULI["X"] + 1j * _PAULI["Y"]) / 2
    if op == "Sm":
        return (_PAULI["X"] - 1j * _PAULI["Y"]) / 2
    n = np.arange(d)
    if op == "N":
        return np.diag(n).astype(complex)
    if op == "N2":
        return np.diag(n * (n - 1)).astype(complex)
    lower = np.diag(np.sqrt(n[1:]), k=1).astype(complex)
    return lower.conj().T if op == "Cr" else lower


def _is_odd(op: str, site: Site) -> bool:
    return site.kind == FERMION and op in ("Cr", "An")


# ---------------------------------------------------------------------------
# Coefficients: sums of (complex scalar x product of real symbols)
# ---------------------------------------------------------------------------

Monomial = tuple[str, ...]


@dataclass(frozen=True)
class Coefficient:
    """Polynomial coefficient ``sum_k c_k * prod(symbols_k)`` with real symbols.

    Monomials keep first-insertion order; zero monomials are dropped.
    """

    parts: tuple[tuple[Monomial, complex], ...] = ()

    @classmethod
    def const(cls, value: complex) -> Coefficient:
        return cls.monomial(value, ())

    @classmethod
    def monomial(cls, value: complex, symbols: Iterable[str]) -> Coefficient:
        value = complex(value)
        if value == 0:
            return cls()
        return cls(((tuple(sorted(symbols)), value),))

    @classmethod
    def coerce(cls, value) -> Coefficient:
        if isinstance(value, Coefficient):
            return value
        if isinstance(value, str):
            return cls.monomial(1.0, (value,))
        return cls.const(value)

    def __add__(self, other) -> Coefficient:
        other = Coefficient.coerce(other)
        acc = dict(self.parts)
        for mono, val in other.parts:
            acc[mono] = acc.get(mono, 0) + val
        return Coefficient(tuple((m, v) for m, v in acc.items() if v != 0))

    def __mul__(self, other) -> Coefficient:
        other = Coefficient.coerce(other)
        out = Coefficient()
        for m1, v1 in self.parts:
            for m2, v2 in other.parts:
                out = out + Coefficient.monomial(v1 * v2, m1 + m2)
        return out

    __rmul__ = __mul__
    __radd__ = __add__

    def __neg__(self) -> Coefficient:
        return self * -1

    def conj(self) -> Coefficient:
        return Coefficient(tuple((m, v.conjugate()) for m, v in self.parts))

    @property
    def symbols(self) -> frozenset[str]:
        return frozenset(s for m, _ in self.parts for s in m)

    @property
    def is_numeric(self) -> bool:
        return all(not m for m, _ in self.parts)

    @property
    def is_zero(self) -> bool:
        return not self.parts

    def bind(self, bindings: Mapping[str, float]) -> Coefficient:
        out = Coefficient()
        for mono, val in self.parts:
            rest = []
            for s in mono:
                if s in bindings:
                    val = val * bindings[s]
                else:
                    rest.append(s)
            out = out + Coefficient.monomial(val, rest)
        return out

    def value(self) -> complex:
        if not self.is_numeric:
            raise UnboundParameterError(self.symbols)
        return sum((v for _, v in self.parts), 0j)


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

Factor = tuple[int, str]


def parse_factors(text: str) -> tuple[Factor, ...]:
    """``"X@0 Z@1"`` -> ``((0, "X"), (1, "Z"))`` (written order kept)."""
    out = []
    for tok in text.split():
        op, _, idx = tok.partition("@")
        out.append((int(idx), op))
    return tuple(out)


def canonical_factors(factors: Iterable[Factor], register: SiteRegister | None = None
                      ) -> tuple[int, tuple[Factor, ...]]:
    """Sort factors by site index, returning ``(sign, factors)``.

    Exchanging two fermion-odd factors contributes -1.  Identity factors are
    dropped unless nothing else remains, in which case the term is ``I@0``.
    """
    facs = list(factors)
    if not facs:
        raise QsimError("a term needs at least one factor")
    for _, op in facs:
        if op not in OPS:
            raise QsimError(f"unknown operator {op!r}")

    def odd(f):
        return register is not None and 0 <= f[0] < len(register) and _is_odd(f[1], register.sites[f[0]])

    sign = 1
    # insertion sort tracking fermionic exchanges
    for i in range(1, len(facs)):
        j = i
        while j > 0 and facs[j - 1][0] > facs[j][0]:
            if odd(facs[j - 1]) and odd(facs[j]):
                sign = -sign
            facs[j - 1], facs[j] = facs[j], facs[j - 1]
            j -= 1
    idx = [f[0] for f in facs]
    if len(set(idx)) != len(idx):
        dup = sorted({i for i in idx if idx.count(i) > 1})
        raise QsimError(f"repeated site {dup[0]} in term")
    kept = tuple(f for f in facs if f[1] != "I")
    return sign, kept or ((0, "I"),)


@dataclass(frozen=True)
class OperatorTerm:
    coefficient: Coefficient
    factors: tuple[Factor, ...]

    @classmethod
    def make(cls, coefficient, factors: str | Iterable[Factor]) -> OperatorTerm:
        if isinstance(factors, str):
            factors = parse_factors(factors)
        return cls(Coefficient.coerce(coefficient), tuple(factors))

    @property
    def locality(self) -> int:
        return len(self.factors)

    @property
    def sites(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.factors)

    def label(self) -> str:
        return " ".join(f"{op}@{i}" for i, op in self.factors)


def dagger_factors(factors: tuple[Factor, ...], register: SiteRegister
                   ) -> tuple[int, tuple[Factor, ...]]:
    rev = [(i, _DAGGER[op]) for i, op in reversed(factors)]
    return canonical_factors(rev, register)


def dagger(term: OperatorTerm, register: SiteRegister) -> OperatorTerm:
    sign, facs = dagger_factors(term.factors, register)
    return OperatorTerm(term.coefficient.conj() * sign, facs)


def check_term(term: OperatorTerm, register: SiteRegister) -> None:
    for i, op in term.factors:
        if not 0 <= i < len(register):
            raise QsimError(f"undeclared site {i}")
        if op not in COMPATIBLE[register.sites[i].kind]:
            raise IncompatibleOperatorError(
                f"operator incompatible with site kind: {op} on {register.sites[i].label()} site {i}")


# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Parameter:
    name: str
    default: float | None = None


@dataclass(frozen=True)
class Hamiltonian:
    """Canonical weighted sum of terms; build instances with :meth:`build`."""

    register: SiteRegister
    terms: tuple[OperatorTerm, ...] = ()
    parameters: tuple[Parameter, ...] = field(default=())

    @classmethod
    def build(cls, register: SiteRegister, terms: Iterable[OperatorTerm],
              parameters: Iterable[Parameter | str] = ()) -> Hamiltonian:
        params = tuple(p if isinstance(p, Parameter) else Parameter(p) for p in parameters)
        declared = {p.name for p in params}
        if len(declared) != len(params):
            raise QsimError("duplicate parameter declaration")
        merged: dict[tuple[Factor, ...], Coefficient] = {}
        for t in terms:
            sign, facs = canonical_factors(t.factors, register)
            t = OperatorTerm(t.coefficient * sign, facs)
            check_term(t, register)
            missing = t.coefficient.symbols - declared
            if missing:
                raise QsimError(f"undeclared parameter(s): {', '.join(sorted(missing))}")
            merged[facs] = merged.get(facs, Coefficient()) + t.coefficient
        out = tuple(OperatorTerm(c, f) for f, c in merged.items() if not c.is_zero)
        return cls(register, out, params)

    @property
    def parameter_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.parameters)

    def defaults(self) -> dict[str, float]:
        return {p.name: p.default for p in self.parameters if p.default is not None}

    def __add__(self, other: Hamiltonian) -> Hamiltonian:
        if other.register != self.register:
            raise QsimError("cannot add Hamiltonians on different registers")
        params = list(self.parameters)
        names = set(self.parameter_names)
        params += [p for p in other.parameters if p.name not in names]
        return Hamiltonian.build(self.register, self.terms + other.terms, params)


def canonicalize(H: Hamiltonian) -> Hamiltonian:
    return Hamiltonian.build(H.register, H.terms, H.parameters)


def bind_parameters(H: Hamiltonian, bindings: Mapping[str, float]) -> Hamiltonian:
    """Substitute numeric values for some of ``H``'s symbols.

    Raises:
        QsimError: a binding names a symbol that ``H`` does not declare.
    """
    declared = set(H.parameter_names)
    unknown = set(bindings) - declared
    if unknown:
        raise QsimError(
            f"unknown parameter(s) {', '.join(sorted(unknown))}; "
            f"declared: {', '.join(H.parameter_names) or '(none)'}")
    terms = [OperatorTerm(t.coefficient.bind(bindings), t.factors) for t in H.terms]
    params = [p for p in H.parameters if p.name not in bindings]
    return Hamiltonian.build(H.register, terms, params)


def resolve_bindings(H: Hamiltonian, bindings: Mapping[str, float] | None) -> dict[str, float]:
    """Declared defaults overlaid with ``bindings``."""
    values = H.defaults()
    values.update(bindings or {})
    return values


def term_matrix(register: SiteRegister, term: OperatorTerm,
                bindings: Mapping[str, float] | None = None,
                dim_cap: int | None = None) -> np.ndarray:
    """Dense matrix of ``coefficient * prod(factors)`` on the full register."""
    register.check_dim(dim_cap)
    check_term(term, register)
    coef = term.coefficient.bind(bindings or {}).value()
    local = [np.eye(s.dim, dtype=complex) for s in register.sites]
    fermions = [k for k, s in enumerate(register.sites) if s.kind == FERMION]
    for i, op in term.factors:
        site = register.sites[i]
        if _is_odd(op, site):
            for k in fermions:
                if k < i:
                    local[k] = local[k] @ _PAULI["Z"]
        local[i] = local[i] @ primitive_matrix(op, site)
    out = np.array([[coef]], dtype=complex)
    for m in local:
        out = np.kron(out, m)
    return out


def hamiltonian_matrix(H: Hamiltonian, bindings: Mapping[str, float] | None = None,
                       dim_cap: int | None = None) -> np.ndarray:
    """Dense matrix of ``H`` with ``bindings`` layered over declared defaults."""
    dim = H.register.check_dim(dim_cap)
    values = resolve_bindings(H, bindings)
    unbound = set()
    for t in H.terms:
        unbound |= t.coefficient.bind(values).symbols
    if unbound:
        raise UnboundParameterError(unbound)
    out = np.zeros((dim, dim), dtype=complex)
    for t in H.terms:
        out += term_matrix(H.register, t, values, dim_cap)
    return out


def terms_commute(register: SiteRegister, a: OperatorTerm, b: OperatorTerm,
                  dim_cap: int | None = None) -> bool:
    A = term_matrix(register, a, dim_cap=dim_cap)
    B = term_matrix(register, b, dim_cap=dim_cap)
    return bool(np.max(np.abs(A @ B - B @ A), initial=0.0) < 1e-12)


class HermiticityReport(NamedTuple):
    passed: bool
    deviation: float


def hermiticity_check(H: Hamiltonian, bindings: Mapping[str, float] | None = None,
                      tol: float = 1e-10, dim_cap: int | None = None) -> HermiticityReport:
    M = hamiltonian_matrix(H, bindings, dim_cap)
    dev = float(np.max(np.abs(M - M.conj().T), initial=0.0))
    return HermiticityReport(dev < tol, dev)
