"""Digital back end: Pauli-sum Hamiltonians to gate circuits.

Gate set is {H, S, Sdg, RZ, CNOT} with ``RZ(phi) = diag(e^{-i phi/2}, e^{i phi/2})``
so that ``exp(-i theta Z) = RZ(2 theta)``.  Qubit 0 is the most significant
Kronecker factor.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .encodings import PauliString, QubitHamiltonian
from .errors import DimensionCapError, QsimError

MAX_UNITARY_QUBITS = 12

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.diag([1, 1j])
_SDG = np.diag([1, -1j])
_FIXED = {"H": _H, "S": _S, "Sdg": _SDG}


@dataclass(frozen=True)
class Gate:
    kind: str  # H | S | Sdg | RZ | CNOT
    qubits: tuple[int, ...]
    angle: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        arity = 2 if self.kind == "CNOT" else 1
        if self.kind not in ("H", "S", "Sdg", "RZ", "CNOT"):
            raise QsimError(f"unknown gate {self.kind}")
        if len(self.qubits) != arity:
            raise QsimError(f"{self.kind} takes {arity} qubit(s)")
        if arity == 2 and self.qubits[0] == self.qubits[1]:
            raise QsimError("CNOT control and target must differ")

    def matrix(self) -> np.ndarray:
        if self.kind == "RZ":
            return np.diag([np.exp(-0.5j * self.angle), np.exp(0.5j * self.angle)])
        if self.kind == "CNOT":
            return np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
        return _FIXED[self.kind]


def h(q): return Gate("H", (q,))
def s(q): return Gate("S", (q,))
def sdg(q): return Gate("Sdg", (q,))
def rz(q, angle): return Gate("RZ", (q,), float(angle))
def cnot(c, t): return Gate("CNOT", (c, t))


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    global_phase: float = 0.0  # circuit unitary = e^{i global_phase} * product of gates

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if any(not 0 <= q < self.n_qubits for q in g.qubits):
                raise QsimError(f"gate {g.kind} on qubits {g.qubits} outside {self.n_qubits}-qubit circuit")

    def __len__(self) -> int:
        return len(self.gates)


@dataclass(frozen=True)
class TrotterPlan:
    t: float
    n: int = 1
    order: int = 1
    term_order: tuple[int, ...] | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise QsimError(f"Trotter step count must be >= 1, got {self.n}")
        if self.order not in (1, 2):
            raise QsimError("Trotter order must be 1 or 2")
        if self.term_order is not None:
            object.__setattr__(self, "term_order", tuple(self.term_order))


def pauli_rotation_circuit(P: PauliString, theta: float) -> list[Gate]:
    """Gates implementing ``exp(-i theta P)`` exactly.

    Basis change to Z on each support qubit, a CNOT parity ladder onto the last
    support qubit, ``RZ(2 theta)``, then the mirror image.
    """
    if P.phase != 1:
        raise QsimError("Pauli rotation needs a string with phase +1")
    support = P.support
    if not support:
        raise QsimError("identity string contributes only a global phase")
    pre: list[Gate] = []
    post: list[Gate] = []
    for q in support:
        c = P.letters[q]
        if c == "X":
            pre.append(h(q))
            post.append(h(q))
        elif c == "Y":
            pre += [sdg(q), h(q)]
            post += [h(q), s(q)]
    ladder = [cnot(a, b) for a, b in zip(support, support[1:])]
    return pre + ladder + [rz(support[-1], 2 * theta)] + ladder[::-1] + post


def trotterize(Hq: QubitHamiltonian, plan: TrotterPlan) -> Circuit:
    """Compile ``exp(-i Hq t)`` into ``n`` product-formula slices.

    Order 1 applies each term's rotation with angle ``w_j t / n`` in
    ``plan.term_order``.  Order 2 is the symmetric split with half steps at both
    ends of each slice (the two middle half steps are fused).  Identity strings
    only contribute to the recorded global phase.
    """
    if len(Hq) == 0:
        raise QsimError("cannot Trotterize an empty Hamiltonian")
    order = plan.term_order if plan.term_order is not None else tuple(range(len(Hq)))
    if sorted(order) != list(range(len(Hq))):
        raise QsimError("term order must be a permutation of term indices")
    dt = plan.t / plan.n
    phase = 0.0
    active = []
    for j in order:
        letters, w = Hq.terms[j]
        P = PauliString(letters)
        if P.is_identity:
            phase -= w * plan.t
        else:
            active.append((P, w))
    slice_gates: list[Gate] = []
    if plan.order == 1 or len(active) < 2:
        for P, w in active:
            slice_gates += pauli_rotation_circuit(P, w * dt)
    else:
        for P, w in active[:-1]:
            slice_gates += pauli_rotation_circuit(P, w * dt / 2)
        P, w = active[-1]
        slice_gates += pauli_rotation_circuit(P, w * dt)
        for P, w in reversed(active[:-1]):
            slice_gates += pauli_rotation_circuit(P, w * dt / 2)
    return Circuit(Hq.n_qubits, tuple(slice_gates) * plan.n, phase)


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


def _apply_gate(block: np.ndarray, g: Gate, n: int) -> np.ndarray:
    """Apply ``g`` to ``block`` of shape (2**n, batch)."""
    batch = block.shape[1]
    if g.kind == "CNOT":
        c, t = g.qubits
        view = block.reshape((2,) * n + (batch,))
        idx = [slice(None)] * (n + 1)
        idx[c] = 1
        sub = view[tuple(idx)]
        axis = t - 1 if t > c else t
        view[tuple(idx)] = np.flip(sub, axis=axis).copy()
        return block
    q = g.qubits[0]
    view = block.reshape(2 ** q, 2, -1)
    if g.kind == "RZ":
        view[:, 0, :] *= np.exp(-0.5j * g.angle)
        view[:, 1, :] *= np.exp(0.5j * g.angle)
        return block
    m = _FIXED[g.kind]
    a0 = view[:, 0, :].copy()
    a1 = view[:, 1, :]
    view[:, 0, :] = m[0, 0] * a0 + m[0, 1] * a1
    view[:, 1, :] = m[1, 0] * a0 + m[1, 1] * a1
    return block


def apply_circuit(c: Circuit, psi: np.ndarray) -> np.ndarray:
    """Return ``U(c) @ psi`` for a state vector or a (dim, batch) block."""
    psi = np.array(psi, dtype=complex, copy=True)
    vec = psi.ndim == 1
    block = psi.reshape(-1, 1) if vec else psi
    if block.shape[0] != 2 ** c.n_qubits:
        raise QsimError("state dimension does not match circuit width")
    block = np.ascontiguousarray(block)
    for g in c.gates:
        block = _apply_gate(block, g, c.n_qubits)
    block *= np.exp(1j * c.global_phase)
    return block.ravel() if vec else block


def circuit_unitary(c: Circuit) -> np.ndarray:
    if c.n_qubits > MAX_UNITARY_QUBITS:
        raise DimensionCapError(f"{c.n_qubits} qubits exceeds the {MAX_UNITARY_QUBITS}-qubit unitary cap")
    return apply_circuit(c, np.eye(2 ** c.n_qubits, dtype=complex))


# ---------------------------------------------------------------------------
# text export
# ---------------------------------------------------------------------------

_QASM_NAMES = {"H": "h", "S": "s", "Sdg": "sdg", "RZ": "rz", "CNOT": "cx"}


def _angle(x: float) -> str:
    return format(float(x), ".17g")


def export_circuit(c: Circuit) -> str:
    lines = ["OPENQASM 3.0;", f"qubit[{c.n_qubits}] q;"]
    if c.global_phase != 0:
        lines.append(f"gphase({_angle(c.global_phase)});")
    for g in c.gates:
        name = _QASM_NAMES[g.kind]
        args = ", ".join(f"q[{q}]" for q in g.qubits)
        lines.append(f"{name}({_angle(g.angle)}) {args};" if g.kind == "RZ" else f"{name} {args};")
    return "\n".join(lines) + "\n"


_GATE_LINE = re.compile(r"^(h|s|sdg|rz|cx)(?:\(([^)]*)\))?\s+(q\[\d+\](?:\s*,\s*q\[\d+\])?)\s*;$")


def import_circuit(text: str) -> Circuit:
    """Parse the subset written by :func:`export_circuit`."""
    lines = [ln.strip() for ln in text.split("\n") if ln.strip() and not ln.strip().startswith("//")]
    if not lines or lines[0] != "OPENQASM 3.0;":
        raise QsimError("missing 'OPENQASM 3.0;' header")
    m = re.match(r"^qubit\[(\d+)\]\s+q;$", lines[1] if len(lines) > 1 else "")
    if not m:
        raise QsimError("missing qubit register declaration")
    n = int(m.group(1))
    phase = 0.0
    gates = []
    inverse = {v: k for k, v in _QASM_NAMES.items()}
    for ln in lines[2:]:
        gm = re.match(r"^gphase\(([^)]*)\);$", ln)
        if gm:
            phase += float(gm.group(1))
            continue
        gm = _GATE_LINE.match(ln)
        if not gm:
            raise QsimError(f"unsupported statement: {ln}")
        qubits = tuple(int(x) for x in re.findall(r"q\[(\d+)\]", gm.group(3)))
        kind = inverse[gm.group(1)]
        angle = float(gm.group(2)) if gm.group(2) is not None else 0.0
        gates.append(Gate(kind, qubits, angle))
    return Circuit(n, tuple(gates), phase)


# ---------------------------------------------------------------------------
# resources
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResourceCount:
    total: int = 0
    two_qubit: int = 0
    rz: int = 0
    depth: int = 0

    def as_dict(self) -> dict[str, int]:
        return {"total": self.total, "two_qubit": self.two_qubit, "rz": self.rz, "depth": self.depth}


def resource_count(c: Circuit) -> ResourceCount:
    level = [0] * c.n_qubits
    two = rzs = 0
    for g in c.gates:
        layer = max(level[q] for q in g.qubits) + 1
        for q in g.qubits:
            level[q] = layer
        two += len(g.qubits) == 2
        rzs += g.kind == "RZ"
    return ResourceCount(len(c.gates), two, rzs, max(level, default=0))
