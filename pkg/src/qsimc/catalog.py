"""Generators for the bundled ``.hml`` models.

The lattice gauge model is a staggered-fermion quantum-link chain with ``L``
matter sites on even register indices and spin-1/2 links on odd indices::

    H = w   * sum_l (Cr@2l Sp@2l+1 An@2l+2 + h.c.)
      + m   * sum_l (-1)^l N@2l
      + kappa * sum_l G_l^2

    G_l = N@2l + (Z@2l-1 - Z@2l+1)/2 + c_l,      c_l = ((-1)^l - 1)/2

Links missing at the chain ends are dropped from ``G_l``.  The minus sign on
the right link makes every ``G_l`` commute with the hopping term: hopping
across link ``(l, l+1)`` raises ``n_l`` and the link's ``S^z`` together.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .model import Model, format_number, load_model, parse_model

BUNDLED = ("schwinger.hml", "bose_hubbard.hml")


def _coef(value: float, *symbols: str) -> str:
    return "*".join([format_number(value), *symbols])


def gauss_terms(L: int, l: int) -> list[tuple[float, list[tuple[str, int]]]]:
    """``G_l`` as ``[(coefficient, [(op, site), ...]), ...]``."""
    out = [(1.0, [("N", 2 * l)])]
    if l > 0:
        out.append((0.5, [("Z", 2 * l - 1)]))
    if l < L - 1:
        out.append((-0.5, [("Z", 2 * l + 1)]))
    c = ((-1) ** l - 1) / 2
    if c:
        out.append((c, [("I", 0)]))
    return out


def gauss_squared(L: int, l: int) -> dict[tuple[tuple[str, int], ...], float]:
    """Expand ``G_l^2`` using ``N^2 = N`` (fermion) and ``Z^2 = I``."""
    terms = gauss_terms(L, l)
    acc: dict[tuple[tuple[str, int], ...], float] = {}
    for c1, f1 in terms:
        for c2, f2 in terms:
            ops: dict[int, str] = {}
            for op, site in f1 + f2:
                if op == "I":
                    continue
                if site in ops:
                    # same-site product of N with N, or Z with Z
                    ops[site] = "N" if op == "N" else "I"
                else:
                    ops[site] = op
            key = tuple((ops[s], s) for s in sorted(ops) if ops[s] != "I") or (("I", 0),)
            acc[key] = acc.get(key, 0.0) + c1 * c2
    return {k: v for k, v in acc.items() if v != 0}


def schwinger_source(L: int = 4, m: float = 1.0, kappa: float = 5.0, w: float = 1.0) -> str:
    if L < 1:
        raise ValueError("need at least one matter site")
    n = 2 * L - 1
    lines = [f"# quantum-link lattice gauge chain, {L} matter sites",
             f"model schwinger_L{L}",
             f"param m = {format_number(m)}",
             f"param kappa = {format_number(kappa)}",
             f"param w = {format_number(w)}"]
    for s in range(n):
        lines.append(f"site {s} {'fermion' if s % 2 == 0 else 'spin'}")
    lines.append("hermitize")
    for l in range(L):
        body = " ; ".join(
            f"{format_number(c)} : " + " ".join(f"{op}@{s}" for op, s in facs)
            for c, facs in gauss_terms(L, l))
        lines.append(f'meta gauss "G:{l} = {body}"')
    # staggered vacuum (odd matter sites filled) with links alternating |1>,|0>,...
    # so that every bond can hop in one direction
    init = "".join(str((s // 2) % 2) if s % 2 == 0 else str(1 - (s // 2) % 2) for s in range(n))
    lines.append(f'meta init "{init}"')
    lines.append("# hopping (conjugates added by hermitize)")
    for l in range(L - 1):
        lines.append(f"term w : Cr@{2 * l} Sp@{2 * l + 1} An@{2 * l + 2}")
    lines.append("# staggered mass")
    for l in range(L):
        lines.append(f"term {_coef((-1.0) ** l, 'm')} : N@{2 * l}")
    lines.append("# Gauss-law penalty kappa * G_l^2")
    for l in range(L):
        for key, val in gauss_squared(L, l).items():
            lines.append(f"term {_coef(val, 'kappa')} : " + " ".join(f"{op}@{s}" for op, s in key))
    return "\n".join(lines) + "\n"


def bose_hubbard_source(L: int = 3, cutoff: int = 3, J: float = 1.0, U: float = 4.0) -> str:
    lines = ["# Bose-Hubbard chain: -J hopping, (U/2) n(n-1), site offsets eps_j",
             f"model bose_hubbard_L{L}",
             f"param J = {format_number(J)}",
             f"param U = {format_number(U)}"]
    for j in range(L):
        lines.append(f"param eps{j} = 0")
    for j in range(L):
        lines.append(f"site {j} boson({cutoff})")
    for j in range(L - 1):
        lines.append(f"term -1*J : Cr@{j} An@{j + 1}")
        lines.append(f"term -1*J : An@{j} Cr@{j + 1}")
    for j in range(L):
        lines.append(f"term 0.5*U : N2@{j}")
    for j in range(L):
        lines.append(f"term eps{j} : N@{j}")
    return "\n".join(lines) + "\n"


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("qsimc") / "data" / name))


def load_bundled(name: str) -> Model:
    return load_model(bundled_path(name))


def schwinger_model(L: int = 4, **params: float) -> Model:
    model, diags = parse_model(schwinger_source(L, **params))
    assert model is not None, diags
    return model
