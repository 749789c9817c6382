"""Line-oriented ``.hml`` model language.

Grammar::

    file   := "model" IDENT NL (stmt NL)*
    stmt   := param | site | term | "hermitize" | meta
    param  := "param" IDENT ["=" FLOAT]
    site   := "site" INT KIND          KIND := qubit | fermion | spin | boson(INT)
    term   := "term" COEFF ":" factor+ factor := OPTOK "@" INT
    meta   := "meta" IDENT STRING

``COEFF`` is a ``*``-separated product of floats, complex literals such as
``1+0i``, parameter names and the imaginary unit ``i``.  ``#`` starts a comment.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import QsimError
from .operators import (
    BOSON,
    COMPATIBLE,
    OPS,
    Coefficient,
    Hamiltonian,
    OperatorTerm,
    Parameter,
    Site,
    SiteRegister,
    canonical_factors,
    check_term,
    dagger_factors,
    term_matrix,
)

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_FLOAT = r"(?:\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
_IDENT_RE = re.compile(rf"^{_IDENT}$")
_FLOAT_RE = re.compile(rf"^[+-]?{_FLOAT}$")
_COMPLEX_RE = re.compile(rf"^([+-]?{_FLOAT})([+-]{_FLOAT})i$")
_INT_RE = re.compile(r"^\d+$")
_FACTOR_RE = re.compile(r"^([A-Za-z0-9]+)@(\d+)$")
_KIND_RE = re.compile(r"^boson\((\d+)\)$")
_META_RE = re.compile(rf'^meta\s+({_IDENT})\s+"([^"]*)"\s*$')

OPTOKENS = frozenset(OPS)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    line: int
    message: str
    token: str = ""
    column: int | None = None

    def format(self, filename: str = "<model>") -> str:
        col = f":{self.column}" if self.column else ""
        tok = f" [{self.token}]" if self.token else ""
        return f"{filename}:{self.line}{col}: {self.severity}: {self.message}{tok}"


@dataclass(frozen=True)
class Model:
    name: str
    register: SiteRegister
    hamiltonian: Hamiltonian
    metadata: tuple[tuple[str, str], ...] = ()
    hermitize: bool = False

    def meta(self, key: str) -> list[str]:
        return [v for k, v in self.metadata if k == key]


class ModelError(QsimError):
    def __init__(self, diagnostics: list[Diagnostic], filename: str = "<model>"):
        self.diagnostics = diagnostics
        self.filename = filename
        super().__init__("\n".join(d.format(filename) for d in diagnostics))


def _strip_comment(line: str) -> str:
    quoted = False
    for k, ch in enumerate(line):
        if ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            return line[:k]
    return line


def parse_coefficient(text: str) -> Coefficient:
    """Parse ``COEFF``; raises ``ValueError`` naming the offending piece."""
    text = text.replace(" ", "").replace("\t", "")
    if not text:
        raise ValueError("empty coefficient")
    value = 1 + 0j
    symbols: list[str] = []
    for part in text.split("*"):
        if not part:
            raise ValueError("empty factor")
        sign = 1
        body = part
        m = _COMPLEX_RE.match(part)
        if m:
            value *= complex(float(m.group(1)), float(m.group(2)))
            continue
        if _FLOAT_RE.match(part):
            value *= float(part)
            continue
        if body[:1] in "+-":
            sign = -1 if body[0] == "-" else 1
            body = body[1:]
        if body == "i":
            value *= 1j * sign
        elif _IDENT_RE.match(body):
            value *= sign
            symbols.append(body)
        else:
            raise ValueError(f"unexpected {part!r}")
    return Coefficient.monomial(value, symbols)


def _parse_float(text: str) -> float:
    if not _FLOAT_RE.match(text):
        raise ValueError(text)
    return float(text)


def _parse_factor_list(text: str):
    factors = []
    for tok in text.split():
        m = _FACTOR_RE.match(tok)
        if not m or m.group(1) not in OPTOKENS:
            raise ValueError(tok)
        factors.append((int(m.group(2)), m.group(1)))
    if not factors:
        raise ValueError("")
    return tuple(factors)


def parse_model(source: str) -> tuple[Model | None, list[Diagnostic]]:
    """Parse ``.hml`` text.

    Parsing is total: every problem becomes a :class:`Diagnostic` and the model
    is ``None`` whenever at least one error was reported.
    """
    lines = source.split("\n")
    diags: list[Diagnostic] = []

    def err(lineno, msg, token="", line_text=""):
        col = line_text.find(token) + 1 if token and token in line_text else None
        diags.append(Diagnostic("error", lineno, msg, token, col))

    name = None
    params: list[tuple[int, Parameter]] = []
    sites: dict[int, tuple[int, Site]] = {}
    raw_terms: list[tuple[int, Coefficient, tuple, str]] = []
    metadata: list[tuple[str, str]] = []
    hermitize = False

    for lineno, raw in enumerate(lines, start=1):
        line = _strip_comment(raw.rstrip("\r")).strip()
        if not line:
            continue
        head = line.split()[0]
        if name is None:
            parts = line.split()
            if head == "model" and len(parts) == 2 and _IDENT_RE.match(parts[1]):
                name = parts[1]
            else:
                err(lineno, "expected 'model IDENT' header", head, raw)
                name = ""  # report once, keep scanning statements
            continue
        if head == "model":
            err(lineno, "duplicate model header", head, raw)
        elif head == "param":
            m = re.match(rf"^param\s+(\S+?)\s*(?:=\s*(\S+))?\s*$", line)
            if not m or not _IDENT_RE.match(m.group(1)):
                err(lineno, "malformed param declaration", line.split()[1] if len(line.split()) > 1 else head, raw)
                continue
            default = None
            if m.group(2) is not None:
                try:
                    default = _parse_float(m.group(2))
                except ValueError:
                    err(lineno, "bad parameter default", m.group(2), raw)
                    continue
            if any(p.name == m.group(1) for _, p in params):
                err(lineno, f"duplicate parameter {m.group(1)}", m.group(1), raw)
                continue
            params.append((lineno, Parameter(m.group(1), default)))
        elif head == "site":
            parts = line.split()
            if len(parts) != 3 or not _INT_RE.match(parts[1]):
                err(lineno, "malformed site declaration", parts[1] if len(parts) > 1 else head, raw)
                continue
            kind = parts[2]
            km = _KIND_RE.match(kind)
            try:
                site = Site(BOSON, int(km.group(1))) if km else Site(kind)
                if not km and kind == BOSON:
                    raise QsimError(kind)
            except QsimError:
                err(lineno, f"unknown site kind {kind}", kind, raw)
                continue
            idx = int(parts[1])
            if idx in sites:
                err(lineno, f"duplicate site index {idx}", parts[1], raw)
                continue
            sites[idx] = (lineno, site)
        elif head == "term":
            body = line[len("term"):]
            if ":" not in body:
                err(lineno, "expected ':' in term", head, raw)
                continue
            ctext, _, ftext = body.partition(":")
            try:
                coef = parse_coefficient(ctext)
            except ValueError as exc:
                err(lineno, f"bad coefficient: {exc}", ctext.strip(), raw)
                continue
            try:
                factors = _parse_factor_list(ftext)
            except ValueError as exc:
                err(lineno, "bad factor" if str(exc) else "term needs at least one factor", str(exc), raw)
                continue
            raw_terms.append((lineno, coef, factors, raw))
        elif head == "hermitize":
            if line != "hermitize":
                err(lineno, "unexpected tokens after hermitize", line.split()[-1], raw)
            hermitize = True
        elif head == "meta":
            m = _META_RE.match(line)
            if not m:
                err(lineno, "malformed meta statement", head, raw)
                continue
            metadata.append((m.group(1), m.group(2)))
        else:
            err(lineno, f"unknown statement {head!r}", head, raw)

    if name is None:
        err(1, "expected 'model IDENT' header")
        return None, diags

    n_sites = max(sites) + 1 if sites else 0
    for idx in range(n_sites):
        if idx not in sites:
            lineno = min(ln for i, (ln, _) in sites.items() if i > idx)
            err(lineno, f"sites must be numbered contiguously from 0: missing site {idx}")
            break
    register = SiteRegister(tuple(sites[i][1] for i in sorted(sites)))
    declared = {p.name for _, p in params}

    terms = []
    for lineno, coef, factors, raw in raw_terms:
        bad = False
        for idx, op in factors:
            if idx not in sites:
                err(lineno, f"undeclared site {idx}", f"{op}@{idx}", raw)
                bad = True
            elif op not in COMPATIBLE[sites[idx][1].kind]:
                err(lineno, f"operator incompatible with site kind: {op} on {sites[idx][1].label()}",
                    f"{op}@{idx}", raw)
                bad = True
        for sym in sorted(coef.symbols - declared):
            err(lineno, f"undeclared parameter {sym}", sym, raw)
            bad = True
        if bad or any(d.severity == "error" and "contiguously" in d.message for d in diags):
            continue
        try:
            sign, facs = canonical_factors(factors, register)
        except QsimError as exc:
            err(lineno, str(exc), "", raw)
            continue
        terms.append(OperatorTerm(coef * sign, facs))

    if any(d.severity == "error" for d in diags):
        return None, diags

    if hermitize:
        present = {t.factors for t in terms}
        extra = []
        for t in terms:
            sign, dfacs = dagger_factors(t.factors, register)
            if dfacs != t.factors and dfacs not in present:
                extra.append(OperatorTerm(t.coefficient.conj() * sign, dfacs))
                present.add(dfacs)
        terms += extra

    H = Hamiltonian.build(register, terms, [p for _, p in params])
    model = Model(name, register, H, tuple(metadata), hermitize)
    return model, diags


def format_number(x: float) -> str:
    if x == 0:
        return "0"
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def format_complex(z: complex) -> str:
    im = z.imag
    sign = "-" if im < 0 else "+"
    return f"{format_number(z.real)}{sign}{format_number(abs(im))}i"


def print_model(m: Model) -> str:
    """Canonical, byte-stable text form of ``m``."""
    out = [f"model {m.name}"]
    for p in m.hamiltonian.parameters:
        out.append(f"param {p.name}" + ("" if p.default is None else f" = {format_number(p.default)}"))
    for i, s in enumerate(m.register.sites):
        out.append(f"site {i} {s.label()}")
    if m.hermitize:
        out.append("hermitize")
    for k, v in m.metadata:
        out.append(f'meta {k} "{v}"')
    for t in m.hamiltonian.terms:
        facs = " ".join(f"{op}@{i}" for i, op in t.factors)
        for mono, val in t.coefficient.parts:
            out.append(f"term {format_complex(val)}{''.join('*' + s for s in mono)} : {facs}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# metadata helpers
# ---------------------------------------------------------------------------


def parse_operator_sum(text: str, register: SiteRegister) -> list[OperatorTerm]:
    """``"1 : N@2 ; 0.5 : Z@1"`` -> terms (term grammar, ``;``-separated)."""
    terms = []
    for piece in text.split(";"):
        if not piece.strip():
            continue
        ctext, colon, ftext = piece.partition(":")
        if not colon:
            raise ValueError(f"expected ':' in {piece.strip()!r}")
        coef = parse_coefficient(ctext)
        t = OperatorTerm(coef, _parse_factor_list(ftext))
        sign, facs = canonical_factors(t.factors, register)
        t = OperatorTerm(coef * sign, facs)
        check_term(t, register)
        terms.append(t)
    if not terms:
        raise ValueError("empty operator sum")
    return terms


def gauss_operators(m: Model) -> list[tuple[int, Hamiltonian]]:
    """Gauss-law generators declared via ``meta gauss "G:<l> = ..."`` lines."""
    out = []
    for value in m.meta("gauss"):
        head, eq, body = value.partition("=")
        hm = re.match(r"^\s*G:(\d+)\s*$", head)
        if not eq or not hm:
            raise ValueError(f"malformed gauss metadata {value!r}")
        terms = parse_operator_sum(body, m.register)
        out.append((int(hm.group(1)), Hamiltonian.build(m.register, terms, m.hamiltonian.parameters)))
    return out


def initial_bits(m: Model) -> str:
    vals = m.meta("init")
    if not vals:
        return "0" * len(m.register)
    bits = vals[-1].strip()
    if len(bits) != len(m.register) or any(
            not c.isdigit() or int(c) >= s.dim for c, s in zip(bits, m.register.sites)):
        raise ValueError(f"init metadata {bits!r} does not match register")
    return bits


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def _hermiticity_deviation(m: Model, dim_cap: int | None) -> float:
    """Max deviation over each independent monomial after binding defaults."""
    H = m.hamiltonian
    defaults = H.defaults()
    reg = m.register
    groups: dict[tuple[str, ...], np.ndarray] = {}
    dim = reg.check_dim(dim_cap)
    for t in H.terms:
        coef = t.coefficient.bind(defaults)
        base = None
        for mono, val in coef.parts:
            if base is None:
                base = term_matrix(reg, OperatorTerm(Coefficient.const(1), t.factors), dim_cap=dim_cap)
            acc = groups.setdefault(mono, np.zeros((dim, dim), dtype=complex))
            acc += val * base
    dev = 0.0
    for M in groups.values():
        dev = max(dev, float(np.max(np.abs(M - M.conj().T), initial=0.0)))
    return dev


def validate(model: Model | str, dim_cap: int | None = None) -> list[Diagnostic]:
    """Diagnostics for a model (or ``.hml`` source); ``[]`` means clean."""
    if isinstance(model, str):
        model, diags = parse_model(model)
        if model is None:
            return diags
    else:
        diags = []
    diags = list(diags)
    try:
        gauss_operators(model)
    except (ValueError, QsimError) as exc:
        diags.append(Diagnostic("error", 1, f"bad gauss metadata: {exc}"))
    try:
        initial_bits(model)
    except ValueError as exc:
        diags.append(Diagnostic("error", 1, str(exc)))
    try:
        dev = _hermiticity_deviation(model, dim_cap)
    except QsimError as exc:
        diags.append(Diagnostic("warning", 1, f"Hermiticity not checked: {exc}"))
        return diags
    if not dev < 1e-10 or math.isnan(dev):
        severity = "error" if model.hermitize else "warning"
        diags.append(Diagnostic(severity, 1, f"non-Hermitian Hamiltonian (max deviation {dev:.3g})"))
    return diags


def load_model(path: str | Path) -> Model:
    """Parse a model file, raising :class:`ModelError` on any error diagnostic."""
    path = Path(path)
    model, diags = parse_model(path.read_text(encoding="utf-8", errors="replace"))
    errors = [d for d in diags if d.severity == "error"]
    if model is None or errors:
        raise ModelError(errors or diags, str(path))
    return model
