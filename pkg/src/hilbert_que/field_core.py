"""Totally real fields with narrow class number one.

A field is described by the real embeddings of an integral basis, a system
of fundamental units and a totally positive generator of the different.
Element arithmetic is exact (integer structure constants computed once from
the embeddings); everything analytic works on the embedding vectors.

Config grammar
--------------
UTF-8 text, one ``key = value`` per line.  A line starting with whitespace
continues the value of the previous key, ``#`` starts a comment and ``;`` may
be used as a row separator (it is treated like whitespace).  Keys:

    name                  short identifier (optional, defaults to file stem)
    degree                n, 1 <= n <= 4
    basis                 n*n reals, row-major; row j holds the j-th embedding
                          of every basis element
    units                 n-1 rows of n reals, embeddings of fundamental units
    omega                 n integers, coordinates of the different generator
    discriminant          positive integer D
    narrow_class_number   must be 1 if present
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

INT_TOL = 1e-6
ANALYTIC_TOL = 1e-10
MAX_DEGREE = 4


class InvalidField(ValueError):
    """Field data violates one of the structural invariants."""


class UnsupportedDegree(InvalidField):
    pass


class NonIntegralProduct(InvalidField):
    """An embedding vector does not re-expand to integer coordinates."""


class ConfigSyntaxError(InvalidField):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


# ---------------------------------------------------------------------------
# key/value parsing (shared with the QUE scan config)
# ---------------------------------------------------------------------------

_KEY_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_\-]*)\s*=\s*(.*)$")


def parse_keyvalue(text: str) -> dict[str, tuple[str, int]]:
    """Parse the key/value grammar into ``{key: (value, first_line)}``."""
    out: dict[str, tuple[str, int]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if raw[:1].isspace():
            if current is None:
                raise ConfigSyntaxError("continuation line without a key", lineno)
            val, start = out[current]
            out[current] = (val + " " + line.strip(), start)
            continue
        m = _KEY_RE.match(line)
        if not m:
            raise ConfigSyntaxError(f"expected 'key = value', got {line.strip()!r}", lineno)
        key = m.group(1).lower()
        if key in out:
            raise ConfigSyntaxError(f"duplicate key {key!r}", lineno)
        out[key] = (m.group(2).strip(), lineno)
        current = key
    return out


def _numbers(value: str, line: int, kind=float) -> list:
    toks = value.replace(";", " ").replace(",", " ").split()
    try:
        return [kind(t) for t in toks]
    except ValueError as exc:
        raise ConfigSyntaxError(f"bad number: {exc}", line) from None


# ---------------------------------------------------------------------------
# elements
# ---------------------------------------------------------------------------

class OElem:
    """Algebraic integer stored as integer coordinates over the basis."""

    __slots__ = ("field", "coords", "embeddings")

    def __init__(self, field: "FieldData", coords: Iterable[int]):
        c = tuple(int(v) for v in coords)
        if len(c) != field.degree:
            raise ValueError("coordinate vector has wrong length")
        self.field = field
        self.coords = c
        self.embeddings = field.basis @ np.asarray(c, dtype=float)

    def __eq__(self, other):
        return isinstance(other, OElem) and other.coords == self.coords and other.field is self.field

    def __hash__(self):
        return hash(self.coords)

    def __repr__(self):
        return f"OElem{self.coords}"

    def __add__(self, other: "OElem") -> "OElem":
        return OElem(self.field, (a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "OElem") -> "OElem":
        return OElem(self.field, (a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> "OElem":
        return OElem(self.field, (-a for a in self.coords))

    def __mul__(self, other: "OElem") -> "OElem":
        return mul(self, other)

    def is_zero(self) -> bool:
        return not any(self.coords)

    def is_totally_positive(self) -> bool:
        return bool(np.all(self.embeddings > 0))


@dataclass(frozen=True, eq=False)
class FieldData:
    name: str
    degree: int
    basis: np.ndarray               # basis[j, i] = a_i^{(j)}
    units: np.ndarray               # (n-1, n) embeddings of fundamental units
    e_matrix: np.ndarray            # e[j, q]; last column 1/n
    regulator: float
    discriminant: int
    omega_coords: tuple
    conductor: int | None = dc_field(default=None, kw_only=True)
    basis_inv: np.ndarray = dc_field(repr=False)
    structure: np.ndarray = dc_field(repr=False)   # a_i a_k = sum_l T[i,k,l] a_l
    unit_coords: np.ndarray = dc_field(repr=False)
    tp_unit_coords: np.ndarray = dc_field(repr=False)  # squares of fundamental units

    @property
    def omega(self) -> OElem:
        return OElem(self, self.omega_coords)

    @property
    def tp_units(self) -> np.ndarray:
        """Embeddings of the totally positive generators (squared units)."""
        return self.units ** 2

    @property
    def log_units(self) -> np.ndarray:
        return np.log(np.abs(self.units))

    def elem(self, coords: Sequence[int]) -> OElem:
        return OElem(self, coords)

    def one(self) -> OElem:
        return self.from_embeddings(np.ones(self.degree))

    def from_embeddings(self, vec, tol: float = INT_TOL) -> OElem:
        return OElem(self, coords_from_embeddings(self, vec, tol))

    def unit_elems(self) -> list[OElem]:
        return [OElem(self, c) for c in self.unit_coords]

    def tp_unit_elems(self) -> list[OElem]:
        return [OElem(self, c) for c in self.tp_unit_coords]

    def __repr__(self):
        return f"FieldData({self.name!r}, n={self.degree}, D={self.discriminant}, R={self.regulator:.12g})"


def coords_from_embeddings(field: FieldData, vec, tol: float = INT_TOL) -> tuple:
    raw = field.basis_inv @ np.asarray(vec, dtype=float)
    rounded = np.rint(raw)
    scale = max(1.0, float(np.max(np.abs(raw))))
    if np.max(np.abs(raw - rounded)) > tol * scale:
        raise NonIntegralProduct(f"coordinates {raw} are not integral")
    return tuple(int(v) for v in rounded)


def mul(a: OElem, b: OElem) -> OElem:
    T = a.field.structure
    c = np.einsum("i,k,ikl->l", np.asarray(a.coords, dtype=object),
                  np.asarray(b.coords, dtype=object), T.astype(object))
    return OElem(a.field, c)


def norm(a: OElem) -> int:
    v = float(np.prod(a.embeddings))
    r = round(v)
    if abs(v - r) > INT_TOL * max(1.0, abs(v)):
        raise NonIntegralProduct(f"norm {v} is not an integer")
    return int(r)


def trace(a: OElem) -> int:
    v = float(np.sum(a.embeddings))
    r = round(v)
    if abs(v - r) > INT_TOL * max(1.0, abs(v)):
        raise NonIntegralProduct(f"trace {v} is not an integer")
    return int(r)


# ---------------------------------------------------------------------------
# loading and validation
# ---------------------------------------------------------------------------

def _unit_matrix(log_units: np.ndarray, n: int) -> np.ndarray:
    M = np.ones((n, n))
    M[: n - 1, :] = log_units
    return M


def load_field(config: str, name: str | None = None) -> FieldData:
    """Build a FieldData from config text, verifying every invariant."""
    kv = parse_keyvalue(config)
    for key in ("degree", "basis", "omega", "discriminant"):
        if key not in kv:
            raise ConfigSyntaxError(f"missing key {key!r}")
    for key in kv:
        if key not in {"name", "degree", "basis", "units", "omega", "discriminant",
                       "narrow_class_number", "conductor"}:
            raise ConfigSyntaxError(f"unknown key {key!r}", kv[key][1])

    degree_vals = _numbers(*kv["degree"], kind=int)
    if len(degree_vals) != 1 or degree_vals[0] < 1:
        raise ConfigSyntaxError("degree must be one positive integer", kv["degree"][1])
    n = degree_vals[0]
    if n > MAX_DEGREE:
        raise UnsupportedDegree(f"degree {n} exceeds the supported maximum {MAX_DEGREE}")

    bvals = _numbers(*kv["basis"])
    if len(bvals) != n * n:
        raise ConfigSyntaxError(f"basis needs {n*n} numbers, got {len(bvals)}", kv["basis"][1])
    basis = np.array(bvals, dtype=float).reshape(n, n)

    uval, uline = kv.get("units", ("", kv["degree"][1]))
    uvals = _numbers(uval, uline)
    if len(uvals) != n * (n - 1):
        raise ConfigSyntaxError(f"units need {n*(n-1)} numbers, got {len(uvals)}", uline)
    units = np.array(uvals, dtype=float).reshape(n - 1, n)

    omega = tuple(_numbers(*kv["omega"], kind=int))
    if len(omega) != n:
        raise ConfigSyntaxError("omega needs n integer coordinates", kv["omega"][1])
    dvals = _numbers(*kv["discriminant"], kind=int)
    if len(dvals) != 1 or dvals[0] < 1:
        raise ConfigSyntaxError("discriminant must be a positive integer", kv["discriminant"][1])
    D = dvals[0]
    if "narrow_class_number" in kv:
        h = _numbers(*kv["narrow_class_number"], kind=int)
        if h != [1]:
            raise InvalidField("only narrow class number one is supported")
    fname = kv["name"][0] if "name" in kv else (name or f"field{n}")
    conductor = None
    if "conductor" in kv:
        cvals = _numbers(*kv["conductor"], kind=int)
        if len(cvals) != 1 or cvals[0] < 1:
            raise ConfigSyntaxError("conductor must be a positive integer", kv["conductor"][1])
        conductor = cvals[0]

    if abs(np.linalg.det(basis)) < 1e-9:
        raise InvalidField("basis embeddings are singular")
    basis_inv = np.linalg.inv(basis)

    # fundamental units: sign-normalise so the first embedding is positive
    units = units * np.sign(units[:, :1]) if n > 1 else units
    log_units = np.log(np.abs(units)) if n > 1 else np.zeros((0, 1))
    for q in range(n - 1):
        if abs(np.sum(log_units[q])) > ANALYTIC_TOL * 100:
            raise InvalidField(f"unit {q} has |N| != 1")

    M = _unit_matrix(log_units, n)
    try:
        e_matrix = np.linalg.inv(M).T.T
    except np.linalg.LinAlgError:
        raise InvalidField("units are multiplicatively dependent") from None
    # e_matrix[j, q] with sum_j e[j,q] log|eps_q'^{(j)}| = delta
    regulator = 1.0 if n == 1 else abs(float(np.linalg.det(log_units[:, : n - 1])))
    if regulator < 1e-9:
        raise InvalidField("regulator vanishes")

    skel = FieldData(fname, n, basis, units, e_matrix, regulator, D, omega,
                     basis_inv, np.zeros((n, n, n), dtype=np.int64),
                     np.zeros((n - 1, n), dtype=np.int64), np.zeros((n - 1, n), dtype=np.int64))

    # structure constants by re-expansion of basis products
    T = np.zeros((n, n, n), dtype=np.int64)
    for i in range(n):
        for k in range(n):
            try:
                T[i, k] = coords_from_embeddings(skel, basis[:, i] * basis[:, k])
            except NonIntegralProduct as exc:
                raise NonIntegralProduct(f"basis product a_{i} a_{k} not integral: {exc}") from None
    try:
        coords_from_embeddings(skel, np.ones(n))
        ucoords = np.array([coords_from_embeddings(skel, u) for u in units], dtype=np.int64).reshape(n - 1, n)
        tpcoords = np.array([coords_from_embeddings(skel, u * u) for u in units], dtype=np.int64).reshape(n - 1, n)
    except NonIntegralProduct as exc:
        raise InvalidField(f"unit or identity not in the lattice: {exc}") from None

    fd = FieldData(fname, n, basis, units, e_matrix, regulator, D, omega,
                   basis_inv, T, ucoords, tpcoords, conductor=conductor)
    _validate(fd)
    return fd


def _validate(fd: FieldData) -> None:
    n = fd.degree
    disc = float(np.linalg.det(fd.basis)) ** 2
    if abs(disc - fd.discriminant) > INT_TOL * fd.discriminant:
        raise InvalidField(f"basis discriminant {disc} != {fd.discriminant}")
    e = fd.e_matrix
    if n > 1:
        if np.max(np.abs(e[:, : n - 1].sum(axis=0))) > ANALYTIC_TOL:
            raise InvalidField("e-matrix columns do not sum to zero")
        G = fd.log_units @ e[:, : n - 1]
        if np.max(np.abs(G - np.eye(n - 1))) > ANALYTIC_TOL:
            raise InvalidField("e-matrix is not dual to the unit logarithms")
    w = fd.omega
    if not w.is_totally_positive():
        raise InvalidField("omega is not totally positive")
    if abs(norm(w)) != fd.discriminant:
        raise InvalidField(f"|N(omega)| = {abs(norm(w))} != D = {fd.discriminant}")


def field_dir() -> Path:
    env = os.environ.get("HE_FIELD_DIR")
    return Path(env) if env else Path(__file__).with_name("fields")


def available_fields() -> list[str]:
    return sorted(p.stem for p in field_dir().glob("*.field"))


@lru_cache(maxsize=None)
def get_field(name: str) -> FieldData:
    """Load a shipped (or HE_FIELD_DIR) field by name, cached."""
    path = field_dir() / f"{name}.field"
    if not path.exists():
        raise InvalidField(f"unknown field {name!r}; available: {available_fields()}")
    return load_field(path.read_text(encoding="utf-8"), name=name)


# ---------------------------------------------------------------------------
# fundamental domain for the totally positive units acting on R_+^n
# ---------------------------------------------------------------------------

def fund_domain_map(field: FieldData, y) -> np.ndarray:
    """Map y in R_+^n to (prod y, coordinates along the squared-unit lattice).

    Works on arrays of shape (..., n).  Unit translation by a squared
    fundamental unit shifts the corresponding coordinate by exactly 2.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("fund_domain_map needs positive coordinates")
    n = field.degree
    logy = np.log(y)
    P = np.exp(logy.sum(axis=-1))
    out = np.empty(y.shape, dtype=float)
    out[..., 0] = P
    if n > 1:
        ell = logy - logy.mean(axis=-1, keepdims=True)
        e = field.e_matrix[:, : n - 1]
        out[..., 1:] = ell[..., 1:] @ (e[1:, :] - e[0:1, :])
    return out


def fund_domain_inverse(field: FieldData, yt) -> np.ndarray:
    """Inverse of fund_domain_map: y_k = P^{1/n} exp(sum_q yt_q log|eps_q^{(k)}|)."""
    yt = np.asarray(yt, dtype=float)
    n = field.degree
    base = yt[..., :1] ** (1.0 / n)
    if n == 1:
        return base.copy()
    return base * np.exp(yt[..., 1:] @ field.log_units)


def unit_reduce(field: FieldData, y) -> tuple[np.ndarray, np.ndarray]:
    """Move y into U_inf by the squared units; returns (y', k) with
    y' = y * prod_q (eps_q^2)^{k_q}."""
    y = np.asarray(y, dtype=float)
    n = field.degree
    if n == 1:
        return y.copy(), np.zeros(0, dtype=int)
    k_total = np.zeros(y.shape[:-1] + (n - 1,), dtype=np.int64)
    cur = y.copy()
    for _ in range(4):
        yt = fund_domain_map(field, cur)[..., 1:]
        k = -np.floor((yt + 1.0) / 2.0).astype(np.int64)
        if not np.any(k):
            break
        cur = cur * np.exp(2.0 * (k @ field.log_units))
        k_total += k
    return cur, k_total


def jacobian_fd(field: FieldData, y, step: float = 1e-6) -> float:
    """Central finite-difference Jacobian determinant of fund_domain_map at y."""
    y = np.asarray(y, dtype=float)
    n = field.degree
    J = np.empty((n, n))
    for i in range(n):
        h = step * y[i]
        yp, ym = y.copy(), y.copy()
        yp[i] += h
        ym[i] -= h
        J[:, i] = (fund_domain_map(field, yp) - fund_domain_map(field, ym)) / (2 * h)
    return float(np.linalg.det(J))


def tp_unit_action(field: FieldData, y, k) -> np.ndarray:
    """Multiply y componentwise by prod_q (eps_q^2)^{k_q}."""
    if field.degree == 1:
        return np.asarray(y, dtype=float).copy()
    return np.asarray(y, dtype=float) * np.exp(2.0 * (np.asarray(k, dtype=float) @ field.log_units))
