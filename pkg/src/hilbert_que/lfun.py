"""Hecke L-functions of a Groessencharacter and related Dirichlet series.

Series and Euler products cover Re s > 1.  The continuation uses a smoothed
approximate functional equation (any field, any character), with two
independent routes kept alongside for cross-checks: Euler-Maclaurin for the
Riemann zeta function and, for the trivial character of an abelian field,
the factorisation into Dirichlet L-functions of its conductor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import bernoulli

from .field_core import FieldData
from .ideal_arith import (GrossenChar, IdealRep, _sign_units, chi_elem_value, divisors,
                          grossen_char, ideal_gcd, ideal_mul, ideal_div, ideal_table,
                          reduce_exponents, canonicalize)
from .special_fn import DomainError, PoleError, cloggamma

SIGMA_MAX = 3.0
T_MAX = 200.0


class EnvelopeError(ValueError):
    pass


class SeriesValue(NamedTuple):
    value: complex
    tail: float


def dedekind_residue(field: FieldData) -> float:
    """2^{n-1} R / sqrt(D)."""
    return 2 ** (field.degree - 1) * field.regulator / math.sqrt(field.discriminant)


def series_tail_bound(field: FieldData, sigma: float, X: float) -> float:
    """Bound on sum_{N(a) > X} N(a)^{-sigma} from the ideal-count density."""
    if sigma <= 1:
        return math.inf
    return 1.5 * dedekind_residue(field) * X ** (1 - sigma) / (sigma - 1)


# ---------------------------------------------------------------------------
# multiplicative structure of the ideal table
# ---------------------------------------------------------------------------

class MultTable:
    """Ideals of norm <= X with smallest-prime factorisation data.

    For each ideal index i > 0: ``spf[i]`` is the index of its smallest
    prime factor p, ``exp[i]`` the exponent of p and ``rest[i]`` the index
    of i / p^exp.  Built by a sieve over products p * j of float embeddings.
    """

    def __init__(self, field: FieldData, X: int):
        tab = ideal_table(field, X)
        self.field = field
        self.X = X
        self.ideals = tab.upto(X)
        K = len(self.ideals)
        self.norms = np.asarray(tab.norms[:K], dtype=np.int64)
        self.embeddings = tab.embeddings[:K]
        self._index = tab.index
        spf = np.full(K, -1, dtype=np.int64)
        quot = np.zeros(K, dtype=np.int64)
        primes = []
        for i in range(1, K):
            if spf[i] >= 0:
                continue
            primes.append(i)
            spf[i] = i
            cut = int(np.searchsorted(self.norms, X // self.norms[i], side="right"))
            if cut <= 1:
                continue
            js = np.arange(1, cut)
            ks = self.product_index(i, js)
            fresh = spf[ks] < 0
            spf[ks[fresh]] = i
            quot[ks[fresh]] = js[fresh]
        exp = np.zeros(K, dtype=np.int64)
        rest = np.zeros(K, dtype=np.int64)
        for i in range(1, K):
            q = quot[i]
            if q > 0 and spf[q] == spf[i]:
                exp[i] = exp[q] + 1
                rest[i] = rest[q]
            else:
                exp[i] = 1
                rest[i] = q
        self.spf, self.exp, self.rest = spf, exp, rest
        self.prime_idx = np.array(primes, dtype=np.int64)
        # number of distinct prime factors, used to order multiplicative fills
        nprime = np.zeros(K, dtype=np.int64)
        for i in range(1, K):
            nprime[i] = nprime[rest[i]] + 1
        self.omega_count = nprime

    def product_index(self, i: int, js: np.ndarray) -> np.ndarray:
        """Table indices of the ideals (i)(j) for an array of j."""
        if self.field.degree == 1:
            return self.norms[i] * self.norms[js] - 1
        return self.index_of(self.embeddings[i][None, :] * self.embeddings[js])

    def index_of(self, emb: np.ndarray) -> np.ndarray:
        """Table index of the ideal (l) for each row of embeddings l (nonzero).

        Rows whose norm exceeds the table bound get -1.
        """
        field = self.field
        emb = np.atleast_2d(np.asarray(emb, dtype=float))
        nrm = np.rint(np.abs(np.prod(emb, axis=1))).astype(np.int64)
        out = np.full(len(emb), -1, dtype=np.int64)
        ok = nrm <= self.X
        if field.degree == 1:
            out[ok] = nrm[ok] - 1
            return out
        emb = emb[ok]
        units = _sign_unit_array(field)
        code = ((emb < 0).astype(np.int64) * (1 << np.arange(field.degree))).sum(axis=1)
        prod = emb * units[code]
        k = reduce_exponents(field, prod)
        prod = prod * np.exp(2.0 * (k @ field.log_units))
        coords = np.rint(prod @ field.basis_inv.T).astype(np.int64)
        got = np.array([self._index.get(c, -1) for c in map(tuple, coords.tolist())],
                       dtype=np.int64)
        for pos in np.nonzero(got < 0)[0]:
            I = canonicalize(field.from_embeddings(emb[pos]))
            got[pos] = self._index[I.key]
        out[ok] = got
        return out

    def prime_factors(self, i: int) -> list[int]:
        """Indices of the distinct prime ideals dividing ideal i."""
        out = []
        while i > 0:
            out.append(int(self.spf[i]))
            i = int(self.rest[i])
        return out

    def primes(self) -> list[IdealRep]:
        return [self.ideals[i] for i in self.prime_idx]

    def multiplicative(self, local: Callable) -> np.ndarray:
        """Values of the multiplicative function with f(p^e) = local(p_idx, e).

        ``local`` receives arrays of prime indices and exponents.
        """
        K = len(self.ideals)
        f = np.zeros(K, dtype=complex)
        f[0] = 1.0
        if K == 1:
            return f
        idx = np.arange(1, K)
        loc = np.asarray(local(self.spf[idx], self.exp[idx]), dtype=complex)
        levels = self.omega_count[idx]
        for lev in range(1, int(levels.max()) + 1):
            sel = levels == lev
            f[idx[sel]] = loc[sel] * f[self.rest[idx[sel]]]
        return f

    def prime_chi(self, rho: np.ndarray, p_idx: np.ndarray) -> np.ndarray:
        return chi_elem_value(rho, self.embeddings[p_idx])


@lru_cache(maxsize=None)
def _sign_unit_array(field: FieldData) -> np.ndarray:
    """Unit embeddings indexed by the bit code of a sign pattern (bit j: negative j-th)."""
    n = field.degree
    arr = np.zeros((1 << n, n))
    for sig, u in _sign_units(field).items():
        code = sum(1 << j for j, v in enumerate(sig) if v < 0)
        arr[code] = u.embeddings
    return arr


_MULT: dict[tuple, MultTable] = {}


def mult_table(field: FieldData, X: int) -> MultTable:
    key = (id(field), field.name)
    tab = _MULT.get(key)
    if tab is None or tab.X < X:
        tab = MultTable(field, int(X))
        _MULT[key] = tab
    return tab


def _restrict(tab: MultTable, X: int) -> int:
    return int(np.searchsorted(tab.norms, X, side="right"))


# ---------------------------------------------------------------------------
# Dirichlet coefficients grouped by norm
# ---------------------------------------------------------------------------

def aggregate(norms: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sum coefficients sharing a norm: (distinct norms, summed values)."""
    uniq, inv = np.unique(norms, return_inverse=True)
    re = np.bincount(inv, weights=np.real(values), minlength=len(uniq))
    im = np.bincount(inv, weights=np.imag(values), minlength=len(uniq))
    return uniq, re + 1j * im


def dirichlet_eval(norms: np.ndarray, coeffs: np.ndarray, s, chunk: int = 2_000_000) -> np.ndarray:
    """sum_N c_N N^{-s} for an array of s, chunked to bound memory."""
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    logn = np.log(norms.astype(float))
    out = np.empty(len(s), dtype=complex)
    step = max(1, chunk // max(1, len(norms)))
    for a in range(0, len(s), step):
        blk = s[a:a + step]
        out[a:a + step] = np.exp(-np.outer(blk, logn)) @ coeffs
    return out


@lru_cache(maxsize=64)
def _chi_coeffs(field: FieldData, m: tuple, X: int) -> tuple[np.ndarray, np.ndarray]:
    tab = ideal_table(field, X)
    K = int(np.searchsorted(tab.norms, X, side="right"))
    ch = grossen_char(field, m)
    vals = chi_elem_value(ch.rho, tab.embeddings[:K]) if field.degree > 1 else np.ones(K, dtype=complex)
    return aggregate(np.asarray(tab.norms[:K]), vals)


def chi_coefficients(ch: GrossenChar, X: int) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients of zeta(s, m) aggregated by norm, norms <= X."""
    return _chi_coeffs(ch.field, ch.m, int(X))


def _need_convergent(s: complex, what: str = "series"):
    if s.real <= 1:
        raise DomainError(f"{what} needs Re s > 1, got {s}")


def zeta_series(s, ch: GrossenChar, X: int = 10**4) -> SeriesValue:
    """Truncated Dirichlet series sum_{N(a) <= X} chi_m(a) N(a)^{-s}."""
    s = complex(s)
    _need_convergent(s)
    norms, c = chi_coefficients(ch, X)
    val = complex(dirichlet_eval(norms, c, s)[0])
    return SeriesValue(val, series_tail_bound(ch.field, s.real, X))


def zeta_euler(s, ch: GrossenChar, X: int = 10**4) -> complex:
    """Euler product over prime ideals of norm <= X."""
    s = complex(s)
    _need_convergent(s, "Euler product")
    tab = mult_table(ch.field, X)
    pidx = tab.prime_idx[tab.norms[tab.prime_idx] <= X]
    chi_p = tab.prime_chi(ch.rho, pidx)
    terms = 1.0 - chi_p * np.exp(-s * np.log(tab.norms[pidx].astype(float)))
    return complex(np.exp(-np.sum(np.log(terms))))


def moebius_values(field: FieldData, X: int) -> np.ndarray:
    tab = mult_table(field, X)
    K = _restrict(tab, X)
    mu = tab.multiplicative(lambda p, e: np.where(e == 1, -1.0, 0.0))
    return np.real(mu[:K]).astype(np.int64)


def moebius_series(s, ch: GrossenChar, X: int = 10**4) -> complex:
    """sum chi_m(a) mu(a) N(a)^{-s}, the series of 1/zeta(s, m)."""
    s = complex(s)
    _need_convergent(s)
    tab = mult_table(ch.field, X)
    K = _restrict(tab, X)
    mu = moebius_values(ch.field, X)
    vals = mu * chi_elem_value(ch.rho, tab.embeddings[:K])
    return complex(dirichlet_eval(*aggregate(tab.norms[:K], vals), s)[0])


def mangoldt_values(ch: GrossenChar, X: int) -> np.ndarray:
    """Lambda_m(p^k) = chi_m(p)^k log N(p), zero off prime powers."""
    tab = mult_table(ch.field, X)
    K = _restrict(tab, X)
    out = np.zeros(K, dtype=complex)
    pp = np.nonzero((tab.omega_count[:K] == 1))[0]
    p = tab.spf[pp]
    out[pp] = tab.prime_chi(ch.rho, p) ** tab.exp[pp] * np.log(tab.norms[p].astype(float))
    return out


def mangoldt_series(s, ch: GrossenChar, X: int = 10**4) -> complex:
    """sum Lambda_m(a) N(a)^{-s}, which equals -zeta'/zeta(s, m)."""
    s = complex(s)
    _need_convergent(s)
    tab = mult_table(ch.field, X)
    K = _restrict(tab, X)
    return complex(dirichlet_eval(*aggregate(tab.norms[:K], mangoldt_values(ch, X)), s)[0])


# ---------------------------------------------------------------------------
# Euler-Maclaurin: Hurwitz zeta and Dirichlet L-functions
# ---------------------------------------------------------------------------

_EM_TERMS = 24
_B2 = bernoulli(2 * _EM_TERMS)[2::2]


def hurwitz_zeta(s, a: float) -> complex:
    """zeta(s, a) = sum_{k >= 0} (k + a)^{-s} by Euler-Maclaurin, 0 < a <= 1."""
    s = complex(s)
    if s == 1:
        raise PoleError("Hurwitz zeta has a pole at s = 1")
    N = 30 + int(abs(s.imag) / 2)
    k = np.arange(N) + a
    head = np.sum(np.exp(-s * np.log(k)))
    x = N + a
    out = head + x ** (1 - s) / (s - 1) + 0.5 * x ** (-s)
    rising = s                 # s (s+1) ... (s+2j-2)
    xp = x ** (-s - 1)
    fact = 2.0
    for j in range(1, _EM_TERMS + 1):
        term = _B2[j - 1] / fact * rising * xp
        out += term
        if abs(term) < 1e-17 * abs(out):
            break
        rising *= (s + 2 * j - 1) * (s + 2 * j)
        xp /= x * x
        fact *= (2 * j + 1) * (2 * j + 2)
    return complex(out)


def riemann_zeta_em(s) -> complex:
    return hurwitz_zeta(s, 1.0)


def dirichlet_l(s, values: np.ndarray) -> complex:
    """L(s, chi) for a character mod f given by its values on 0..f-1."""
    f = len(values)
    if f == 1:
        return riemann_zeta_em(s)
    s = complex(s)
    tot = sum(values[a] * hurwitz_zeta(s, a / f) for a in range(1, f) if values[a] != 0)
    return complex(f ** (-s) * tot)


@lru_cache(maxsize=None)
def abelian_characters(field: FieldData) -> tuple:
    """Dirichlet characters mod the conductor whose L-functions multiply to zeta_K.

    The norm residues of ideals prime to f form a subgroup H of (Z/f)^*
    with cyclic quotient of order n; the characters are those of G/H.
    The trivial one is returned as the constant array [1] (Riemann zeta).
    """
    f = field.conductor
    n = field.degree
    if f is None:
        raise ValueError(f"field {field.name} has no conductor on record")
    if n == 1:
        return (np.ones(1, dtype=complex),)
    G = [a for a in range(1, f) if math.gcd(a, f) == 1]
    tab = ideal_table(field, 40 * f)
    H = sorted({int(N) % f for N in tab.norms if math.gcd(int(N), f) == 1})
    if len(G) != n * len(H):
        raise ValueError(f"norm group of index {len(G) / len(H)} does not match degree {n}")
    Hs = set(H)
    gen = None
    for g in G:
        k, x = 1, g
        while x not in Hs:
            x = x * g % f
            k += 1
        if k == n:
            gen = g
            break
    if gen is None:
        raise ValueError("norm class group is not cyclic")
    coset = {}
    x = 1
    for k in range(n):
        for h in H:
            coset[x * h % f] = k
        x = x * gen % f
    chars = [np.ones(1, dtype=complex)]
    for j in range(1, n):
        vals = np.zeros(f, dtype=complex)
        for a in G:
            vals[a] = np.exp(2j * math.pi * j * coset[a] / n)
        if not _is_primitive(vals, f):
            raise ValueError(f"character {j} mod {f} is imprimitive")
        chars.append(vals)
    return tuple(chars)


def _is_primitive(vals: np.ndarray, f: int) -> bool:
    for d in range(1, f):
        if f % d or d == f:
            continue
        # induced from modulus d iff constant on units congruent to 1 mod d
        if all(abs(vals[a] - 1) < 1e-12 for a in range(1, f)
               if math.gcd(a, f) == 1 and a % d == 1 % d):
            return False
    return True


def zeta_factor(s, field: FieldData) -> complex:
    """Dedekind zeta as the product of Dirichlet L-functions."""
    s = complex(s)
    if s == 1:
        raise PoleError("Dedekind zeta has a pole at s = 1")
    out = 1.0 + 0j
    for vals in abelian_characters(field):
        out *= dirichlet_l(s, vals)
    return complex(out)


# ---------------------------------------------------------------------------
# approximate functional equation
# ---------------------------------------------------------------------------

def gamma_shifts(ch: GrossenChar) -> np.ndarray:
    """mu_j = tau_j - i rho_j(m) in prod_j Gamma((s + mu_j)/2)."""
    return np.asarray(ch.tau, dtype=float) - 1j * ch.rho


def root_number(ch: GrossenChar) -> complex:
    """chi_m(omega) i^{Tr tau}."""
    field = ch.field
    return complex(chi_elem_value(ch.rho, field.omega.embeddings)) * 1j ** int(sum(ch.tau))


def log_gamma_factor(s, ch: GrossenChar) -> np.ndarray:
    """log of D^{s/2} pi^{-ns/2} prod_j Gamma((s + mu_j)/2), vectorised in s."""
    s = np.asarray(s, dtype=complex)
    field = ch.field
    n = field.degree
    logA = 0.5 * math.log(field.discriminant) - 0.5 * n * math.log(math.pi)
    mu = gamma_shifts(ch)
    return s * logA + cloggamma((s[..., None] + mu) / 2).sum(axis=-1)


@dataclass(frozen=True)
class AFEParams:
    """Smoothing parameters: kappa = |delta|, rot_budget bounds the loss e^{budget}."""
    kappa: float = 1.0
    rot_budget: float = 8.0
    cutoff: float = 42.0


def _rotation(n: int, t: float, budget: float) -> tuple[float, float]:
    """(theta, decay rate) of the rotated smoothing line."""
    full = n * math.pi / 4
    a = full if abs(t) < 1e-12 else min(full, budget / abs(t))
    return math.copysign(full - a, t) if t else 0.0, a


def _afe_half(w: complex, ch: GrossenChar, logdelta: complex, kappa_eff: float,
              decay: float) -> complex:
    """(1/2 pi i) int_(c) gamma(w+u) D(w+u) e^{-u logdelta} du/u by trapezoid sums."""
    field = ch.field
    n = field.degree
    sig = w.real
    c = max(2.0 - sig, 0.75)
    d = 0.8 * min(c, sig + c - 1.0)
    h = 2 * math.pi * d / 40.0
    v0 = -w.imag

    def logweight(v):
        u = c + 1j * v
        return np.real(log_gamma_factor(w + u, ch) - u * logdelta - np.log(u))

    span = 60.0 / decay + 80.0
    coarse = v0 + np.arange(-span, span + 1.0, 1.0)
    lw = logweight(coarse)
    keep = np.nonzero(lw > lw.max() - 45.0)[0]
    lo = coarse[max(keep[0] - 2, 0)]
    hi = coarse[min(keep[-1] + 2, len(coarse) - 1)]
    v = np.arange(math.floor((lo - v0) / h), math.ceil((hi - v0) / h) + 1) * h + v0
    u = c + 1j * v
    logw = log_gamma_factor(w + u, ch) - u * logdelta - np.log(u)
    # norm cutoff from the decay of the smoothing kernel in N
    A = math.exp(0.5 * math.log(field.discriminant) - 0.5 * n * math.log(math.pi))
    rate = max(math.sin(2 * decay / n), 1e-3)
    Nmax = A / kappa_eff * ((50.0 + 2 * max(0.0, -sig)) / (n * rate)) ** (n / 2)
    Nmax = int(min(max(Nmax * 1.2, 16), 10**6))
    norms, coeffs = chi_coefficients(ch, Nmax)
    Dvals = dirichlet_eval(norms, coeffs, w + u)
    return complex(h / (2 * math.pi) * np.sum(np.exp(logw) * Dvals))


def _check_envelope(s: complex):
    if not (0.0 <= s.real <= SIGMA_MAX) or abs(s.imag) > T_MAX:
        raise EnvelopeError(f"s = {s} outside 0 <= Re s <= {SIGMA_MAX}, |Im s| <= {T_MAX}")


def lambda_afe(s, ch: GrossenChar, params: AFEParams = AFEParams(),
               eps: complex | None = None) -> complex:
    """Completed L-function Lambda(s, m) = gamma(s) zeta(s, m) via the AFE.

    ``eps`` overrides the root number (used to show that a wrong one breaks
    the independence of the result from the smoothing parameter).
    """
    s = complex(s)
    field = ch.field
    n = field.degree
    if eps is None:
        eps = root_number(ch)
    theta, decay = _rotation(n, s.imag, params.rot_budget)
    logdelta = math.log(params.kappa) + 1j * theta
    dual = ch.conj()
    S1 = _afe_half(s, ch, logdelta, params.kappa, decay)
    S2 = _afe_half(1 - s, dual, -logdelta, 1.0 / params.kappa, decay)
    out = S1 + eps * S2
    if ch.is_trivial:
        if s == 1 or s == 0:
            raise PoleError("completed Dedekind zeta has poles at s = 0, 1")
        r = 2 ** (n - 1) * field.regulator
        out -= r * (np.exp((s - 1) * logdelta) / (1 - s) + np.exp(s * logdelta) / s)
    return complex(out)


def _gamma_pole(s: complex, ch: GrossenChar) -> bool:
    z = (s + gamma_shifts(ch)) / 2
    return bool(np.any((np.abs(z - np.round(z.real)) < 1e-13) & (np.round(z.real) <= 0)))


def zeta_continued(s, ch: GrossenChar, method: str = "auto",
                   params: AFEParams = AFEParams()) -> complex:
    """zeta(s, m) anywhere in the envelope 0 <= Re s <= 3, |Im s| <= 120.

    method: 'afe' (approximate functional equation, all characters),
    'em' (Euler-Maclaurin, n = 1 only), 'factor' (trivial character of a
    field with a recorded conductor), or 'auto'.
    """
    s = complex(s)
    _check_envelope(s)
    field = ch.field
    if ch.is_trivial and s == 1:
        raise PoleError("zeta(s, 0) has a pole at s = 1")
    if method == "auto":
        if field.degree == 1:
            method = "em"
        elif ch.is_trivial and field.conductor is not None:
            method = "factor"
        else:
            method = "afe"
    if method == "em":
        if field.degree != 1:
            raise ValueError("Euler-Maclaurin route is for the rational field")
        return riemann_zeta_em(s)
    if method == "factor":
        if not ch.is_trivial:
            raise ValueError("factorisation route needs the trivial character")
        return zeta_factor(s, field)
    if method != "afe":
        raise ValueError(f"unknown method {method!r}")
    if _gamma_pole(s, ch):
        if ch.is_trivial:
            raise PoleError("trivial zero / pole cancellation at s = 0 needs method='factor'")
        return 0j
    return complex(lambda_afe(s, ch, params) * np.exp(-log_gamma_factor(s, ch)))


def zeta_value(s, ch: GrossenChar) -> complex:
    """zeta(s, m) for any s with Re s >= 0: series far right, continuation otherwise."""
    s = complex(s)
    if s.real > SIGMA_MAX:
        X = int(min(10**5, max(200, (1e14 * dedekind_residue(ch.field)) ** (1 / (s.real - 1)))))
        return zeta_series(s, ch, X).value
    return zeta_continued(s, ch)


def zeta_derivative(s, ch: GrossenChar, step: float = 1e-4) -> complex:
    """zeta'(s, m) by central differences with one Richardson step."""
    s = complex(s)

    def central(hh):
        return (zeta_value(s + hh, ch) - zeta_value(s - hh, ch)) / (2 * hh)

    return (4 * central(step / 2) - central(step)) / 3


def completed_xi(s, ch: GrossenChar, params: AFEParams = AFEParams()) -> complex:
    """xi(s, m) = D^{s/2} pi^{-ns/2} zeta(s, m) prod_j Gamma((s + tau_j - i rho_j)/2)."""
    s = complex(s)
    _check_envelope(s)
    return lambda_afe(s, ch, params)


class FEResidual(NamedTuple):
    absolute: float
    relative: float


def fe_residual(s, ch: GrossenChar, eps: complex | None = None,
                kappa_left: float = 1.0, kappa_right: float = 1.3) -> FEResidual:
    """|xi(s, m) - chi_m(omega) i^{Tr tau} xi(1 - s, -m)|.

    The two sides use different smoothing parameters, so agreement is a
    real test of the functional equation rather than an identity of the
    method.  ``eps`` replaces the root number on both sides.
    """
    s = complex(s)
    _check_envelope(s)
    _check_envelope(1 - s)
    e = root_number(ch) if eps is None else eps
    dual = ch.conj()
    left = lambda_afe(s, ch, AFEParams(kappa=kappa_left), eps=e)
    right = lambda_afe(1 - s, dual, AFEParams(kappa=kappa_right), eps=None if eps is None else 1 / e)
    diff = abs(left - e * right)
    return FEResidual(diff, diff / max(abs(left), 1e-300))


# ---------------------------------------------------------------------------
# Laurent data at s = 1
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ZetaLaurent:
    residue: float
    constant: float


def dedekind_laurent(field: FieldData, levels: int = 6) -> ZetaLaurent:
    """Residue and constant term of zeta(s, 0) at s = 1 by extrapolation.

    g(e) = e * zeta(1 + e) is analytic; its interpolating polynomial through
    e_k = 1e-2 * 2^{-k} gives g(0) = residue and g'(0) = constant term.
    """
    ch = grossen_char(field)
    eps = 1e-2 * 2.0 ** -np.arange(levels)
    g = np.array([e * zeta_continued(1 + e, ch).real for e in eps])
    coef = np.polynomial.polynomial.polyfit(eps, g, levels - 1)
    return ZetaLaurent(float(coef[0]), float(coef[1]))


# ---------------------------------------------------------------------------
# synthetic Hecke eigen-systems and the standard L-function
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HeckeEigenSystem:
    """Prime eigenvalues lambda(p) in [-2, 2], extended by the Hecke recursion."""
    field: FieldData
    prime_values: dict          # prime ideal key -> lambda(p)
    kappa: tuple
    seed: int | None = None

    def prime_value(self, p: IdealRep) -> float:
        return self.prime_values.get(p.key, 0.0)

    def power_value(self, p: IdealRep, k: int) -> float:
        return hecke_power(self.prime_value(p), k)

    def value(self, a: IdealRep) -> float:
        from .ideal_arith import factor
        out = 1.0
        for p, e in factor(a):
            out *= self.power_value(p, e)
        return out


def eigensystem(field: FieldData, cap: int, seed: int = 0, zero: bool = False,
                values: dict | None = None) -> HeckeEigenSystem:
    """Random system on primes of norm <= cap (or all zeros / given values)."""
    tab = mult_table(field, cap)
    primes = [p for p in tab.primes() if p.norm <= cap]
    rng = np.random.default_rng(seed)
    lam = rng.uniform(-2.0, 2.0, size=len(primes))
    if zero:
        lam[:] = 0.0
    pv = {p.key: float(v) for p, v in zip(primes, lam)}
    if values:
        pv.update(values)
    kappa = tuple(int(b) for b in rng.integers(0, 2, size=field.degree))
    return HeckeEigenSystem(field, pv, kappa, None if zero else seed)


def hecke_power(lam_p, k: int):
    """lambda(p^k) from lambda(p^{k+1}) = lambda(p) lambda(p^k) - lambda(p^{k-1})."""
    prev, cur = np.ones_like(lam_p), np.asarray(lam_p) * 1.0
    if k == 0:
        return prev
    for _ in range(k - 1):
        prev, cur = cur, lam_p * cur - prev
    return cur


def hecke_poly_recursion(k: int) -> list[int]:
    """Integer coefficients (ascending) of lambda(p^k) as a polynomial in lambda(p)."""
    prev, cur = [1], [0, 1]
    if k == 0:
        return prev
    for _ in range(k - 1):
        nxt = [0] + cur
        for i, c in enumerate(prev):
            nxt[i] -= c
        prev, cur = cur, nxt
    return cur


def hecke_poly_closed(k: int) -> list[int]:
    """The binomial closed forms for even and odd powers."""
    coef = [0] * (k + 1)
    if k % 2 == 0:
        kk = k // 2
        for l in range(kk + 1):
            coef[2 * l] = (-1) ** (kk + l) * comb(kk + l, 2 * l)
    else:
        kk = (k - 1) // 2
        for l in range(1, kk + 2):
            coef[2 * l - 1] = (-1) ** (kk + l + 1) * comb(kk + l, 2 * l - 1)
    return coef


def eigen_values(sys: HeckeEigenSystem, X: int) -> np.ndarray:
    """lambda(a) for every ideal of norm <= X (multiplicative extension)."""
    tab = mult_table(sys.field, X)
    K = _restrict(tab, X)
    lam_p = np.array([sys.prime_values.get(I.key, 0.0) for I in tab.ideals])

    def local(p, e):
        out = np.empty(len(p))
        for k in np.unique(e):
            sel = e == k
            out[sel] = hecke_power(lam_p[p[sel]], int(k))
        return out

    return np.real(tab.multiplicative(local)[:K])


def eigen_relation_residual(sys: HeckeEigenSystem, a: IdealRep, b: IdealRep) -> float:
    """|lambda(a) lambda(b) - sum_{(d) | gcd} lambda(ab / d^2)|."""
    g = ideal_gcd(a, b)
    ab = ideal_mul(a, b)
    rhs = 0.0
    for d in divisors(g):
        rhs += sys.value(ideal_div(ab, ideal_mul(d, d)))
    return abs(sys.value(a) * sys.value(b) - rhs)


def _need_abs(s: complex, bound: float, what: str):
    if s.real < bound:
        raise DomainError(f"{what} needs Re s >= {bound}, got {s}")


def standard_l(s, sys: HeckeEigenSystem, ch: GrossenChar, X: int = 10**4,
               method: str = "euler") -> complex:
    """L(s, phi, m) by its Euler product or its Dirichlet series."""
    s = complex(s)
    _need_abs(s, 2.0, "standard L-function")
    tab = mult_table(sys.field, X)
    if method == "euler":
        pidx = tab.prime_idx[tab.norms[tab.prime_idx] <= X]
        lam = np.array([sys.prime_values.get(tab.ideals[i].key, 0.0) for i in pidx])
        c = tab.prime_chi(ch.rho, pidx)
        x = np.exp(-s * np.log(tab.norms[pidx].astype(float)))
        return complex(np.exp(-np.sum(np.log(1 - c * lam * x + c * c * x * x))))
    if method == "series":
        K = _restrict(tab, X)
        vals = eigen_values(sys, X) * chi_elem_value(ch.rho, tab.embeddings[:K])
        return complex(dirichlet_eval(*aggregate(tab.norms[:K], vals), s)[0])
    raise ValueError(f"unknown method {method!r}")


def _zeta_trunc(s: complex, field: FieldData, m, X: int) -> complex:
    return zeta_series(s, grossen_char(field, m), X).value


def ramanujan_identity_residual(s, mprime: GrossenChar, m: GrossenChar, a: complex,
                                X: int = 10**4) -> float:
    """Divisor-sum identity

        sum chi_{m'}(a) |sigma_{a,m}(a)|^2 N(a)^{-s}
            = zeta(s,m')^2 zeta(s-a, m'+2m) zeta(s+a, m'-2m) / zeta(2s, 2m')

    with both sides truncated at norm X.
    """
    s, a = complex(s), complex(a)
    _need_abs(s, 2.5, "divisor identity")
    if abs(a.real) > 1e-14:
        raise DomainError("the shift a must be purely imaginary")
    field = m.field
    tab = mult_table(field, X)
    K = _restrict(tab, X)
    logN = np.log(tab.norms.astype(float))
    z = chi_elem_value(2 * m.rho, tab.embeddings) * np.exp(a * logN)   # per ideal; used at primes
    cp = chi_elem_value(mprime.rho, tab.embeddings)

    def local(p, e):
        zp = z[p]
        sig = np.where(np.abs(zp - 1) < 1e-14, e + 1.0,
                       (1 - zp ** (e + 1)) / np.where(np.abs(zp - 1) < 1e-14, 1, 1 - zp))
        return cp[p] ** e * np.abs(sig) ** 2

    lhs = complex(dirichlet_eval(*aggregate(tab.norms[:K], tab.multiplicative(local)[:K]), s)[0])
    mp = np.array(mprime.m, dtype=int)
    mm = np.array(m.m, dtype=int)
    rhs = (_zeta_trunc(s, field, mp, X) ** 2
           * _zeta_trunc(s - a, field, mp + 2 * mm, X)
           * _zeta_trunc(s + a, field, mp - 2 * mm, X)
           / _zeta_trunc(2 * s, field, 2 * mp, X))
    return abs(lhs - rhs)


def rs_identity_residual(s, t: float, m: GrossenChar, sys: HeckeEigenSystem,
                         X: int = 10**4) -> float:
    """R(s) = sum chi_{2m}(a) N(a)^{it-s} sigma_{-2it,-m}(a) lambda(a)
    against L(s-it, phi, 2m) L(s+it, phi, 0) / zeta(2s, 2m)."""
    s = complex(s)
    _need_abs(s, 2.5, "R(s) identity")
    field = m.field
    tab = mult_table(field, X)
    K = _restrict(tab, X)
    logN = np.log(tab.norms.astype(float))
    z = chi_elem_value(-2 * m.rho, tab.embeddings) * np.exp(-2j * t * logN)
    lam = eigen_values(sys, X)

    def local(p, e):
        zp = z[p]
        near = np.abs(zp - 1) < 1e-14
        return np.where(near, e + 1.0, (1 - zp ** (e + 1)) / np.where(near, 1, 1 - zp))

    sig = tab.multiplicative(local)[:K]
    c2 = chi_elem_value(2 * m.rho, tab.embeddings[:K])
    lhs_vals = c2 * np.exp(1j * t * logN[:K]) * sig * lam
    lhs = complex(dirichlet_eval(*aggregate(tab.norms[:K], lhs_vals), s)[0])
    two = grossen_char(field, 2 * np.array(m.m, dtype=int))
    triv = grossen_char(field)
    rhs = (standard_l(s - 1j * t, sys, two, X, method="series")
           * standard_l(s + 1j * t, sys, triv, X, method="series")
           / zeta_series(2 * s, two, X).value)
    return abs(lhs - rhs)
