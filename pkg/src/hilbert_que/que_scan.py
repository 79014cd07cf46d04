"""The measure |E(z, 1/2 + it, m)|^2 dmu tested against incomplete Eisenstein series.

After unfolding, the integral splits as F1(t) + F2(t).  F1 is a quadrature
over the reduced cone.  F2 is evaluated directly (not by contour shifting):
the integral over R_+^n only depends on l through N(l), and in logarithmic
coordinates it is a convolution of one-dimensional Bessel profiles, so one
FFT convolution serves every ideal.  The contour-shift pieces (B_k and the
residue at r = 1) are kept for the log t asymptotics and as a cross-check.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.signal import fftconvolve

from .eisenstein import _sigma_values, eis_params, fourier_support, incomplete_integral, scattering_phi
from .field_core import FieldData, fund_domain_inverse, get_field
from .ideal_arith import GrossenChar, chi_elem_value, grossen_char
from .lfun import dedekind_laurent, mult_table, zeta_derivative, zeta_value
from .special_fn import (DEFAULT_QUAD, PoleError, QuadratureSpec, TestFunction, bessel_k,
                         catalog, cloggamma, digamma, mellin)

T_GRID_MAX = 80.0
L_MAX = 500


class TailWarning(RuntimeWarning):
    pass


@dataclass
class QueConfig:
    field: str
    m: tuple = ()
    k: tuple = ()
    h: TestFunction = dc_field(default_factory=lambda: catalog("bump"))
    t_grid: list = dc_field(default_factory=lambda: [5.0, 10.0, 20.0])
    bessel_cap: int | None = None
    quadrature: QuadratureSpec = DEFAULT_QUAD

    def __post_init__(self):
        if list(self.t_grid) != sorted(self.t_grid):
            raise ValueError("t_grid must be sorted ascending")
        if any(t <= 0 or t > T_GRID_MAX for t in self.t_grid):
            raise ValueError(f"t values must lie in (0, {T_GRID_MAX}]")
        if self.bessel_cap is not None and self.bessel_cap > L_MAX:
            raise ValueError(f"bessel_cap must be <= {L_MAX}")


def que_constant(field: FieldData, count_sign_classes: bool = False) -> float:
    """Theta = pi^n n R / (2 D zeta_K(2)).

    With count_sign_classes the 2^n orbits per ideal in the unfolded l-sum
    are kept, which is the limit the direct F2 evaluation follows.
    """
    n = field.degree
    z2 = zeta_value(2.0, grossen_char(field)).real
    mult = 2 ** n if count_sign_classes else 1
    return mult * math.pi ** n * n * field.regulator / (2 * field.discriminant * z2)


# ---------------------------------------------------------------------------
# Parseval density
# ---------------------------------------------------------------------------

def _bessel_profile(b: float, u: np.ndarray) -> np.ndarray:
    """|K_{ib}(u)|^2 / |Gamma(1/2 + ib)|^2."""
    k = bessel_k(1j * b, u)
    return np.abs(k) ** 2 * math.exp(-2 * float(cloggamma(0.5 + 1j * b).real))


def parseval_density(y, t: float, m: GrossenChar, L: int | None = None,
                     cutoff: float = 20.0) -> float:
    """(1/sqrt D) int_F |E(x + iy, 1/2 + it, m)|^2 dx from the Fourier coefficients.

    The l-sum runs over all nonzero l in O whose Bessel factors are above
    exp(-2 cutoff) relative to the peak (optionally also |N(l)| <= L).
    """
    field = m.field
    n = field.degree
    y = np.asarray(y, dtype=float)
    py = float(np.prod(y))
    s = 0.5 + 1j * t
    phi = scattering_phi(s, m)
    chi2 = complex(chi_elem_value(2 * m.rho, y))
    first = 2 * py + 2 * (py ** (1 + 2j * t) * chi2 * np.conj(phi)).real
    b = t + m.rho
    pts = fourier_support(field, y, b, cutoff, L)
    if len(pts) == 0:
        return float(first)
    emb = pts @ field.basis.T
    omega = field.omega.embeddings
    nmax = int(np.max(np.rint(np.abs(np.prod(emb, axis=1)))))
    mt = mult_table(field, max(nmax, 2))
    sig = _sigma_values(mt, s, m)[mt.index_of(emb)]
    arg = 2 * math.pi * np.abs(emb / omega) * y
    prof = np.ones(len(emb))
    for j in range(n):
        prof *= _bessel_profile(b[j], arg[:, j])
    z1 = zeta_value(1 + 2j * t, m.scaled(-2))
    pref = 4 ** n * math.pi ** n * py / (field.discriminant * abs(z1) ** 2)
    return float(first + pref * np.sum(np.abs(sig) ** 2 * prof))


def parseval_x_quadrature(y, t: float, m: GrossenChar) -> float:
    """Mean of |E|^2 over the fundamental mesh of O at height y, by a uniform grid.

    x = sum_i u_i a_i with u in [0,1)^n; every Fourier mode is an integer
    frequency in u, so a grid finer than twice the largest frequency is exact.
    """
    from .eisenstein import fourier_expansion
    field = m.field
    n = field.degree
    p = eis_params(0.5 + 1j * t, m)
    fe = fourier_expansion(y, p)
    kint = fe.freqs @ field.basis          # Tr(l a_i / omega)
    M = 2 * int(np.max(np.abs(np.rint(kint)), initial=0)) + 2
    u = np.arange(M) / M
    grid = np.stack(np.meshgrid(*([u] * n), indexing="ij"), axis=-1).reshape(-1, n)
    x = grid @ field.basis.T
    total = 0.0
    for chunk in np.array_split(np.arange(len(x)), max(1, len(x) // 4096)):
        total += float(np.sum(np.abs(fe(x[chunk])) ** 2))
    return total / len(x)


# ---------------------------------------------------------------------------
# F1
# ---------------------------------------------------------------------------

def _log_nodes(h: TestFunction, t: float, nodes: int = 20):
    lo, hi = h.log_support()
    # resolve the oscillation of P^{2it} and the shape of h
    panels = max(16, int(math.ceil((hi - lo) * (t + 2) / 2.0)))
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * (edges[1] - edges[0])
    L = (0.5 * (edges[:-1] + edges[1:])[:, None] + half * xg[None, :]).ravel()
    return L, np.tile(half * wg, panels)


def _angle_nodes(n: int, nodes: int = 24):
    if n == 1:
        return np.zeros((1, 0)), np.ones(1)
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    ang = np.stack([g.ravel() for g in np.meshgrid(*([xg] * (n - 1)), indexing="ij")], axis=1)
    w = np.prod(np.meshgrid(*([wg] * (n - 1)), indexing="ij"), axis=0).ravel()
    return ang, w


def _cone_quadrature(field: FieldData, h: TestFunction, t: float, fn, ang_nodes: int = 24):
    """int_{U_inf} h(prod y) fn(y) dy, with dy = R dP dy~ on the reduced cone."""
    n = field.degree
    L, Lw = _log_nodes(h, t)
    ang, aw = _angle_nodes(n, ang_nodes)
    P = np.exp(L)
    yt = np.concatenate([np.repeat(P, len(ang))[:, None], np.tile(ang, (len(P), 1))], axis=1)
    ys = fund_domain_inverse(field, yt)
    vals = fn(ys).reshape(len(P), len(ang))
    inner = vals @ aw
    # dP = P dL
    return field.regulator * np.sum(Lw * P * h(P) * inner)


def f1_term(h: TestFunction, k: GrossenChar, m: GrossenChar, t: float) -> complex:
    """2 sqrt D int_{U_inf} h(P)(P + Re(P^{1+2it} chi_2m(y) conj phi)) chi_k(y) dy / P^2."""
    field = m.field
    phi = scattering_phi(0.5 + 1j * t, m)

    def fn(ys):
        P = np.prod(ys, axis=1)
        osc = (P ** (1 + 2j * t) * chi_elem_value(2 * m.rho, ys) * np.conj(phi)).real
        return (P + osc) * chi_elem_value(k.rho, ys) / P ** 2

    return complex(2 * math.sqrt(field.discriminant) * _cone_quadrature(field, h, t, fn))


def f1_closed(h: TestFunction, k: GrossenChar, m: GrossenChar, t: float) -> complex:
    """F1 from the angular orthogonality relations (used as an oracle).

    On the cone chi_k(y) = exp(i pi k.y~) and chi_2m(y) = exp(2 pi i m.y~), so
    the angular integral of each summand is 2^{n-1} times a Kronecker delta.
    """
    field = m.field
    n = field.degree
    lo, hi = h.log_support()
    x = np.linspace(lo, hi, 20001)
    P = np.exp(x)
    phi = scattering_phi(0.5 + 1j * t, m)
    kv, mv = np.asarray(k.m, dtype=int), np.asarray(m.m, dtype=int)
    vol = 2.0 ** (n - 1)
    out = 0j
    if not np.any(kv):
        out += vol * np.trapezoid(h(P), x)
    A = np.trapezoid(h(P) * P ** (2j * t), x) * np.conj(phi)
    # Re(A e^{2 pi i m.th}) e^{i pi k.th} = (A e^{i pi (k+2m).th} + conj(A) e^{i pi (k-2m).th}) / 2
    if not np.any(kv + 2 * mv):
        out += 0.5 * vol * A
    if not np.any(kv - 2 * mv):
        out += 0.5 * vol * np.conj(A)
    return complex(2 * math.sqrt(field.discriminant) * field.regulator * out)


# ---------------------------------------------------------------------------
# F2
# ---------------------------------------------------------------------------

@dataclass
class F2Result:
    value: complex
    tail: float
    n_ideals: int


def _norm_kernel(field: FieldData, h: TestFunction, t: float, k: GrossenChar, m: GrossenChar,
                 dv: float | None = None, decay: float = 28.0):
    """The function N -> int_{R_+^n} h(c_N prod u) prod_j g_j(u_j) u_j^{i rho_j(k)} du_j/u_j.

    g_j(u) = |K_{i b_j}(u)|^2/|Gamma(1/2 + i b_j)|^2 with b_j = t + rho_j(m) and
    c_N = D / ((2 pi)^n N).  In v_j = log u_j the product becomes a
    convolution over S = sum v_j, evaluated once on a uniform grid.
    Returns (callable on arrays of N, largest N with a non-negligible value).
    """
    n = field.degree
    b = t + m.rho
    rk = k.rho
    if dv is None:
        dv = min(0.01, 0.4 / (np.max(np.abs(b)) + 1))
    lo_h, hi_h = h.log_support()
    logc1 = math.log(field.discriminant) - n * math.log(2 * math.pi)
    vmax = np.log(np.abs(b) + decay)
    s_min = lo_h - logc1
    vmin = s_min - (vmax.sum() - vmax)
    phi = None
    start = 0.0
    for j in range(n):
        v = np.arange(vmin[j], vmax[j] + dv, dv)
        g = _bessel_profile(b[j], np.exp(v)) * np.exp(1j * rk[j] * v)
        if phi is None:
            phi, start = g, v[0]
        else:
            phi = fftconvolve(phi, g) * dv
            start += v[0]
    S = start + dv * np.arange(len(phi))
    # h(c_N e^S) vanishes once S + log c_N > hi_h for every S on the grid
    n_max = int(math.exp(S[-1] + logc1 - lo_h)) + 1

    def kernel(N):
        N = np.atleast_1d(np.asarray(N, dtype=float))
        logc = logc1 - np.log(N)
        w = np.exp(logc[:, None] + S[None, :])
        return dv * (h(w) @ phi)

    return kernel, n_max


def f2_term(h: TestFunction, k: GrossenChar, m: GrossenChar, t: float,
            L: int | None = None) -> F2Result:
    """F2(t) by direct integration over R_+^n of the orbit-wise l-sum.

    Orbits of O* under totally positive units correspond to (ideal, sign
    pattern) pairs; all 2^n sign patterns give the same integral, and for the
    orbit of the ideal (a) the integral equals chi_k(omega) conj(chi_k(a)) J(N(a)).
    """
    field = m.field
    n = field.degree
    s = 0.5 + 1j * t
    kernel, n_max = _norm_kernel(field, h, t, k, m)
    cap = n_max if L is None else min(L, n_max)
    mt = mult_table(field, max(n_max, 2))
    K = int(np.searchsorted(mt.norms, n_max, side="right"))
    sig2 = np.abs(_sigma_values(mt, s, m)[:K]) ** 2
    chik = np.conj(chi_elem_value(k.rho, mt.embeddings[:K])) * complex(
        chi_elem_value(k.rho, field.omega.embeddings))
    J = kernel(mt.norms[:K])
    terms = 2 ** n * sig2 * chik * J
    z1 = zeta_value(1 + 2j * t, m.scaled(-2))
    pref = 4 ** n * math.pi ** n / (math.sqrt(field.discriminant) * abs(z1) ** 2)
    inside = mt.norms[:K] <= cap
    value = complex(pref * np.sum(terms[inside]))
    tail = float(abs(pref * np.sum(terms[~inside])))
    if tail > 0.01 * abs(value):
        warnings.warn(f"F2 tail {tail:.3g} beyond cap {cap} exceeds 1% of the value",
                      TailWarning, stacklevel=2)
    return F2Result(value, tail, int(np.sum(inside)))


def density_integral(h: TestFunction, k: GrossenChar, m: GrossenChar, t: float,
                     ang_nodes: int = 16) -> complex:
    """sqrt D int_{U_inf} h(P) D_t(y) chi_k(y) dy / P^2 with the Parseval density D_t.

    Oracle for F1 + F2: the density is summed over all l at every node.
    """
    field = m.field

    def fn(ys):
        out = np.array([parseval_density(yy, t, m) for yy in ys])
        P = np.prod(ys, axis=1)
        return out * chi_elem_value(k.rho, ys) / P ** 2

    return complex(math.sqrt(field.discriminant) * _cone_quadrature(field, h, t, fn, ang_nodes))


# ---------------------------------------------------------------------------
# contour-shift pieces
# ---------------------------------------------------------------------------

def b_integrand(r, t: float, h: TestFunction, k: GrossenChar, m: GrossenChar) -> complex:
    """B_k(r, t, h): the Mellin-side integrand of F2."""
    r = complex(r)
    field = m.field
    n = field.degree
    if k.is_trivial and (abs(r - 1) < 1e-12 or abs(r - 1 - 2j * t) < 1e-12
                         or abs(r - 1 + 2j * t) < 1e-12):
        raise PoleError(f"B_0 has a pole at r = {r}")
    z_a = zeta_value(r, k.conj())
    z_b = zeta_value(r + 2j * t, grossen_char(field, tuple(-a - 2 * c for a, c in zip(k.m, m.m))))
    z_c = zeta_value(r - 2j * t, grossen_char(field, tuple(-a + 2 * c for a, c in zip(k.m, m.m))))
    z_d = zeta_value(2 * r, k.scaled(-2))
    w = 1j * k.rho + r
    b = t + m.rho
    lg = (np.sum(w * np.log(field.omega.embeddings)) + np.sum(2 * cloggamma(w / 2) - cloggamma(w))
          + np.sum(cloggamma(w / 2 + 1j * b) + cloggamma(w / 2 - 1j * b)))
    return complex(mellin(h, r) * z_a ** 2 * z_b * z_c / z_d
                   * np.exp(lg - n * r * math.log(math.pi)))


def f2_prefactor(t: float, m: GrossenChar) -> float:
    """(pi/2)^n / (sqrt D |zeta(1+2it,-2m)|^2 prod_j |Gamma(1/2+it+i rho_j)|^2)."""
    field = m.field
    n = field.degree
    z1 = zeta_value(1 + 2j * t, m.scaled(-2))
    lg = float(np.sum(2 * cloggamma(0.5 + 1j * (t + m.rho)).real))
    return (math.pi / 2) ** n / (math.sqrt(field.discriminant) * abs(z1) ** 2) * math.exp(-lg)


def f2_contour(h: TestFunction, k: GrossenChar, m: GrossenChar, t: float,
               width: float = 60.0, nodes: int = 1200) -> complex:
    """F2 as (prefactor / 2 pi) int B_k(2 + iw) dw (no contour shift)."""
    w = np.linspace(-width, width, nodes + 1)
    vals = np.array([b_integrand(2 + 1j * ww, t, h, k, m) for ww in w])
    return complex(f2_prefactor(t, m) / (2 * math.pi) * np.trapezoid(vals, w))


def _log_g(r: float, t: float, h: TestFunction, m: GrossenChar) -> float:
    """log |G(r, t, h)| with B_0 = zeta(r, 0)^2 G for real r near 1."""
    field = m.field
    n = field.degree
    ch0 = grossen_char(field)
    b = t + m.rho
    val = (math.log(abs(mellin(h, r))) + math.log(abs(zeta_value(r + 2j * t, m.scaled(-2))))
           + math.log(abs(zeta_value(r - 2j * t, m.scaled(2))))
           - math.log(zeta_value(2 * r, ch0).real) - n * r * math.log(math.pi)
           + r * math.log(field.discriminant))
    val += float(np.sum(2 * cloggamma(r / 2).real - cloggamma(r).real
                        + (cloggamma(r / 2 + 1j * b) + cloggamma(r / 2 - 1j * b)).real))
    return val


def _g_log_derivative_tpart(t: float, m: GrossenChar) -> float:
    """The t-dependent part of G'/G(1): zeta'/zeta at 1 +- 2it and the digamma pair."""
    chm = m.scaled(-2)
    s = 1 + 2j * t
    zl = zeta_derivative(s, chm) / zeta_value(s, chm)
    b = t + m.rho
    return float(2 * zl.real + np.sum(digamma(0.5 + 1j * b).real))


def g_log_derivative_numeric(t: float, h: TestFunction, m: GrossenChar, step: float = 1e-4) -> float:
    """G'(1)/G(1) by central differences of log G in r."""
    f = lambda r: _log_g(r, t, h, m)
    d1 = (f(1 + step) - f(1 - step)) / (2 * step)
    d2 = (f(1 + step / 2) - f(1 - step / 2)) / step
    return (4 * d2 - d1) / 3


@dataclass
class ConstantFit:
    value: float
    residual: float
    t_values: tuple


def fit_g_constant(h: TestFunction, m: GrossenChar, t_values=(3.0, 6.0)) -> ConstantFit:
    """The t-independent constant C in G'/G, from two t values."""
    cs = [g_log_derivative_numeric(t, h, m) - _g_log_derivative_tpart(t, m) for t in t_values]
    return ConstantFit(float(np.mean(cs)), float(abs(cs[0] - cs[1])), tuple(t_values))


def g_constant_closed(h: TestFunction, field: FieldData, step: float = 1e-5) -> float:
    """C = (Mh)'/(Mh)(1) - 2 zeta'(2)/zeta(2) - n log pi + log D + n (psi(1/2) - psi(1))."""
    n = field.degree
    ch0 = grossen_char(field)
    dm = (mellin(h, 1 + step) - mellin(h, 1 - step)) / (2 * step) / mellin(h, 1)
    dz = zeta_derivative(2.0, ch0) / zeta_value(2.0, ch0)
    return float(dm.real - 2 * dz.real - n * math.log(math.pi) + math.log(field.discriminant)
                 + n * (digamma(0.5).real - digamma(1.0).real))


def residue_main_term(t: float, h: TestFunction, m: GrossenChar,
                      constant: ConstantFit | None = None,
                      count_sign_classes: bool = False) -> float:
    """Contribution of the pole at r = 1 to F2 (trivial test character).

    Uses the cancelled form (pi/2)^n sqrt D (Mh)(1) / zeta_K(2) *
    zeta_{-1} (2 zeta_0 + zeta_{-1} G'/G); residue_cancellation_check
    compares it with the uncancelled product.  The Mellin-side series is
    a sum over ideals, while the orbit sum it replaces has 2^n orbits
    (one per sign pattern) above each ideal; count_sign_classes=True
    restores that factor.
    """
    field = m.field
    n = field.degree
    if constant is None:
        constant = fit_g_constant(h, m)
    lau = dedekind_laurent(field)
    z2 = zeta_value(2.0, grossen_char(field)).real
    gpg = _g_log_derivative_tpart(t, m) + constant.value
    mult = 2 ** n if count_sign_classes else 1
    return float(mult * (math.pi / 2) ** n * math.sqrt(field.discriminant) * mellin(h, 1).real / z2
                 * lau.residue * (2 * lau.constant + lau.residue * gpg))


def residue_cancellation_check(t: float, h: TestFunction, m: GrossenChar) -> float:
    """Relative gap between prefactor * G(1) and its cancelled closed form."""
    field = m.field
    n = field.degree
    z2 = zeta_value(2.0, grossen_char(field)).real
    zt = zeta_value(1 - 2j * t, m.scaled(2))
    lg = float(np.sum(2 * cloggamma(0.5 + 1j * (t + m.rho)).real))
    G1 = (mellin(h, 1).real * abs(zt) ** 2 / (z2 * math.pi ** n) * field.discriminant
          * math.pi ** n * math.exp(lg))
    full = f2_prefactor(t, m) * G1
    cancelled = (math.pi / 2) ** n * math.sqrt(field.discriminant) * mellin(h, 1).real / z2
    return abs(full - cancelled) / abs(cancelled)


# ---------------------------------------------------------------------------
# scans
# ---------------------------------------------------------------------------

@dataclass
class ScanRow:
    t: float
    f1: complex
    f2: complex
    total: float
    total_over_logt: float
    theta_target: float
    status: str


def _target(field: FieldData, h: TestFunction, k: GrossenChar) -> float:
    if not k.is_trivial:
        return 0.0
    return que_constant(field) * incomplete_integral(h, k).real


def que_scan(cfg: QueConfig) -> list[ScanRow]:
    """One row per t: F1, F2, the total and its ratio to log t.

    For a nontrivial test character the f2 and total columns carry moduli.
    """
    field = get_field(cfg.field)
    n = field.degree
    m = grossen_char(field, cfg.m or (0,) * (n - 1))
    k = grossen_char(field, cfg.k or (0,) * (n - 1))
    target = _target(field, cfg.h, k)
    rows = []
    for t in cfg.t_grid:
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", TailWarning)
                f1 = f1_term(cfg.h, k, m, t)
                f2 = f2_term(cfg.h, k, m, t, cfg.bessel_cap).value
            status = "tail" if caught else "ok"
            tot = f1 + f2
            if k.is_trivial:
                total, f2c = tot.real, complex(f2.real)
            else:
                total, f2c = abs(tot), complex(abs(f2))
            rows.append(ScanRow(t, f1, f2c, total, total / math.log(t), target, status))
        except Exception as exc:  # row-level failure, keep scanning
            rows.append(ScanRow(t, complex("nan"), complex("nan"), math.nan, math.nan, target,
                                f"error:{type(exc).__name__}"))
    return rows


def trend_fraction(rows: list[ScanRow]) -> float:
    """Share of consecutive grid pairs along which total/log t moves toward the target."""
    good = [r for r in rows if r.status in ("ok", "tail")]
    if len(good) < 2:
        return math.nan
    steps = [abs(b.total_over_logt - b.theta_target) < abs(a.total_over_logt - a.theta_target)
             for a, b in zip(good, good[1:])]
    return sum(steps) / len(steps)


CSV_COLUMNS = ("t", "f1_re", "f1_im", "f2", "total", "total_over_logt", "theta_target", "status")


def rows_to_csv(rows: list[ScanRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([f"{r.t:.17g}", f"{r.f1.real:.17g}", f"{r.f1.imag:.17g}", f"{r.f2.real:.17g}",
                    f"{r.total:.17g}", f"{r.total_over_logt:.17g}", f"{r.theta_target:.17g}",
                    r.status])
    return buf.getvalue()
