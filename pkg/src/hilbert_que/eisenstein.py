"""Eisenstein series for the Hilbert modular group.

Two evaluators: the coset sum over classes of coprime pairs (c, d) modulo
units (convergent for Re s > 1, used as an oracle) and the Fourier expansion
(production path, valid on the whole continuation envelope).  Also the
scattering function and incomplete Eisenstein series.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .field_core import FieldData, OElem, fund_domain_inverse, fund_domain_map
from .ideal_arith import (CapExceeded, GrossenChar, MAX_ENUM, _sign_units, box_points,
                          chi_elem_value, reduce_exponents)
from .lfun import SeriesValue, mult_table, zeta_value
from .special_fn import (DomainError, TestFunction, bessel_k, cloggamma,
                         h_over_w2_integral)

FOURIER_CUTOFF = 36.0       # Bessel argument excess beyond the turning point
Y_MIN_FOURIER = 0.3


@dataclass(frozen=True, eq=False)
class EisParams:
    s: complex
    chi: GrossenChar
    s_vec: np.ndarray

    @property
    def field(self) -> FieldData:
        return self.chi.field


def eis_params(s, ch: GrossenChar) -> EisParams:
    s = complex(s)
    s_vec = s + 1j * ch.rho
    field = ch.field
    # Prod |u_j|^{2 s_j} = 1 for every stored unit
    for u in field.units:
        val = np.exp(2 * np.sum(s_vec * np.log(np.abs(u))))
        if abs(val - 1) > 1e-10:
            raise ValueError("s_vec violates the unit condition")
    return EisParams(s, ch, s_vec)


@dataclass(frozen=True)
class HPoint:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if x.shape != y.shape:
            raise ValueError("x and y need the same length")
        if np.any(y <= 0):
            raise ValueError("y_j must be positive")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_complex(cls, zs) -> "HPoint":
        zs = np.atleast_1d(np.asarray(zs, dtype=complex))
        return cls(zs.real, zs.imag)

    @property
    def z(self) -> np.ndarray:
        return self.x + 1j * self.y


def act(gamma, z: HPoint) -> HPoint:
    """Componentwise Moebius action of gamma = (a, b, c, d) with entries in O."""
    a, b, c, d = (np.asarray(g.embeddings if isinstance(g, OElem) else g, dtype=float)
                  for g in gamma)
    w = (a * z.z + b) / (c * z.z + d)
    return HPoint.from_complex(w)


# ---------------------------------------------------------------------------
# coset classes
# ---------------------------------------------------------------------------

def _not_divisible(field: FieldData, d_emb: np.ndarray, p_emb: np.ndarray) -> np.ndarray:
    q = (d_emb / p_emb[None, :]) @ field.basis_inv.T
    return np.any(np.abs(q - np.rint(q)) > 1e-6, axis=1)


def _canonical_unit(field: FieldData, c_emb: np.ndarray) -> np.ndarray:
    """Embeddings of the unit u with u*c the canonical generator of (c)."""
    sign_units = _sign_units(field)
    codes = [tuple(int(v) for v in np.sign(row)) for row in c_emb]
    u = np.array([sign_units[sg].embeddings for sg in codes])
    if field.degree > 1:
        k = reduce_exponents(field, c_emb * u)
        u = u * np.exp(2.0 * (k @ field.log_units))
    return u


def coprime_pairs(field: FieldData, X: float) -> list[tuple[OElem, OElem]]:
    """Unit classes of coprime (c, d) with max_j(|c_j|, |d_j|) <= X.

    Each class is returned once, as (canonical generator of (c), matching d),
    or (0, 1) for the class with c = 0.
    """
    n = field.degree
    box = box_points(field, -X * np.ones(n), X * np.ones(n))
    if len(box) ** 2 > MAX_ENUM:
        raise CapExceeded(f"{len(box)}^2 candidate pairs exceed {MAX_ENUM}")
    emb = box @ field.basis.T
    nz = np.any(box != 0, axis=1)
    c_emb, d_emb = emb[nz], emb
    mt = mult_table(field, max(2, int(math.ceil(X ** n))))
    c_idx = mt.index_of(c_emb)
    u = _canonical_unit(field, c_emb)
    seen: dict = {}
    out = [(OElem(field, [0] * n), field.one())]
    for i in range(len(c_emb)):
        ok = np.any(box != 0, axis=1) | (mt.norms[c_idx[i]] == 1)
        for pidx in mt.prime_factors(int(c_idx[i])):
            ok &= _not_divisible(field, d_emb, mt.embeddings[pidx])
        g = c_emb[i] * u[i]
        dd = d_emb[ok] * u[i][None, :]
        gk = tuple(np.rint(g @ field.basis_inv.T).astype(int).tolist())
        for row in np.rint(dd @ field.basis_inv.T).astype(int).tolist():
            key = (gk, tuple(row))
            if key not in seen:
                seen[key] = True
                out.append((OElem(field, gk), OElem(field, row)))
    return out


def coset_images(field: FieldData, z: HPoint, T: float) -> np.ndarray:
    """Im(gamma z) (rows of n values) for all classes with prod_j |c_j z_j + d_j|^2 <= T.

    c runs over canonical ideal generators, so each class appears once; the
    first row is the identity class (0, 1).
    """
    x, y = z.x, z.y
    py = float(np.prod(y))
    Nmax = math.sqrt(T) / py
    rows = [y[None, :]]
    if Nmax < 1:
        return rows[0]
    mt = mult_table(field, max(2, int(Nmax)))
    K = int(np.searchsorted(mt.norms, Nmax, side="right"))
    total = 0
    for i in range(K):
        g = mt.embeddings[i]
        b = np.abs(g) * y
        pb = float(np.prod(b))
        A2 = T * b ** 2 / pb ** 2 - b ** 2
        if pb * pb > T or np.any(A2 < 0):
            continue
        A = np.sqrt(A2)
        centre = -g * x
        pts = box_points(field, centre - A, centre + A)
        total += len(pts)
        if total > 50 * MAX_ENUM:
            raise CapExceeded("coset enumeration too large; lower T")
        d = pts @ field.basis.T
        a = g[None, :] * x[None, :] + d
        q = a * a + b[None, :] ** 2
        keep = np.prod(q, axis=1) <= T
        if i > 0:
            for pidx in mt.prime_factors(i):
                keep &= _not_divisible(field, d, mt.embeddings[pidx])
        rows.append(y[None, :] / q[keep])
    return np.concatenate(rows)


def _heights(field: FieldData, z: HPoint, im: np.ndarray) -> np.ndarray:
    return np.prod(z.y) / np.prod(im, axis=1)


def eisenstein_direct(z: HPoint, p: EisParams, X: float | None = None) -> SeriesValue:
    """Coset sum of prod_j Im(gamma z_j)^{s_j}, truncated at height X.

    The class-invariant height is prod_j |c_j z_j + d_j|^2.  For the trivial
    character the tail behaves like C X^{1-s}; it is removed by Richardson
    extrapolation between X and X/4 and the size of that correction is
    reported as the tail estimate.  For m != 0 no such main term exists and
    the reported tail is |S(X) - S(X/4)|.
    """
    field = p.field
    if p.s.real < 1.3:
        raise DomainError("direct Eisenstein sum needs Re s >= 1.3")
    if X is None:
        X = {1: 1e6, 2: 1e5, 3: 2e4}[field.degree]
    im = coset_images(field, z, X)
    H = _heights(field, z, im)
    terms = np.exp(np.log(im) @ p.s_vec)
    order = np.argsort(H, kind="stable")
    H, terms = H[order], terms[order]
    full = complex(terms.sum())
    quarter = complex(terms[H <= X / 4].sum())
    if p.chi.is_trivial:
        corr = (full - quarter) / (4 ** (p.s - 1) - 1)
        return SeriesValue(full + corr, float(abs(corr)))
    return SeriesValue(full, float(abs(full - quarter)))


# ---------------------------------------------------------------------------
# scattering function and Fourier expansion
# ---------------------------------------------------------------------------

def scattering_phi(s, ch: GrossenChar) -> complex:
    """phi(s, m) = zeta(2s-1,-2m) pi^{n/2} / (zeta(2s,-2m) sqrt D) prod Gamma(s_j-1/2)/Gamma(s_j)."""
    s = complex(s)
    field = ch.field
    n = field.degree
    ch2 = ch.scaled(-2)
    s_vec = s + 1j * ch.rho
    lg = np.sum(cloggamma(s_vec - 0.5) - cloggamma(s_vec))
    z1 = zeta_value(2 * s - 1, ch2)
    z2 = zeta_value(2 * s, ch2)
    return complex(z1 / z2 * math.pi ** (n / 2) / math.sqrt(field.discriminant) * np.exp(lg))


def _sigma_values(mt, s, ch: GrossenChar) -> np.ndarray:
    """sigma_{1-2s,-m} over the table: sum_{c | l} chi_{-2m}(c) N(c)^{1-2s}."""
    rho = -2 * ch.rho
    expo = 1 - 2 * complex(s)

    def local(pidx, e):
        r = chi_elem_value(rho, mt.embeddings[pidx]) * mt.norms[pidx].astype(float) ** expo
        # 1 + r + ... + r^e
        with np.errstate(invalid="ignore", divide="ignore"):
            geo = (1 - r ** (e + 1)) / (1 - r)
        return np.where(np.abs(1 - r) < 1e-12, e + 1.0, geo)

    return mt.multiplicative(local)


def _coeff_prefactor(p: EisParams) -> complex:
    field = p.field
    n = field.degree
    s = p.s
    chi_diff = complex(chi_elem_value(p.chi.rho, field.omega.embeddings))
    zz = zeta_value(2 * s, p.chi.scaled(-2))
    return 2 ** n * np.exp(n * s * math.log(math.pi)) / (
        chi_diff * np.exp(s * math.log(field.discriminant)) * zz)


def fourier_coeff(l: OElem, y, p: EisParams) -> complex:
    """The l-th Fourier coefficient a_l(y, s, m), l != 0."""
    from .ideal_arith import canonicalize, sigma_divisor
    if l.is_zero():
        raise ValueError("use the constant term for l = 0")
    field = p.field
    y = np.asarray(y, dtype=float)
    sig = sigma_divisor(1 - 2 * p.s, p.chi.conj(), canonicalize(l))
    lv = l.embeddings
    arg = 2 * math.pi * np.abs(lv / field.omega.embeddings) * y
    nu = p.s_vec - 0.5
    prod = 1.0 + 0j
    for j in range(field.degree):
        prod *= (math.sqrt(y[j]) * complex(bessel_k(nu[j], arg[j]))
                 * np.exp(nu[j] * math.log(abs(lv[j])) - complex(cloggamma(p.s_vec[j]))))
    return complex(_coeff_prefactor(p) * sig * prod)


class FourierExpansion(NamedTuple):
    """E(x + iy) = a0 + sum_l coeff_l e(sum_j freq_lj x_j) at a fixed y."""
    a0: complex
    coeffs: np.ndarray
    freqs: np.ndarray        # (K, n): l_j / omega_j
    elements: np.ndarray     # (K, n) embeddings of l
    tail: float

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        phase = np.exp(2j * math.pi * (x @ self.freqs.T))
        return self.a0 + phase @ self.coeffs


def constant_term(y, p: EisParams) -> complex:
    y = np.asarray(y, dtype=float)
    py = float(np.prod(y))
    chi_y = complex(chi_elem_value(p.chi.rho, y))
    phi = scattering_phi(p.s, p.chi)
    return py ** p.s * chi_y + phi * py ** (1 - p.s) / chi_y


def fourier_support(field: FieldData, y, bessel_imag, cutoff: float = FOURIER_CUTOFF,
                    L: int | None = None) -> np.ndarray:
    """Coordinates of nonzero l whose Bessel factors are not negligible.

    Keeps l with sum_j max(0, 2 pi |l_j / omega_j| y_j - |b_j|) <= cutoff where
    b_j is the imaginary part of the Bessel order (K_{ib}(x) starts to decay
    exponentially once x passes |b|), and optionally |N(l)| <= L.
    """
    y = np.asarray(y, dtype=float)
    omega = field.omega.embeddings
    b = np.abs(np.asarray(bessel_imag, dtype=float))
    B = (b + cutoff) * omega / (2 * math.pi * y)
    pts = box_points(field, -B, B)
    pts = pts[np.any(pts != 0, axis=1)]
    emb = pts @ field.basis.T
    arg = 2 * math.pi * np.abs(emb / omega) * y
    keep = np.sum(np.maximum(0.0, arg - b), axis=1) <= cutoff
    if L is not None:
        keep &= np.abs(np.prod(emb, axis=1)) <= L + 0.5
    return pts[keep]


def fourier_expansion(y, p: EisParams, L: int | None = None,
                      cutoff: float = FOURIER_CUTOFF) -> FourierExpansion:
    field = p.field
    y = np.asarray(y, dtype=float)
    nu = p.s_vec - 0.5
    pts = fourier_support(field, y, nu.imag, cutoff, L)
    emb = pts @ field.basis.T
    omega = field.omega.embeddings
    nmax = int(np.max(np.rint(np.abs(np.prod(emb, axis=1))))) if len(emb) else 1
    mt = mult_table(field, max(nmax, 2))
    sig = _sigma_values(mt, p.s, p.chi)[mt.index_of(emb)]
    arg = 2 * math.pi * np.abs(emb / omega) * y
    logterm = np.zeros(len(emb), dtype=complex)
    kval = np.ones(len(emb), dtype=complex)
    for j in range(field.degree):
        kval *= bessel_k(nu[j], arg[:, j])
        logterm += (0.5 * math.log(y[j]) + nu[j] * np.log(np.abs(emb[:, j]))
                    - complex(cloggamma(p.s_vec[j])))
    coeffs = _coeff_prefactor(p) * sig * kval * np.exp(logterm)
    # size of the first dropped shell, from the exponential Bessel decay
    tail = float(np.max(np.abs(coeffs), initial=0.0)) * math.exp(-cutoff) * max(len(coeffs), 1)
    return FourierExpansion(constant_term(y, p), coeffs, emb / omega, emb, tail)


def eisenstein_fourier(z: HPoint, p: EisParams, L: int | None = None,
                       cutoff: float = FOURIER_CUTOFF) -> SeriesValue:
    """E(z, s, m) from its Fourier expansion."""
    if np.any(z.y < Y_MIN_FOURIER):
        raise DomainError(f"Fourier path needs y_j >= {Y_MIN_FOURIER}")
    fe = fourier_expansion(z.y, p, L, cutoff)
    return SeriesValue(complex(fe(z.x)[0]), fe.tail)


def laplace_eigenvalues(z: HPoint, p: EisParams, step: float = 1e-3) -> np.ndarray:
    """Five-point estimate of (Delta_j E)/E, Delta_j = -y_j^2 (d_xj^2 + d_yj^2)."""
    n = p.field.degree
    centre = eisenstein_fourier(z, p).value
    out = np.zeros(n, dtype=complex)
    for j in range(n):
        acc = -4 * centre
        for dx, dy in ((step, 0), (-step, 0), (0, step), (0, -step)):
            x, y = z.x.copy(), z.y.copy()
            x[j] += dx
            y[j] += dy
            acc += eisenstein_fourier(HPoint(x, y), p).value
        out[j] = -z.y[j] ** 2 * acc / step ** 2 / centre
    return out


# ---------------------------------------------------------------------------
# incomplete Eisenstein series
# ---------------------------------------------------------------------------

def incomplete_eisenstein(z: HPoint, h: TestFunction, ch: GrossenChar,
                          X: float = 1e6) -> complex:
    """sum over classes of h(prod Im gamma z) prod_j Im(gamma z_j)^{i rho_j}.

    Only classes with prod Im(gamma z) inside the support of h contribute, so
    the coset enumeration stops at height prod y / w_min; beyond X this
    raises CapExceeded.
    """
    field = ch.field
    lo, _ = h.log_support()
    T = float(np.prod(z.y)) * math.exp(-lo)
    if T > X:
        raise CapExceeded(f"support of h needs coset height {T:.3g} > {X:.3g}")
    im = coset_images(field, z, T)
    w = np.prod(im, axis=1)
    return complex(np.sum(h(w) * chi_elem_value(ch.rho, im)))


def incomplete_integral(h: TestFunction, ch: GrossenChar) -> complex:
    """Integral of F(., h, m) over the quotient: 0 for m != 0."""
    if not ch.is_trivial:
        return 0j
    field = ch.field
    n = field.degree
    return complex(2 ** (n - 1) * field.regulator * math.sqrt(field.discriminant)
                   * h_over_w2_integral(h))


def _jacobian_batch(field: FieldData, ys: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian determinant of fund_domain_map at each row."""
    n = field.degree
    J = np.empty(ys.shape[:1] + (n, n))
    for i in range(n):
        h = step * ys[:, i]
        yp, ym = ys.copy(), ys.copy()
        yp[:, i] += h
        ym[:, i] -= h
        J[:, :, i] = (fund_domain_map(field, yp) - fund_domain_map(field, ym)) / (2 * h[:, None])
    return np.linalg.det(J)


def incomplete_integral_quadrature(h: TestFunction, ch: GrossenChar,
                                   nodes: int = 24, panels: int = 40) -> complex:
    """Brute quadrature of the unfolded integral over F x U_inf.

    x runs over the fundamental mesh of O (parametrised by t in [0,1)^n, the
    Jacobian is |det basis|); y over the reduced cone in coordinates
    (prod y, y~_2..y~_n), with the Jacobian of that chart measured by finite
    differences at each node rather than taken from the closed form.
    """
    field = ch.field
    n = field.degree
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    # x part: integrand does not depend on x; quadrature of 1 over the mesh
    tw = 0.5 * wg
    mesh = abs(np.linalg.det(field.basis)) * np.sum(tw) ** n
    # log-product variable over the support of h
    lo, hi = h.log_support()
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * (edges[1] - edges[0])
    L = (0.5 * (edges[:-1] + edges[1:])[:, None] + half * xg[None, :]).ravel()
    Lw = np.tile(half * wg, panels)
    if n == 1:
        vals = h(np.exp(L)) * np.exp(-L)       # dy / y^2 with y = e^L
        return complex(mesh * np.sum(Lw * vals))
    # angular cell [-1,1]^{n-1}
    grids = np.meshgrid(*([xg] * (n - 1)), indexing="ij")
    wgrid = np.prod(np.meshgrid(*([wg] * (n - 1)), indexing="ij"), axis=0).ravel()
    ang = np.stack([g.ravel() for g in grids], axis=1)
    total = 0j
    for Lk, wk in zip(L, Lw):
        P = math.exp(Lk)
        yt = np.column_stack([np.full(len(ang), P), ang])
        ys = fund_domain_inverse(field, yt)
        jac = np.abs(_jacobian_batch(field, ys))
        vals = h(P) * chi_elem_value(ch.rho, ys) / P ** 2 / jac
        # dP = P dL
        total += wk * P * np.sum(wgrid * vals)
    return complex(mesh * total)
