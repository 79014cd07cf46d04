"""Complex Gamma and digamma, Macdonald Bessel K of complex order,
Bessel-moment closed forms, Mellin transforms of catalog test functions and
the quadrature rules used throughout the package.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
import scipy.special

LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


class PoleError(ValueError):
    pass


class DomainError(ValueError):
    pass


class CatalogError(KeyError):
    pass


class UnderflowToZero(RuntimeWarning):
    """K_nu(y) for y > 700 is below the double range and is returned as 0."""


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureSpec:
    scheme: str = "gauss-legendre"      # or "tanh-sinh"
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_depth: int = 20

    def __post_init__(self):
        if self.scheme not in ("gauss-legendre", "tanh-sinh"):
            raise ValueError(f"unknown quadrature scheme {self.scheme!r}")
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not 1 <= self.max_depth <= 30:
            raise ValueError("max_depth must lie in [1, 30]")


DEFAULT_QUAD = QuadratureSpec()


@lru_cache(maxsize=None)
def _gl(n: int):
    return np.polynomial.legendre.leggauss(n)


def _gl_panel(f, a, b, n=20):
    x, w = _gl(n)
    half = 0.5 * (b - a)
    return half * np.sum(w * f(0.5 * (a + b) + half * x))


def _adaptive_gl(f, a, b, spec: QuadratureSpec):
    total = 0.0
    stack = [(a, b, 0, _gl_panel(f, a, b))]
    while stack:
        lo, hi, depth, coarse = stack.pop()
        mid = 0.5 * (lo + hi)
        left, right = _gl_panel(f, lo, mid), _gl_panel(f, mid, hi)
        fine = left + right
        err = abs(fine - coarse)
        if err <= max(spec.abs_tol, spec.rel_tol * abs(fine)) * (hi - lo) / (b - a) or depth >= spec.max_depth:
            total += fine
        else:
            stack.append((lo, mid, depth + 1, left))
            stack.append((mid, hi, depth + 1, right))
    return total


def _tanh_sinh(f, a, b, spec: QuadratureSpec):
    half, mid = 0.5 * (b - a), 0.5 * (a + b)
    prev = None
    h = 1.0
    for level in range(min(spec.max_depth, 12)):
        k = np.arange(-int(6.0 / h), int(6.0 / h) + 1) * h
        u = 0.5 * math.pi * np.sinh(k)
        x = np.tanh(u)
        w = 0.5 * math.pi * np.cosh(k) / np.cosh(u) ** 2
        ok = np.abs(x) < 1.0
        val = h * half * np.sum(w[ok] * f(mid + half * x[ok]))
        if prev is not None and abs(val - prev) <= max(spec.abs_tol, spec.rel_tol * abs(val)):
            return val
        prev = val
        h *= 0.5
    return prev


def integrate(f: Callable, a: float, b: float, spec: QuadratureSpec = DEFAULT_QUAD):
    """Integrate a vectorised f over the finite interval [a, b]."""
    if a == b:
        return 0.0
    if spec.scheme == "tanh-sinh":
        return _tanh_sinh(f, a, b, spec)
    return _adaptive_gl(f, a, b, spec)


def integrate_halfline(f: Callable, spec: QuadratureSpec = DEFAULT_QUAD, scale: float = 1.0):
    """Integral over (0, inf) via w = scale * exp(x), x over a wide window."""
    g = lambda x: f(scale * np.exp(x)) * scale * np.exp(x)
    return integrate(g, -40.0, 8.0, spec)


# ---------------------------------------------------------------------------
# Gamma and digamma
# ---------------------------------------------------------------------------

_LANCZOS_G = 7.0
_LANCZOS_C = np.array([
    0.99999999999980993, 676.5203681218851, -1259.1392167224028,
    771.32342877765313, -176.61502916214059, 12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7])


def _loggamma_right(z: np.ndarray) -> np.ndarray:
    """log Gamma on Re z >= 1/2 (Lanczos)."""
    zm = z - 1.0
    acc = np.full(z.shape, _LANCZOS_C[0], dtype=complex)
    for k in range(1, 9):
        acc = acc + _LANCZOS_C[k] / (zm + k)
    t = zm + _LANCZOS_G + 0.5
    return LOG_SQRT_2PI + (zm + 0.5) * np.log(t) - t + np.log(acc)


def _log_sin_pi(z: np.ndarray) -> np.ndarray:
    """log sin(pi z) evaluated stably for large |Im z|."""
    out = np.empty(z.shape, dtype=complex)
    up = z.imag >= 0
    # sin(pi z) = (e^{i pi z} - e^{-i pi z}) / 2i
    zu = z[up]
    out[up] = -1j * math.pi * zu + np.log((np.exp(2j * math.pi * zu) - 1) / 2j)
    zd = z[~up]
    out[~up] = 1j * math.pi * zd + np.log((1 - np.exp(-2j * math.pi * zd)) / 2j)
    return out


def _check_poles(z: np.ndarray):
    bad = (z.imag == 0) & (z.real <= 0) & (np.abs(z.real - np.round(z.real)) < 1e-14)
    if np.any(bad):
        raise PoleError(f"Gamma has a pole at {z[bad][0]}")


def cloggamma(z):
    """log Gamma(z) for complex z (branch differs from the principal one by 2 pi i k)."""
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    _check_poles(z)
    out = np.empty(z.shape, dtype=complex)
    right = z.real >= 0.5
    out[right] = _loggamma_right(z[right])
    zl = z[~right]
    if zl.size:
        out[~right] = math.log(math.pi) - _log_sin_pi(zl) - _loggamma_right(1.0 - zl)
    return out[0] if scalar else out


def cgamma(z):
    """Gamma(z); relative accuracy ~1e-13 on |Im z| <= 500 when representable."""
    return np.exp(cloggamma(z))


_BERN = [1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510]


def digamma(z):
    """psi(z) by upward recurrence to Re z >= 16 plus the asymptotic series."""
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z).copy()
    _check_poles(z)
    refl = z.real < 0.5
    zr = np.where(refl, 1.0 - z, z)
    acc = np.zeros(z.shape, dtype=complex)
    while True:
        small = zr.real < 16
        if not np.any(small):
            break
        acc[small] -= 1.0 / zr[small]
        zr[small] += 1.0
    inv2 = 1.0 / (zr * zr)
    ser = np.zeros(z.shape, dtype=complex)
    p = inv2.copy()
    for k, b in enumerate(_BERN, start=1):
        ser += b / (2 * k) * p
        p = p * inv2
    psi = np.log(zr) - 0.5 / zr - ser + acc
    if np.any(refl):
        zz = z[refl]
        psi[refl] = psi[refl] - math.pi / np.tan(math.pi * zz)
    return psi[0] if scalar else psi


# ---------------------------------------------------------------------------
# Macdonald Bessel function
# ---------------------------------------------------------------------------

def _check_bessel_domain(nu: complex):
    if abs(nu.real) > 3 or abs(nu.imag) > 200:
        raise DomainError(f"order {nu} outside |Re nu| <= 3, |Im nu| <= 200")


def bessel_k(nu, y):
    """K_nu(y) = int_0^inf exp(-y cosh u) cosh(nu u) du for y > 0.

    The symmetric line integral is shifted to Im u = theta, where theta sits
    at the saddle point of exp(i a u - y cosh u) (a = Im nu) or, when y < |a|,
    just below pi/2.  This removes the exp(pi|a|/2) cancellation so the value
    keeps its relative accuracy even when K is exponentially small.  The
    shifted integrand is entire and decays doubly exponentially, so the
    trapezoidal rule converges geometrically; the step is set from the
    distance of the line to Im u = pi/2.
    """
    nu = complex(nu)
    _check_bessel_domain(nu)
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 0
    y = np.atleast_1d(y)
    if np.any(y <= 0):
        raise DomainError("bessel_k needs y > 0")
    out = np.zeros(y.shape, dtype=complex)
    big = y > 700
    if np.any(big):
        warnings.warn("bessel_k: y > 700 underflows, returning 0", UnderflowToZero, stacklevel=2)
    idx = np.nonzero(~big)[0]
    if idx.size:
        if nu.imag == 0.0:
            # real order: scipy's kv is exact to rounding and much faster
            out[idx] = scipy.special.kv(nu.real, y[idx])
        else:
            out[idx] = _bessel_k_line(nu, y[idx])
    return out[0] if scalar else out


def _bessel_k_line(nu: complex, y: np.ndarray) -> np.ndarray:
    sigma, a = nu.real, nu.imag
    aa = abs(a)
    sgn = 1.0 if a >= 0 else -1.0
    with np.errstate(divide="ignore"):
        saddle = np.arcsin(np.minimum(aa / y, 1.0))
    cap = max(0.0, 0.5 * math.pi - 4.0 / aa) if aa > 0 else 0.0
    theta = np.minimum(saddle, cap)
    delta = 0.5 * math.pi - theta               # distance to the blow-up line
    ct = np.cos(theta)
    # truncation: y cos(theta) cosh T >= 60 + |sigma| T
    T = np.arccosh(np.maximum(1.0, (60.0 + 3 * abs(sigma) * 8) / (y * ct)))
    T = np.maximum(T, 2.0) + 0.5
    h = np.minimum(0.25, np.pi * delta / 40.0)
    # the Gaussian width of exp(-y cosh t) near t = 0
    h = np.minimum(h, 0.6 / np.sqrt(y))
    out = np.empty(y.shape, dtype=complex)
    # group points with similar step sizes to vectorise
    order = np.argsort(h)
    chunk = 256
    for start in range(0, len(order), chunk):
        sel = order[start:start + chunk]
        hs = float(np.min(h[sel]))
        Ts = float(np.max(T[sel]))
        t = np.arange(-int(Ts / hs) - 1, int(Ts / hs) + 2) * hs
        th = sgn * theta[sel][:, None]
        u = t[None, :] + 1j * th
        expo = -y[sel][:, None] * np.cosh(u) + nu * u
        vals = np.exp(expo)
        out[sel] = 0.5 * hs * vals.sum(axis=1)
    return out


def bessel_k_oracle_t(nu, y, n_nodes: int = 4000) -> complex:
    """Independent route: the t-integral 1/2 int_0^inf exp(-y(t+1/t)/2) t^{nu-1} dt,
    with t = e^x and composite Gauss-Legendre in x (no contour shift)."""
    nu = complex(nu)
    xmax = math.acosh(max(1.0, 60.0 / y)) + 2.0
    f = lambda x: 0.5 * np.exp(-y * np.cosh(x) + nu * x)
    edges = np.linspace(-xmax, xmax, n_nodes // 20 + 1)
    xg, wg = _gl(20)
    total = 0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        total += half * np.sum(wg * f(0.5 * (lo + hi) + half * xg))
    return total


# ---------------------------------------------------------------------------
# Bessel moments
# ---------------------------------------------------------------------------

def bessel_moment_gamma(s, a: float, b: float) -> complex:
    """Closed form of int_0^inf K_{ia}(2 pi t) K_{ib}(2 pi t) t^{s-1} dt."""
    s = complex(s)
    if s.real <= 0:
        raise PoleError("need Re s > 0")
    args = np.array([(s + 1j * a + 1j * b) / 2, (s + 1j * a - 1j * b) / 2,
                     (s - 1j * a - 1j * b) / 2, (s - 1j * a + 1j * b) / 2])
    lg = np.sum(cloggamma(args)) - cloggamma(s)
    return complex(np.exp(lg - s * math.log(math.pi)) / 8.0)


def bessel_abs2_moment(s, b: float) -> complex:
    """int_0^inf |K_{ib}(2 pi t)|^2 t^{s-1} dt = G(s/2+ib)G(s/2-ib)G(s/2)^2/(8 pi^s G(s))."""
    s = complex(s)
    args = np.array([s / 2 + 1j * b, s / 2 - 1j * b, s / 2, s / 2])
    lg = np.sum(cloggamma(args)) - cloggamma(s)
    return complex(np.exp(lg - s * math.log(math.pi)) / 8.0)


def bessel_moment_quad(s, a: float, b: float) -> complex:
    """The same moment by quadrature of the Bessel product (x = log t grid)."""
    s = complex(s)
    # small-t tail decays like t^{Re s}; push the lower end until it is below 1e-13
    lo = min(-14.0, -30.0 / s.real)
    x = np.linspace(lo, 3.5, int((3.5 - lo) * 150) + 1)
    t = np.exp(x)
    ka = bessel_k(1j * a, 2 * math.pi * t)
    kb = ka if a == b else bessel_k(1j * b, 2 * math.pi * t)
    f = ka * kb * np.exp(s * x)
    # trapezoid in x is spectrally accurate here: integrand decays at both ends
    return complex(np.trapezoid(f, x)) if hasattr(np, "trapezoid") else complex(np.trapz(f, x))


# ---------------------------------------------------------------------------
# test-function catalog and Mellin transforms
# ---------------------------------------------------------------------------

CATALOG_VERSION = 1


@dataclass(frozen=True)
class TestFunction:
    """Smooth test function h on (0, inf) from the fixed catalog."""
    name: str
    params: tuple = ()

    __test__ = False  # not a pytest class

    def __call__(self, w):
        return _catalog_eval(self, np.asarray(w, dtype=float))

    def log_support(self) -> tuple[float, float]:
        """Interval in log w outside which h is negligible (< 1e-18)."""
        if self.name == "bump":
            c, width = self.params
            return (c - width, c + width)
        if self.name == "loggauss":
            mu, sig = self.params
            return (mu - 9.2 * sig, mu + 9.2 * sig)
        if self.name == "w2exp":
            return (-21.0, 4.0)
        raise CatalogError(self.name)


def catalog(name: str, *params: float) -> TestFunction:
    """Catalog lookup: 'bump' (center c, half-width in log w), 'loggauss'
    (mean, sd in log w) and 'w2exp' (w^2 e^{-w})."""
    defaults = {"bump": (0.0, 1.0), "loggauss": (0.0, 0.5), "w2exp": ()}
    if name not in defaults:
        raise CatalogError(f"unknown test function {name!r}")
    p = tuple(float(v) for v in params) or defaults[name]
    if len(p) != len(defaults[name]):
        raise CatalogError(f"{name} takes {len(defaults[name])} parameters")
    return TestFunction(name, p)


def _catalog_eval(h: TestFunction, w: np.ndarray):
    if h.name == "w2exp":
        return w * w * np.exp(-w)
    with np.errstate(divide="ignore"):
        x = np.log(w)
    if h.name == "loggauss":
        mu, sig = h.params
        return np.exp(-0.5 * ((x - mu) / sig) ** 2)
    if h.name == "bump":
        c, width = h.params
        u = (x - c) / width
        out = np.zeros_like(u)
        inside = np.abs(u) < 1
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
        return out
    raise CatalogError(h.name)


def mellin(h: TestFunction, r) -> complex:
    """(Mh)(r) = int_0^inf h(w) w^{-r-1} dw."""
    if not isinstance(h, TestFunction):
        raise CatalogError("mellin needs a catalog function")
    r = complex(r)
    if h.name == "w2exp":
        if (2 - r).real <= 0 and abs((2 - r) - round((2 - r).real)) < 1e-14:
            raise PoleError("Mellin transform of w^2 e^-w has poles at r = 2, 3, ...")
        return complex(cgamma(2 - r))
    if h.name == "loggauss":
        mu, sig = h.params
        return complex(sig * math.sqrt(2 * math.pi) * np.exp(-r * mu + 0.5 * (r * sig) ** 2))
    lo, hi = h.log_support()
    return complex(_mellin_log_quad(h, r, lo, hi))


def mellin_quad(h: TestFunction, r, n: int = 4000) -> complex:
    """Mellin transform by direct quadrature in x = log w (any catalog entry)."""
    lo, hi = h.log_support()
    return complex(_mellin_log_quad(h, complex(r), lo, hi, n))


def _mellin_log_quad(h: TestFunction, r: complex, lo: float, hi: float, n: int = 4000):
    # integrand h(e^x) e^{-r x}; smooth and (numerically) compactly supported
    edges = np.linspace(lo, hi, n // 20 + 1)
    xg, wg = _gl(20)
    mids = 0.5 * (edges[:-1] + edges[1:])[:, None]
    half = 0.5 * (edges[1] - edges[0])
    x = (mids + half * xg[None, :]).ravel()
    vals = h(np.exp(x)) * np.exp(-r * x)
    return half * np.sum(np.tile(wg, len(edges) - 1) * vals)


def h_over_w2_integral(h: TestFunction) -> float:
    """int_0^inf h(w) w^{-2} dw, i.e. (Mh)(1)."""
    return float(mellin(h, 1.0).real)
