import cmath
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from hilbert_que.field_core import get_field
from hilbert_que.ideal_arith import enumerate_ideals, grossen_char, moebius
from hilbert_que.lfun import (EnvelopeError, dedekind_laurent, dedekind_residue,
                              eigensystem, eigen_relation_residual, fe_residual, hecke_poly_closed,
                              hecke_poly_recursion, mangoldt_series, moebius_series, moebius_values,
                              mult_table, ramanujan_identity_residual, root_number,
                              rs_identity_residual, standard_l, zeta_continued, zeta_derivative,
                              zeta_euler, zeta_series, zeta_value)

W = cmath.exp(2j * math.pi / 3)
_CUBIC = {1: 1, 3: W, 2: W ** 2, 6: 1 * W ** 3, 4: W ** 4, 5: W ** 5}


def _oracle(name, s):
    """Dedekind zeta by mpmath Dirichlet L-function factorisation."""
    z = mpmath.zeta(s)
    if name == "q":
        return complex(z)
    if name == "qsqrt5":
        return complex(z * mpmath.dirichlet(s, [0, 1, -1, -1, 1]))
    if name == "qsqrt2":
        return complex(z * mpmath.dirichlet(s, [0, 1, 0, -1, 0, -1, 0, 1]))
    chi = [0] + [_CUBIC[k] for k in range(1, 7)]
    chibar = [complex(v).conjugate() if v else 0 for v in chi]
    return complex(z * mpmath.dirichlet(s, chi) * mpmath.dirichlet(s, chibar))


@pytest.mark.parametrize("s", [0.5 + 14.134725j, 0.3 - 40j, 2.0, 0.75 + 3j, 0.9 + 150j])
def test_dedekind_zeta_vs_mpmath(field, s):
    got = zeta_value(s, grossen_char(field))
    assert got == pytest.approx(_oracle(field.name, s), rel=1e-8, abs=1e-9)


def test_frozen_values():
    # zeta_{Q(sqrt5)}(2) = 2 pi^4 / (75 sqrt 5)
    F = get_field("qsqrt5")
    assert zeta_value(2.0, grossen_char(F)).real == pytest.approx(2 * math.pi ** 4 / (75 * math.sqrt(5)), rel=1e-12)
    assert zeta_value(2.0, grossen_char(get_field("q"))).real == pytest.approx(math.pi ** 2 / 6, rel=1e-13)


def test_series_vs_euler(field):
    for ch in (grossen_char(field),) + ((grossen_char(field, (1,) + (0,) * (field.degree - 2)),)
                                        if field.degree > 1 else ()):
        assert zeta_series(3.0, ch, 5000).value == pytest.approx(zeta_euler(3.0, ch, 5000), rel=1e-7)


def test_nontrivial_character_continuation_vs_series():
    F = get_field("qsqrt5")
    ch = grossen_char(F, (1,))
    s = 2.6 + 4j
    assert zeta_continued(s, ch, method="afe") == pytest.approx(zeta_series(s, ch, 10 ** 5).value, rel=1e-8)


def test_afe_vs_factor_route():
    F = get_field("qsqrt2")
    ch = grossen_char(F)
    for s in (0.5 + 20j, 0.2 + 3j):
        assert zeta_continued(s, ch, "afe") == pytest.approx(zeta_continued(s, ch, "factor"), rel=1e-8)


@pytest.mark.parametrize("m", [(1,), (2,), (-3,)])
def test_functional_equation_quadratic(m):
    ch = grossen_char(get_field("qsqrt5"), m)
    for s in (0.2 + 5j, 0.5 - 60j, 0.8 + 110j):
        assert fe_residual(s, ch).relative < 1e-6


def test_functional_equation_cubic():
    ch = grossen_char(get_field("cubic49"), (1, 0))
    for s in (0.3 + 2j, 0.6 - 30j):
        assert fe_residual(s, ch).relative < 1e-6


def test_wrong_root_number_is_detected():
    ch = grossen_char(get_field("qsqrt5"), (1,))
    assert abs(abs(root_number(ch)) - 1) < 1e-14
    assert fe_residual(0.3 + 5j, ch, eps=-root_number(ch)).relative > 1e-2


def test_envelope_error():
    ch = grossen_char(get_field("qsqrt5"), (1,))
    with pytest.raises(EnvelopeError):
        zeta_continued(0.5 + 500j, ch)


def test_dedekind_residue(field):
    lau = dedekind_laurent(field)
    assert lau.residue == pytest.approx(dedekind_residue(field), rel=1e-6)


def test_euler_constant_for_q():
    assert dedekind_laurent(get_field("q")).constant == pytest.approx(0.5772156649015329, abs=1e-6)


def test_moebius_sieve_matches_factorisation(field):
    mt = mult_table(field, 200)
    mu = moebius_values(field, 200)
    for i, I in enumerate(mt.ideals[:len(mu)]):
        assert mu[i] == (1 if I.norm == 1 else moebius(I))


def test_inverse_and_log_derivative_series():
    F = get_field("qsqrt5")
    ch = grossen_char(F, (1,))
    s = 3.5
    z = zeta_series(s, ch, 20000).value
    assert moebius_series(s, ch, 20000) * z == pytest.approx(1.0, abs=1e-6)
    ch0 = grossen_char(F)
    dz = zeta_derivative(3.0, ch0)
    assert mangoldt_series(3.0, ch0, 20000) == pytest.approx(-dz / zeta_value(3.0, ch0), rel=1e-5)


def test_hecke_polynomials_exact():
    for k in range(9):
        assert hecke_poly_recursion(k) == hecke_poly_closed(k)
    # Chebyshev U_k(x/2) at x = 2 equals k + 1, in exact rationals
    for k in range(9):
        assert sum(Fraction(c) * 2 ** i for i, c in enumerate(hecke_poly_recursion(k))) == k + 1


def test_eigen_relation_random_pairs():
    F = get_field("qsqrt5")
    sys_ = eigensystem(F, 500, seed=4)
    ids = enumerate_ideals(F, 500)[1:]
    rng = np.random.default_rng(0)
    for _ in range(50):
        i, j = rng.choice(len(ids), 2)
        assert eigen_relation_residual(sys_, ids[i], ids[j]) < 1e-9


def test_standard_l_routes_agree():
    F = get_field("qsqrt2")
    sys_ = eigensystem(F, 20000, seed=9)
    ch = grossen_char(F, (1,))
    a = standard_l(3.0, sys_, ch, 20000, "euler")
    b = standard_l(3.0, sys_, ch, 20000, "series")
    assert a == pytest.approx(b, rel=1e-6)


def test_zero_system_product():
    F = get_field("qsqrt5")
    sys0 = eigensystem(F, 5000, zero=True)
    ch = grossen_char(F)
    # lambda = 0: L(s) = prod (1 + N(p)^{-2s})^{-1} = zeta(4s) / zeta(2s)
    got = standard_l(2.0, sys0, ch, 5000)
    want = zeta_value(8.0, ch) / zeta_value(4.0, ch)
    assert got == pytest.approx(want, rel=1e-10)


def test_ramanujan_classical_q():
    F = get_field("q")
    ch = grossen_char(F)
    a = 1.7j
    r = ramanujan_identity_residual(3.0, ch, ch, a, X=20000)
    assert r < 1e-6
    # oracle for the right side: zeta(s)^2 zeta(s-a) zeta(s+a) / zeta(2s)
    s = 3.0
    rhs = complex(mpmath.zeta(s) ** 2 * mpmath.zeta(s - a) * mpmath.zeta(s + a) / mpmath.zeta(2 * s))
    lhs = sum(abs(sum(d ** a for d in range(1, n + 1) if n % d == 0)) ** 2 / n ** s for n in range(1, 3000))
    assert lhs == pytest.approx(rhs, rel=1e-6)


def test_ramanujan_and_rs_identities():
    F = get_field("qsqrt5")
    m0, m1 = grossen_char(F), grossen_char(F, (1,))
    assert ramanujan_identity_residual(3.0, m0, m1, 2.1j) < 1e-5
    sys_ = eigensystem(F, 10 ** 4, seed=3)
    assert rs_identity_residual(3.0, 1.5, m1, sys_) < 1e-5
