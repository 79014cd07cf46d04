import math

import numpy as np
import pytest

from hilbert_que.eisenstein import HPoint, eis_params
from hilbert_que.field_core import OElem, get_field
from hilbert_que.hecke_ops import (ConstantFunction, EisensteinFunction, FormalExpansion,
                                   InvarianceViolation, SupportOverflow, check_invariance,
                                   coset_count, fourier_action_residual, hecke_apply,
                                   hecke_commute_residual, hecke_fourier_action,
                                   hecke_prime_identity_residual, orbit_key,
                                   prime_identity_counts, splitting_invariance_residual)
from hilbert_que.ideal_arith import (divisors, enumerate_ideals, grossen_char, ideal_of,
                                     ideal_pow, is_prime, unit_ideal)


def _eis(field, s=2.0):
    return EisensteinFunction(eis_params(s, grossen_char(field)))


def _point(field):
    n = field.degree
    return HPoint(np.linspace(0.1, 0.4, n), np.linspace(0.8, 1.2, n))


def _first_prime(field):
    return next(I for I in enumerate_ideals(field, 50)[1:] if is_prime(I))


def test_identity_operator(field):
    E = _eis(field)
    z = _point(field)
    assert hecke_apply(unit_ideal(field), E, z) == pytest.approx(complex(E(z.x[None], z.y)[0]), rel=1e-14)


def test_q_t2_three_cosets_and_eigenvalue():
    F = get_field("q")
    E = _eis(F)
    zz = 0.23 + 0.91j
    f = lambda w: complex(E(np.array([[w.real]]), np.array([w.imag]))[0])
    brute = (f(2 * zz) + f(zz / 2) + f((zz + 1) / 2)) / math.sqrt(2)
    got = hecke_apply(ideal_of(F, (2,)), E, HPoint.from_complex(zz))
    assert got == pytest.approx(brute, rel=1e-13)
    # E(z, s) is an eigenfunction with eigenvalue 2^{s-1/2} + 2^{1/2-s}
    assert got == pytest.approx((2 ** 1.5 + 2 ** -1.5) * f(zz), rel=1e-10)


def test_eigenvalue_inert_prime_sqrt5():
    # (2) is inert in Q(sqrt5): T_(2) E = (4^{3/2} + 4^{-3/2}) E at s = 2
    F = get_field("qsqrt5")
    E = _eis(F)
    z = _point(F)
    got = hecke_apply(ideal_of(F, (2, 0)), E, z)
    assert got == pytest.approx((4 ** 1.5 + 4 ** -1.5) * complex(E(z.x[None], z.y)[0]), rel=1e-9)


def test_constant_function_counts(field):
    one = ConstantFunction(field)
    z = _point(field)
    for I in enumerate_ideals(field, 40)[1:10]:
        want = sum(d.norm for d in divisors(I)) / math.sqrt(I.norm)
        assert hecke_apply(I, one, z).real == pytest.approx(want, rel=1e-14)
        assert coset_count(I) == sum(d.norm for d in divisors(I))


def test_prime_identity(field):
    E = _eis(field)
    z = _point(field)
    p = _first_prime(field)
    assert hecke_prime_identity_residual(p, 1, 1, E, z) < 1e-6
    assert hecke_prime_identity_residual(p, 2, 1, E, z) < 1e-6


def test_prime_counting_identity_exact():
    for N in (2, 3, 4, 5, 7, 9, 11):
        for k in range(4):
            for k2 in range(4):
                lhs, rhs = prime_identity_counts(OElemIdeal(N), k, k2)
                assert lhs == rhs


class OElemIdeal:
    """Stand-in carrying only a norm, enough for the counting identity."""

    def __init__(self, norm):
        self.norm = norm


def test_coprime_multiplicativity_and_commutation():
    F = get_field("qsqrt5")
    E = _eis(F)
    z = _point(F)
    two, root5 = ideal_of(F, (2, 0)), ideal_of(F, (-1, 2))
    assert two.norm == 4 and root5.norm == 5
    r = hecke_commute_residual(two, root5, E, z)
    assert r.composition < 1e-6 and r.commutator < 1e-8
    # nu1 = nu2 = p reduces to the prime identity
    r2 = hecke_commute_residual(two, two, E, z)
    assert r2.composition == pytest.approx(hecke_prime_identity_residual(two, 1, 1, E, z), abs=1e-9)


def test_random_commutators_sqrt5():
    F = get_field("qsqrt5")
    E = _eis(F)
    z = _point(F)
    ids = enumerate_ideals(F, 50)[1:]
    rng = np.random.default_rng(17)
    done = 0
    while done < 10:
        i, j = rng.choice(len(ids), 2)
        if ids[i].norm * ids[j].norm > 50:
            continue
        r = hecke_commute_residual(ids[i], ids[j], E, z)
        assert r.commutator < 1e-8 and r.composition < 1e-6
        done += 1


def test_splitting_choice_irrelevant(field):
    E = _eis(field)
    assert splitting_invariance_residual(_first_prime(field), E, _point(field)) < 1e-10


def test_invariance_check_rejects_bad_function():
    F = get_field("qsqrt5")

    class NotPeriodic:
        field = F

        def __call__(self, x, y):
            return np.exp(1j * np.atleast_2d(x)[:, 0]) * np.prod(y)

    with pytest.raises(InvarianceViolation):
        hecke_apply(unit_ideal(F), NotPeriodic(), _point(F))
    assert check_invariance(_eis(F)) < 1e-10


def test_fourier_action_examples():
    F = get_field("qsqrt5")
    one = orbit_key(F.one())
    p = ideal_of(F, (2, 0))
    assert hecke_fourier_action({one: 1.0}, unit_ideal(F)) == {one: 1.0}
    assert hecke_fourier_action({one: 1.0}, p) == {orbit_key(p.gen): 1.0}
    # units-only support and nu = p^2: only d = 1 applies (p does not divide 1)
    eps = OElem(F, F.unit_coords[0])
    c = {one: 2.0, orbit_key(eps): -1.0}
    out = hecke_fourier_action(c, ideal_pow(p, 2))
    p2 = ideal_pow(p, 2).gen
    assert out == {orbit_key(p2): 2.0, orbit_key(p2 * eps): -1.0}
    # coefficient at p picks up the d = p term under T_p
    out2 = hecke_fourier_action({orbit_key(p.gen): 1.0}, p)
    assert out2 == {orbit_key(ideal_pow(p, 2).gen): 1.0, one: 1.0}
    with pytest.raises(SupportOverflow):
        hecke_fourier_action({one: 1.0}, p, cap=3)


def test_fourier_action_numeric(field):
    n = field.degree
    p = _first_prime(field)
    coeffs = {orbit_key(field.one()): 1.0, orbit_key(p.gen): 0.5 - 0.25j}
    pts = [HPoint(np.linspace(0.05, 0.3, n) + 0.1 * i, np.linspace(0.9, 1.1, n) + 0.05 * i)
           for i in range(5)]
    assert fourier_action_residual(coeffs, p, pts) < 1e-5
    f = FormalExpansion(field, coeffs)
    assert check_invariance(f) < 1e-9
