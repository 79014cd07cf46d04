import math

import numpy as np
import pytest
from sympy import divisors as int_divisors
from sympy.functions.combinatorial.numbers import kronecker_symbol

from hilbert_que.field_core import OElem, get_field, mul, norm
from hilbert_que.ideal_arith import (CapExceeded, canonicalize, check_narrow_class_one, chi,
                                     divides, divisors, enumerate_ideals, exact_quotient, factor,
                                     grossen_char, ideal_counts_by_splitting, ideal_gcd, ideal_mul,
                                     ideal_of, ideal_table, is_prime, moebius, orbit_reps,
                                     read_cache, reduce_mod, residues_mod, sigma_divisor,
                                     unit_ideal, von_mangoldt, write_cache)


@pytest.mark.parametrize("name,D", [("qsqrt2", 8), ("qsqrt5", 5)])
def test_ideal_counts_match_kronecker_convolution(name, D):
    # oracle: number of ideals of norm N is sum_{d | N} (D/d)
    F = get_field(name)
    tab = ideal_table(F, 500)
    counts = np.bincount(np.asarray(tab.norms[:len(tab.upto(500))]), minlength=501)
    for N in range(1, 501):
        want = sum(int(kronecker_symbol(D, d)) for d in int_divisors(N))
        assert counts[N] == want, N


def test_counts_by_splitting_agree_with_enumeration(field):
    tab = ideal_table(field, 300)
    counts = np.bincount(np.asarray(tab.norms[:len(tab.upto(300))]), minlength=301)
    oracle = ideal_counts_by_splitting(field, 300)
    for N in range(2, 301):
        assert counts[N] == oracle.get(N, 0), N


def test_enumerate_counts_q():
    F = get_field("q")
    assert [I.norm for I in enumerate_ideals(F, 10)] == list(range(1, 11))


def test_canonical_generator_invariant_under_units(field, rng):
    n = field.degree
    for _ in range(15):
        a = OElem(field, rng.integers(-7, 8, n))
        if a.is_zero():
            continue
        base = canonicalize(a)
        assert base.gen.is_totally_positive()
        assert base.norm == abs(norm(a))
        for uc in list(field.unit_coords) + [(-c for c in field.one().coords)]:
            assert canonicalize(mul(a, OElem(field, uc))).key == base.key


def test_narrow_class_one(field):
    assert check_narrow_class_one(field, 200)


def test_factor_and_moebius(field):
    for I in enumerate_ideals(field, 120)[1:]:
        f = factor(I)
        assert math.prod(p.norm ** e for p, e in f) == I.norm
        assert all(is_prime(p) for p, _ in f)
        total = sum(moebius(d) for d in divisors(I))
        assert total == 0


def test_gcd_and_divisibility(field):
    ids = enumerate_ideals(field, 60)[1:]
    for a in ids[:12]:
        for b in ids[:12]:
            g = ideal_gcd(a, b)
            assert divides(g, a) and divides(g, b)
            ab = ideal_mul(a, b)
            assert ab.norm == a.norm * b.norm
            assert exact_quotient(ab.gen, a.gen) is not None


def test_residues_mod_complete_system(field, rng):
    n = field.degree
    for I in enumerate_ideals(field, 30)[1:8]:
        d = I.gen
        res = residues_mod(d)
        assert len(res) == I.norm
        # pairwise incongruent
        for i in range(len(res)):
            for j in range(i + 1, len(res)):
                assert exact_quotient(res[i] - res[j], d) is None
        b = OElem(field, rng.integers(-40, 40, n))
        r = reduce_mod(b, d)
        assert r.coords in {x.coords for x in res}
        assert exact_quotient(b - r, d) is not None


def test_trivial_character_and_mangoldt():
    F = get_field("qsqrt5")
    ch0 = grossen_char(F)
    for I in enumerate_ideals(F, 50)[1:]:
        assert chi(ch0, I) == pytest.approx(1.0)
    I = ideal_of(F, (4, 0))    # (2)^2 with (2) inert
    assert von_mangoldt(ch0, I) == pytest.approx(math.log(4))
    assert von_mangoldt(ch0, ideal_of(F, (6, 0))) == 0.0


def test_character_is_unit_invariant_and_multiplicative():
    F = get_field("qsqrt5")
    ch = grossen_char(F, (1,))
    ids = enumerate_ideals(F, 40)[1:]
    for a in ids[:10]:
        for b in ids[:10]:
            assert chi(ch, ideal_mul(a, b)) == pytest.approx(chi(ch, a) * chi(ch, b), abs=1e-12)
        assert abs(chi(ch, a)) == pytest.approx(1.0)


def test_sigma_divisor_q():
    F = get_field("q")
    ch = grossen_char(F)
    assert sigma_divisor(1, ch, ideal_of(F, (12,))) == pytest.approx(28)


def test_orbit_reps_cover_sign_patterns(field):
    emb, idx, _ = orbit_reps(field, 30)
    n_ideals = len(enumerate_ideals(field, 30))
    assert len(emb) == n_ideals * 2 ** field.degree
    signs = {tuple(np.sign(e).astype(int)) for e in emb}
    assert len(signs) == 2 ** field.degree


def test_cache_roundtrip(tmp_path, field):
    ids = enumerate_ideals(field, 40)
    path = tmp_path / "ideals.txt"
    write_cache(path, ids)
    back = read_cache(field, path)
    assert [(I.norm, I.key) for I in back] == [(I.norm, I.key) for I in ids]


def test_cap_exceeded(field):
    with pytest.raises(CapExceeded):
        ideal_table(field, 10 ** 7)


def test_unit_ideal(field):
    assert unit_ideal(field).norm == 1
