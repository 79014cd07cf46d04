"""hilbert-que command line: field inspection, evaluators, verification suites
and QUE scans.  All numeric output is CSV with 17 significant digits."""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from dataclasses import dataclass


def _fmt(v) -> str:
    if isinstance(v, complex):
        return f"{v.real:.17g}"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _complex_arg(text: str) -> complex:
    """'2' or '2,0' or '0.5,14.1' -> complex."""
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if not 1 <= len(parts) <= 2:
        raise argparse.ArgumentTypeError(f"expected 're[,im]', got {text!r}")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from None
    return complex(vals[0], vals[1] if len(vals) == 2 else 0.0)


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(p) for p in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None


def _real_list(text: str) -> tuple:
    try:
        return tuple(float(p) for p in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from None


def _char(field, m: tuple):
    from .ideal_arith import grossen_char
    if m == (0,) and field.degree == 1:
        m = ()
    if len(m) not in (0, field.degree - 1):
        raise ValueError(f"character needs {field.degree - 1} integers, got {len(m)}")
    return grossen_char(field, m or None)


# ---------------------------------------------------------------------------
# verification suites
# ---------------------------------------------------------------------------

@dataclass
class Check:
    suite: str
    name: str
    residual: float
    tol: float

    @property
    def ok(self) -> bool:
        return bool(self.residual <= self.tol)


def _nontrivial_chars(field):
    from .ideal_arith import grossen_char
    if field.degree == 1:
        return [grossen_char(field)]
    return [grossen_char(field), grossen_char(field, (1,) + (0,) * (field.degree - 2))]


def suite_moebius(field):
    import numpy as np
    from .ideal_arith import divisors, ideal_counts_by_splitting, ideal_table
    from .lfun import moebius_values, mult_table
    X = 200
    mt = mult_table(field, X)
    mu = moebius_values(field, X)
    worst = 0
    # the cached table may reach past X; mu covers N <= X only
    for i in range(1, len(mu)):
        idx = mt.index_of(np.array([d.gen.embeddings for d in divisors(mt.ideals[i])]))
        worst = max(worst, abs(int(np.sum(mu[idx])) - (1 if mt.norms[i] == 1 else 0)))
    out = [Check("moebius", "sum of mu over divisors, N <= 200", float(worst), 0.0)]
    if field.degree == 2:
        tab = ideal_table(field, 500)
        oracle = ideal_counts_by_splitting(field, 500)
        counts = np.bincount(np.asarray(tab.norms[1:len(tab.upto(500))]), minlength=501)
        gap = max(abs(int(counts[N]) - oracle.get(N, 0)) for N in range(2, 501))
        out.append(Check("moebius", "ideal counts vs splitting oracle, N <= 500", float(gap), 0.0))
    return out


def suite_field(field):
    import numpy as np
    from .field_core import jacobian_fd
    from .ideal_arith import check_narrow_class_one
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        y = rng.uniform(0.2, 5.0, field.degree)
        worst = max(worst, abs(abs(jacobian_fd(field, y)) * field.regulator - 1.0))
    return [Check("field", "Jacobian times R minus 1", worst, 1e-5),
            Check("field", "narrow class one up to norm 200",
                  0.0 if check_narrow_class_one(field, 200) else 1.0, 0.0)]


def suite_residue(field):
    from .lfun import dedekind_laurent, dedekind_residue
    got = dedekind_laurent(field).residue
    want = dedekind_residue(field)
    return [Check("residue", "extrapolated residue vs 2^(n-1) R / sqrt D", abs(got / want - 1), 1e-2)]


def suite_bessel(field):
    import numpy as np
    from .special_fn import (bessel_abs2_moment, bessel_k, bessel_k_oracle_t, bessel_moment_gamma,
                             bessel_moment_quad)
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(6):
        s = complex(rng.uniform(1.0, 3.0), rng.uniform(-3, 3))
        a, b = rng.uniform(-4, 4, 2)
        worst = max(worst, abs(bessel_moment_gamma(s, a, b) - bessel_moment_quad(s, a, b)))
        worst = max(worst, abs(bessel_abs2_moment(s, b) - bessel_moment_quad(s, b, b)))
    kw = max(abs(complex(bessel_k(nu, y)) - bessel_k_oracle_t(nu, y)) / abs(bessel_k_oracle_t(nu, y))
             for nu, y in ((5j, 1.0), (0.3 + 2j, 0.5), (12j, 9.0), (1.5, 3.0)))
    return [Check("bessel", "moment closed forms vs quadrature", worst, 1e-8),
            Check("bessel", "K_nu vs t-integral oracle (relative)", kw, 1e-9)]


def suite_zeta(field):
    import numpy as np
    from .lfun import fe_residual, zeta_euler, zeta_series
    out = []
    for ch in _nontrivial_chars(field):
        gap = abs(zeta_series(3.0, ch, 4000).value - zeta_euler(3.0, ch, 4000))
        out.append(Check("zeta", f"series vs Euler product at 3, m={ch.m}", gap, 1e-6))
        pts = [complex(sig, t) for sig, t in zip(np.linspace(0.1, 0.9, 10), np.linspace(-30, 30, 10))]
        worst = max(fe_residual(s, ch).relative for s in pts)
        out.append(Check("zeta", f"functional equation, m={ch.m}", worst, 1e-6))
    return out


def suite_eisenstein(field):
    import numpy as np
    from .eisenstein import HPoint, eis_params, eisenstein_direct, eisenstein_fourier, scattering_phi
    out = []
    n = field.degree
    pts = [HPoint(np.full(n, 0.1 * (i + 1)), np.linspace(0.9, 1.3, n) + 0.2 * i) for i in range(3)]
    for ch in _eis_chars(field):
        p = eis_params(2.0, ch)
        gap = max(abs(eisenstein_direct(z, p).value - eisenstein_fourier(z, p).value) for z in pts)
        out.append(Check("eisenstein", f"direct vs Fourier at s=2, m={ch.m}", gap, 1e-4))
        uni = max(abs(abs(scattering_phi(0.5 + 1j * t, ch)) - 1) for t in (1, 5, 10, 20))
        out.append(Check("eisenstein", f"scattering unitarity, m={ch.m}", uni, 1e-6))
    return out


def _eis_chars(field):
    from .ideal_arith import grossen_char
    if field.degree == 1:
        return [grossen_char(field)]
    return [grossen_char(field), grossen_char(field, (2,) + (0,) * (field.degree - 2))]


def suite_hecke(field):
    import numpy as np
    from .eisenstein import HPoint, eis_params
    from .hecke_ops import (EisensteinFunction, fourier_action_residual, hecke_commute_residual,
                            hecke_prime_identity_residual, orbit_key, prime_identity_counts,
                            splitting_invariance_residual)
    from .ideal_arith import grossen_char, ideal_pow, ideal_table, is_prime
    from .lfun import eigen_relation_residual, eigensystem, hecke_poly_closed, hecke_poly_recursion
    n = field.degree
    E = EisensteinFunction(eis_params(2.0, grossen_char(field)))
    z = HPoint(np.linspace(0.1, 0.4, n), np.linspace(0.8, 1.2, n))
    ids = ideal_table(field, 50).upto(50)[1:]
    primes = [i for i in ids if is_prime(i)]
    p = primes[0]
    out = [Check("hecke", "prime identity k=k'=1", hecke_prime_identity_residual(p, 1, 1, E, z), 1e-6),
           Check("hecke", "prime identity k=2, k'=1", hecke_prime_identity_residual(p, 2, 1, E, z), 1e-6)]
    lhs, rhs = prime_identity_counts(p, 2, 1)
    out.append(Check("hecke", "constant function coset count", float(abs(lhs - rhs)), 0.0))
    rng = np.random.default_rng(11)
    comp = comm = 0.0
    for _ in range(10):
        while True:
            i, j = rng.choice(len(ids), 2)
            if ids[i].norm * ids[j].norm <= 50:
                break
        r = hecke_commute_residual(ids[i], ids[j], E, z)
        comp, comm = max(comp, r.composition), max(comm, r.commutator)
    out += [Check("hecke", "composition with gcd divisor sum", comp, 1e-6),
            Check("hecke", "commutator", comm, 1e-8),
            Check("hecke", "splitting independence", splitting_invariance_residual(p, E, z), 1e-10)]
    coeffs = {orbit_key(field.one()): 1.0}
    pts = [HPoint(np.linspace(0.05, 0.3, n) + 0.1 * i, np.linspace(0.9, 1.1, n) + 0.1 * i) for i in range(5)]
    out.append(Check("hecke", "Fourier coefficient action",
                     max(fourier_action_residual(coeffs, q, pts) for q in (p, ideal_pow(p, 2))), 1e-5))
    poly = max(0 if hecke_poly_recursion(k) == hecke_poly_closed(k) else 1 for k in range(9))
    out.append(Check("hecke", "eigenvalue recursion vs closed forms k <= 8", float(poly), 0.0))
    sys_ = eigensystem(field, 500, seed=1)
    big = ideal_table(field, 500).upto(500)[1:]
    worst = 0.0
    for _ in range(50):
        i, j = rng.choice(len(big), 2)
        worst = max(worst, eigen_relation_residual(sys_, big[i], big[j]))
    out.append(Check("hecke", "eigenvalue composition relation", worst, 1e-9))
    return out


def suite_lidentity(field):
    from .lfun import eigensystem, ramanujan_identity_residual, rs_identity_residual
    out = []
    chars = _nontrivial_chars(field)
    for ch in chars:
        r = ramanujan_identity_residual(3.0, chars[0], ch, 1.3j, X=4000)
        out.append(Check("lidentity", f"divisor identity at 3, m={ch.m}", r, 1e-5))
        sys_ = eigensystem(field, 4000, seed=2)
        out.append(Check("lidentity", f"R(s) identity at 3, m={ch.m}",
                         rs_identity_residual(3.0, 2.0, ch, sys_, X=4000), 1e-5))
    return out


def suite_incomplete(field):
    from .eisenstein import incomplete_integral, incomplete_integral_quadrature
    from .special_fn import catalog
    h = catalog("bump", 0.0, 1.0)
    out = []
    for ch in _nontrivial_chars(field):
        gap = abs(incomplete_integral(h, ch) - incomplete_integral_quadrature(h, ch))
        out.append(Check("incomplete", f"closed form vs quadrature, m={ch.m}", gap, 1e-4))
    return out


def suite_que(field):
    import numpy as np
    from .ideal_arith import grossen_char
    from .que_scan import f1_closed, f1_term, parseval_density, parseval_x_quadrature, que_constant
    from .que_scan import residue_cancellation_check
    from .special_fn import catalog
    h = catalog("bump", 0.0, 1.0)
    ch = grossen_char(field)
    out = []
    if field.degree == 1:
        out.append(Check("que", "constant for Q is 3/pi", abs(que_constant(field) - 3 / math.pi), 1e-12))
    out.append(Check("que", "F1 quadrature vs orthogonality form",
                     abs(f1_term(h, ch, ch, 5.0) - f1_closed(h, ch, ch, 5.0)), 1e-8))
    out.append(Check("que", "residue cancellation", residue_cancellation_check(10.0, h, ch), 1e-10))
    y = np.linspace(0.9, 1.2, field.degree)
    dens = parseval_density(y, 2.0, ch)
    out.append(Check("que", "Parseval density vs x-quadrature",
                     abs(dens - parseval_x_quadrature(y, 2.0, ch)) / abs(dens), 1e-3))
    return out


SUITES = {
    "moebius": suite_moebius,
    "field": suite_field,
    "residue": suite_residue,
    "bessel": suite_bessel,
    "zeta": suite_zeta,
    "eisenstein": suite_eisenstein,
    "hecke": suite_hecke,
    "lidentity": suite_lidentity,
    "incomplete": suite_incomplete,
    "que": suite_que,
}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_field_info(args) -> int:
    from .field_core import get_field
    from .que_scan import que_constant
    F = get_field(args.field)
    rows = [("n", F.degree), ("D", F.discriminant), ("R", float(F.regulator)),
            ("units", " ".join(";".join(f"{v:.17g}" for v in u) for u in F.units) or "none"),
            ("omega", ";".join(str(int(c)) for c in F.omega_coords)),
            ("theta", float(que_constant(F)))]
    sys.stdout.write(_csv(("key", "value"), rows))
    return 0


def cmd_zeta(args) -> int:
    from .field_core import get_field
    from .lfun import zeta_continued, zeta_series
    F = get_field(args.field)
    ch = _char(F, args.m)
    s = args.s
    if s.real > 1.5:
        v = zeta_series(s, ch, args.X)
        val, tail = v.value, v.tail
    else:
        val, tail = zeta_continued(s, ch), float("nan")
    sys.stdout.write(_csv(("s_re", "s_im", "re", "im", "tail"),
                          [(s.real, s.imag, float(val.real), float(val.imag), float(tail))]))
    return 0


def cmd_eisenstein(args) -> int:
    import numpy as np
    from .eisenstein import HPoint, eis_params, eisenstein_direct, eisenstein_fourier
    from .field_core import get_field
    F = get_field(args.field)
    if len(args.x) != F.degree or len(args.y) != F.degree:
        raise ValueError(f"x and y need {F.degree} entries")
    p = eis_params(args.s, _char(F, args.m))
    z = HPoint(np.array(args.x), np.array(args.y))
    v = eisenstein_direct(z, p) if args.method == "direct" else eisenstein_fourier(z, p)
    sys.stdout.write(_csv(("re", "im", "tail"), [(v.value.real, v.value.imag, float(v.tail))]))
    return 0


def cmd_hecke_check(args) -> int:
    import numpy as np
    from .eisenstein import HPoint, eis_params
    from .field_core import get_field
    from .hecke_ops import (EisensteinFunction, fourier_action_residual, hecke_commute_residual,
                            hecke_prime_identity_residual, orbit_key)
    from .ideal_arith import grossen_char, ideal_of, ideal_table, is_prime
    F = get_field(args.field)
    n = F.degree
    E = EisensteinFunction(eis_params(2.0, grossen_char(F)))
    z = HPoint(np.linspace(0.1, 0.4, n), np.linspace(0.8, 1.2, n))
    params = dict(kv.split("=", 1) for kv in args.params) if args.params else {}
    tol = args.tol if args.tol is not None else 1e-6
    rows, ok = [], True

    def ideal(key):
        return ideal_of(F, _int_list(params[key]))

    if args.identity == "prime":
        primes = [i for i in ideal_table(F, 60).upto(60)[1:] if is_prime(i)]
        p = ideal("p") if "p" in params else primes[0]
        k, k2 = int(params.get("k", 1)), int(params.get("k2", 1))
        r = hecke_prime_identity_residual(p, k, k2, E, z)
        rows.append(("prime", p.norm, k, k2, r))
        ok = r <= tol
        header = ("identity", "norm_p", "k", "k2", "residual")
    elif args.identity == "commute":
        a, b = ideal("nu1"), ideal("nu2")
        r = hecke_commute_residual(a, b, E, z)
        rows.append(("commute", a.norm, b.norm, r.composition, r.commutator))
        ok = max(r.composition, r.commutator) <= tol
        header = ("identity", "norm_nu1", "norm_nu2", "composition", "commutator")
    else:
        nu = ideal("nu")
        pts = [HPoint(np.linspace(0.05, 0.3, n) + 0.1 * i, np.linspace(0.9, 1.1, n)) for i in range(5)]
        r = fourier_action_residual({orbit_key(F.one()): 1.0}, nu, pts)
        rows.append(("fourier", nu.norm, r))
        ok = r <= max(tol, 1e-5)
        header = ("identity", "norm_nu", "residual")
    sys.stdout.write(_csv(header, rows))
    return 0 if ok else 1


def cmd_verify(args) -> int:
    from .field_core import available_fields, get_field
    fields = [args.field] if args.field else available_fields()
    suites = list(SUITES) if args.all or not args.suite else args.suite
    bad = [s for s in suites if s not in SUITES]
    if bad:
        raise ValueError(f"unknown suite(s) {bad}; choose from {sorted(SUITES)}")
    checks = []
    for name in fields:
        F = get_field(name)
        for s in suites:
            for c in SUITES[s](F):
                if args.tol is not None:
                    c.tol = args.tol
                checks.append((name, c))
    rows = [(f, c.suite, c.name, float(c.residual), float(c.tol), "pass" if c.ok else "FAIL")
            for f, c in checks]
    sys.stdout.write(_csv(("field", "suite", "check", "residual", "tol", "status"), rows))
    worst = max((float(c.residual) for _, c in checks), default=0.0)
    failed = sum(not c.ok for _, c in checks)
    print(f"{'pass' if not failed else 'FAIL'}: {len(checks) - failed}/{len(checks)} checks, "
          f"max residual {worst:.3g}", file=sys.stderr)
    return 0 if not failed else 1


def load_scan_config(text: str):
    """Parse a que-scan config (same key/value grammar as the field files).

    Keys: field, m, k (integer lists), h (catalog name then parameters),
    t_grid (reals), bessel_cap (int, optional).
    """
    from .field_core import ConfigSyntaxError, parse_keyvalue
    from .que_scan import QueConfig
    from .special_fn import CatalogError, catalog
    kv = parse_keyvalue(text)
    known = {"field", "m", "k", "h", "t_grid", "bessel_cap"}
    for key, (_, line) in kv.items():
        if key not in known:
            raise ConfigSyntaxError(f"unknown key {key!r}", line)
    if "field" not in kv:
        raise ConfigSyntaxError("missing key 'field'", 1)

    def ints(key):
        if key not in kv:
            return ()
        val, line = kv[key]
        try:
            return _int_list(val)
        except argparse.ArgumentTypeError as exc:
            raise ConfigSyntaxError(str(exc), line) from None

    opts = {"field": kv["field"][0], "m": ints("m"), "k": ints("k")}
    if "h" in kv:
        val, line = kv["h"]
        parts = val.replace(",", " ").split()
        try:
            opts["h"] = catalog(parts[0], *[float(p) for p in parts[1:]])
        except (CatalogError, ValueError, IndexError) as exc:
            raise ConfigSyntaxError(f"bad test function: {exc}", line) from None
    if "t_grid" in kv:
        val, line = kv["t_grid"]
        try:
            opts["t_grid"] = list(_real_list(val))
        except argparse.ArgumentTypeError as exc:
            raise ConfigSyntaxError(str(exc), line) from None
    if "bessel_cap" in kv:
        opts["bessel_cap"] = int(ints("bessel_cap")[0])
    return QueConfig(**opts)


def cmd_que_scan(args) -> int:
    from .que_scan import que_scan, rows_to_csv, trend_fraction
    with open(args.config, encoding="utf-8") as fh:
        cfg = load_scan_config(fh.read())
    rows = que_scan(cfg)
    text = rows_to_csv(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"trend toward target: {trend_fraction(rows):.3g}", file=sys.stderr)
    return 0 if all(r.status in ("ok", "tail") for r in rows) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hilbert-que", description=__doc__)
    ap.add_argument("--tol", type=float, default=None, help="override check tolerances")
    ap.add_argument("--threads", type=int, default=None, help="cap BLAS/OpenMP threads")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("field-info", help="print n, D, R, units, omega and the QUE constant")
    p.add_argument("--field", required=True)
    p.set_defaults(func=cmd_field_info)

    p = sub.add_parser("zeta", help="evaluate zeta(s, m)")
    p.add_argument("--field", required=True)
    p.add_argument("--s", type=_complex_arg, required=True, help="re,im")
    p.add_argument("--m", type=_int_list, default=())
    p.add_argument("--X", type=int, default=10 ** 4, help="norm cutoff of the series")
    p.set_defaults(func=cmd_zeta)

    p = sub.add_parser("eisenstein", help="evaluate E(z, s, m)")
    p.add_argument("--field", required=True)
    p.add_argument("--s", type=_complex_arg, required=True)
    p.add_argument("--m", type=_int_list, default=())
    p.add_argument("--x", type=_real_list, required=True)
    p.add_argument("--y", type=_real_list, required=True)
    p.add_argument("--method", choices=("direct", "fourier"), default="fourier")
    p.set_defaults(func=cmd_eisenstein)

    p = sub.add_parser("hecke-check", help="residual tables for Hecke operator identities")
    p.add_argument("--field", required=True)
    p.add_argument("--identity", choices=("prime", "commute", "fourier"), required=True)
    p.add_argument("--params", nargs="*", default=[],
                   help="key=value pairs, e.g. p=2,0 k=2 k2=1 or nu1=2 nu2=3 (ideal generator coordinates)")
    p.set_defaults(func=cmd_hecke_check)

    p = sub.add_parser("verify", help="run invariant suites")
    p.add_argument("--field", default=None, help="default: every available field")
    p.add_argument("--suite", action="append", default=None, choices=sorted(SUITES))
    p.add_argument("--all", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("que-scan", help="F1/F2 scan over a t grid")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_que_scan)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(max(1, args.threads))
    from .field_core import InvalidField
    from .ideal_arith import CapExceeded
    try:
        return args.func(args)
    except (InvalidField, CapExceeded, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
