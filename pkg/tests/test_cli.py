import math

import pytest

from hilbert_que.cli import load_scan_config, main
from hilbert_que.field_core import ConfigSyntaxError


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_field_info_q(capsys):
    code, out, _ = run(capsys, "field-info", "--field", "q")
    assert code == 0
    rows = dict(line.split(",", 1) for line in out.strip().splitlines()[1:])
    assert rows["n"] == "1" and rows["D"] == "1" and float(rows["R"]) == 1.0
    assert float(rows["theta"]) == pytest.approx(3 / math.pi, abs=1e-15)


def test_verify_moebius(capsys):
    code, out, err = run(capsys, "verify", "--field", "qsqrt5", "--suite", "moebius")
    assert code == 0
    assert "max residual 0" in err
    assert all(line.endswith(",pass") for line in out.strip().splitlines()[1:])


def test_verify_fails_with_impossible_tolerance(capsys):
    code, _, _ = run(capsys, "--tol", "-1", "verify", "--field", "q", "--suite", "field")
    assert code == 1


def test_zeta_csv(capsys):
    code, out, _ = run(capsys, "zeta", "--field", "qsqrt5", "--s", "2,0", "--m", "0")
    assert code == 0
    header, row = out.strip().splitlines()
    assert header == "s_re,s_im,re,im,tail"
    vals = [float(v) for v in row.split(",")]
    want = 2 * math.pi ** 4 / (75 * math.sqrt(5))
    assert abs(vals[2] - want) <= vals[4]
    assert len(row.split(",")[2].replace(".", "").lstrip("0")) >= 16


def test_eisenstein_and_hecke(capsys):
    code, out, _ = run(capsys, "eisenstein", "--field", "q", "--s", "2", "--x", "0.1", "--y", "1.0")
    assert code == 0 and out.startswith("re,im,tail")
    code, out, _ = run(capsys, "hecke-check", "--field", "qsqrt5", "--identity", "prime",
                       "--params", "k=2", "k2=1")
    assert code == 0 and "prime" in out
    code, out, _ = run(capsys, "hecke-check", "--field", "qsqrt5", "--identity", "commute",
                       "--params", "nu1=2,0", "nu2=-1,2")
    assert code == 0


def test_bad_arguments_exit_2(capsys):
    assert run(capsys, "nonsense")[0] == 2
    assert run(capsys, "field-info", "--field", "nowhere")[0] == 2
    assert run(capsys, "zeta", "--field", "q", "--s", "a,b")[0] == 2


def test_field_dir_env(monkeypatch, tmp_path, capsys):
    (tmp_path / "tiny.field").write_text("degree = 1\nbasis = 1\nomega = 1\ndiscriminant = 1\n")
    monkeypatch.setenv("HE_FIELD_DIR", str(tmp_path))
    from hilbert_que.field_core import get_field
    get_field.cache_clear()
    try:
        code, out, _ = run(capsys, "field-info", "--field", "tiny")
        assert code == 0 and "theta" in out
    finally:
        monkeypatch.delenv("HE_FIELD_DIR")
        get_field.cache_clear()


def test_scan_config_and_run(tmp_path, capsys):
    cfg = tmp_path / "scan.cfg"
    cfg.write_text("field = qsqrt5\nm = 0\nk = 0\nh = bump 0 1\nt_grid = 5, 10\n")
    out = tmp_path / "rows.csv"
    code, _, err = run(capsys, "que-scan", "--config", str(cfg), "--out", str(out))
    assert code == 0 and "trend" in err
    first = out.read_bytes()
    assert first.splitlines()[0] == b"t,f1_re,f1_im,f2,total,total_over_logt,theta_target,status"
    run(capsys, "que-scan", "--config", str(cfg), "--out", str(out))
    assert out.read_bytes() == first


def test_scan_config_errors_cite_line():
    with pytest.raises(ConfigSyntaxError) as exc:
        load_scan_config("field = q\ncolour = blue\n")
    assert "2" in str(exc.value)
    with pytest.raises(ConfigSyntaxError):
        load_scan_config("field = q\nh = triangle\n")


def test_scan_config_space_separated_lists():
    cfg = load_scan_config("field = qsqrt5\nm = 0\nt_grid = 5 10, 20\nbessel_cap = 200\n")
    assert cfg.t_grid == [5.0, 10.0, 20.0] and cfg.bessel_cap == 200


def test_verify_moebius_after_larger_table(capsys):
    from hilbert_que.field_core import get_field
    from hilbert_que.lfun import mult_table
    mult_table(get_field("cubic49"), 2000)  # leaves a cached table reaching past N = 200
    code, _, err = run(capsys, "verify", "--field", "cubic49", "--suite", "moebius")
    assert code == 0 and "max residual 0" in err
