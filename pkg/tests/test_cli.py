import json
import subprocess
import sys

import pytest

from quadcong.cli import equidistribution, main
from quadcong.congruence import QuadPoly


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_rho(capsys):
    code, out, _ = run(capsys, "rho", "--poly", "1,0,-2", "--h", "0", "--n", "7")
    assert code == 0 and out == "7,2.0,0.0,2\n"


def test_reducible_polynomial_is_usage_error(capsys):
    code, out, err = run(capsys, "rho", "--poly", "1,0,-4", "--n", "7")
    assert code == 2 and out == "" and "perfect square" in err


def test_bad_arguments(capsys):
    assert run(capsys, "rho")[0] == 2
    assert run(capsys, "rho", "--poly", "1,0")[0] == 2
    assert run(capsys, "nonsense")[0] == 2
    assert run(capsys, "rho", "--poly", "1,0,-2", "--threads", "0")[0] == 0  # rho ignores threads
    assert run(capsys, "weyl", "--poly", "1,0,-2", "--x", "100", "--threads", "0")[0] == 2


def test_kloosterman(capsys):
    code, out, _ = run(capsys, "kloosterman", "--q", "1", "--cusp", "inf", "--m", "1", "--n", "1", "--c", "3")
    assert code == 0 and out == "-1.0,0.0\n"
    code, out, err = run(capsys, "kloosterman", "--q", "4", "--cusp", "1/2", "--m", "1", "--n", "1", "--c", "3")
    assert code == 0 and out == "0.0,0.0\n" and "empty" in err
    assert run(capsys, "kloosterman", "--q", "6", "--cusp", "1/4", "--m", "1", "--n", "1", "--c", "3")[0] == 2


def test_cusps_csv_and_json(capsys):
    code, out, _ = run(capsys, "cusps", "--q", "6")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "q,mu,nu,qpp,width" and len(lines) == 5
    code, out, _ = run(capsys, "cusps", "--q", "6", "--format", "json")
    rows = json.loads(out)
    assert [r["nu"] for r in rows] == [1, 2, 3, 6] and rows[0]["width"] == 6
    assert set(rows[0]) == {"q", "mu", "nu", "qpp", "width"}


def test_weyl(capsys):
    code, out, _ = run(capsys, "weyl", "--poly", "1,0,-2", "--h", "1", "--x", "1000", "--Y1", "10")
    lines = out.splitlines()
    assert code == 0 and len(lines) == 3
    assert lines[1].startswith("discrete,1000.0,1,1,,") and lines[2].startswith("smooth,")
    code, out, _ = run(capsys, "weyl", "--poly", "1,0,-2", "--h", "0", "--x", "10", "--open-range")
    fields = out.splitlines()[1].split(",")
    assert fields[0] == "discrete_open" and fields[-1] == "9"


def test_scan(capsys, tmp_path):
    target = tmp_path / "scan.csv"
    code, _, _ = run(capsys, "scan", "--poly", "1,0,-2", "--h", "1", "--N", "1",
                     "--x-start", "1024", "--x-end", "8192", "--output", str(target))
    data = target.read_bytes()
    assert code == 0 and b"\r" not in data
    lines = data.decode("utf-8").splitlines()
    assert lines[0] == "x,N,h,re,im,abs,trivial,hooley_bound,ratio"
    assert len(lines) == 1 + 4 + 2 and lines[5] == "slope,stderr,fitted_C"
    assert run(capsys, "scan", "--poly", "1,0,-2", "--x-start", "1024", "--x-end", "4096")[0] == 2
    assert run(capsys, "scan", "--poly", "1,0,-2", "--x-start", "1000", "--x-end", "9000")[0] == 2
    assert run(capsys, "scan", "--poly", "1,0,-2", "--x-start", "4096", "--x-end", "1024")[0] == 2


def test_scan_byte_identical_across_threads(capsys):
    outs = set()
    for t in ("1", "2", "8"):
        code, out, _ = run(capsys, "scan", "--poly", "2,1,-2", "--x-start", "1024",
                           "--x-end", "16384", "--threads", t)
        outs.add(out)
    assert len(outs) == 1


def test_threads_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("QC_THREADS", "0")
    assert run(capsys, "weyl", "--poly", "1,0,-2", "--x", "100")[0] == 2
    monkeypatch.setenv("QC_THREADS", "4")
    assert run(capsys, "weyl", "--poly", "1,0,-2", "--x", "100")[0] == 0


def test_config_defaults(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"poly": "1,0,-2", "h": 0}), encoding="utf-8")
    code, out, _ = run(capsys, "rho", "--config", str(cfg), "--n", "7")
    assert code == 0 and out == "7,2.0,0.0,2\n"
    code, out, _ = run(capsys, "rho", "--config", str(cfg), "--n", "7", "--h", "1")
    assert out.startswith("7,-1.80193")
    cfg.write_text("[1, 2]", encoding="utf-8")
    assert run(capsys, "rho", "--config", str(cfg), "--n", "7")[0] == 2
    assert run(capsys, "rho", "--config", str(tmp_path / "missing.json"), "--n", "7")[0] == 2


def test_equidist(capsys):
    code, out, _ = run(capsys, "equidist", "--poly", "1,0,-2", "--x", "1e5", "--bins", "20")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "bin_lo,bin_hi,count,expected,discrepancy" and len(lines) == 21
    disc = [abs(float(line.split(",")[4])) for line in lines[1:]]
    assert max(disc) < 0.02
    assert run(capsys, "equidist", "--poly", "1,0,-2", "--bins", "0")[0] == 2


def test_equidistribution_counts():
    rows = equidistribution(QuadPoly(1, 1, -1), 500, 4)
    assert sum(r[2] for r in rows) == sum(
        1 for n in range(1, 501) for v in range(n) if (v * v + v - 1) % n == 0)
    assert abs(sum(r[4] for r in rows)) < 1e-12


def test_poincare_check_small(capsys):
    code, out, _ = run(capsys, "poincare-check", "--poly", "1,0,-2", "--form=-2,0,1",
                       "--x", "30", "--N", "1", "--Y1", "2", "--h", "1")
    report = json.loads(out)
    assert code == 0 and report["abs_err"] < 1e-4 * (1 + abs(complex(report["lhs_re"], report["lhs_im"])))
    # a kappa cap below the needed cutoff is a tolerance failure
    code, _, err = run(capsys, "poincare-check", "--poly", "1,0,-2", "--x", "300", "--N", "1",
                       "--Y1", "2", "--kappa-max", "3")
    assert code == 3 and "kappa" in err
    assert run(capsys, "poincare-check", "--form", "1,1,-2", "--x", "30")[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "quadcong", "rho", "--poly", "1,0,-2", "--h", "1", "--n", "5"],
                          capture_output=True, check=False)
    assert proc.returncode == 0 and proc.stdout == b"5,0.0,0.0,0\n"
