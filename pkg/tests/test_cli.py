import json

import pytest

from halfwt.cli import UsageError, main, parse_char, parse_weight


def test_parse_weight():
    assert parse_weight("3/2") == 3
    assert parse_weight("5/2") == 5
    assert parse_weight("2") == 4
    for bad in ("1/2", "1", "3/4", "x"):
        with pytest.raises(UsageError):
            parse_weight(bad)


def test_parse_char():
    assert parse_char("kronecker:-3", 12).modulus == 12
    assert parse_char("12:1,0", 12).label == "12:1,0"
    with pytest.raises(UsageError):
        parse_char("12:7,7,7", 12)


@pytest.mark.parametrize(
    "argv",
    [
        ["space", "--level", "36", "--weight", "1/2"],
        ["scan", "--p", "5", "--char", "bogus"],
        ["scan", "--p", "4"],
        ["scan", "--p", "5", "--N", "5"],
        ["frobnicate"],
    ],
)
def test_usage_errors_exit_1(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_space_command_with_cache(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("HALFWT_CACHE_DIR", str(tmp_path))
    argv = ["--cache-dir", str(tmp_path), "space", "--level", "36", "--weight", "3/2", "--char", "kronecker:12"]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert "theta" in first
    assert main(argv) == 0
    assert capsys.readouterr().out == first
    assert list(tmp_path.glob("space-*.json"))


def test_hecke_and_charpoly(capsys):
    assert main(["charpoly", "--level", "11", "--weight", "2", "--ell", "2", "--fredholm"]) == 0
    out = capsys.readouterr().out
    assert "1 + 2*T" in out


def test_theta_example_report(capsys):
    assert main(["theta-example", "--p", "5", "--prec", "50"]) == 0
    out = capsys.readouterr().out
    assert "U(5^2): -5" in out
    assert "T(7^2): 8" in out
    assert "T(11^2): -12" in out
    assert "slope 1, 2 lambda - 1 = 1: critical" in out
    assert "lift = E*_psi: True" in out


def test_theta_example_kernel_branch(capsys):
    assert main(["theta-example", "--p", "3", "--prec", "30"]) == 0
    out = capsys.readouterr().out
    assert "U_9 theta_psi = 0" in out
    assert "kernel of U_9" in out


def test_lift_command(capsys):
    assert main(["lift", "--p", "5", "--prec", "30", "--terms", "10"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["level"] == 90
    assert data["flags"]["membership"]


def test_scan_writes_outputs(tmp_path, capsys):
    assert main(["scan", "--p", "3", "--N", "1", "--grid", "1,2", "--out", str(tmp_path)]) == 0
    names = sorted(f.name for f in tmp_path.iterdir())
    assert names == ["scan_p3_N1.csv", "scan_p3_N1.json", "scan_p3_N1.png"]
    data = json.loads((tmp_path / "scan_p3_N1.json").read_text())
    assert data["divisibility_ok"] and data["invariants_ok"]
    assert (tmp_path / "scan_p3_N1.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
