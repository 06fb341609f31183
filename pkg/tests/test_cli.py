"""
Tests for the command line.
"""

import json

import pytest

from app.cli import EXIT_CERTIFICATION, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main, parse_n_range
from app.exceptions import UsageError


def test_parse_n_range():
    assert parse_n_range("1:5") == [1, 2, 3, 4, 5]
    assert parse_n_range("10:10000:log") == [10, 100, 1000, 10000]
    assert parse_n_range("3:3") == [3]
    for text in ("5:1", "0:3", "1:5:lin", "a:b"):
        with pytest.raises(UsageError):
            parse_n_range(text)


def test_spectrum_maxwell(capsys):
    assert main(["spectrum", "--family", "maxwell-cattaneo", "--n-range", "1:5"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "family,n,k,re,im,residual,method,certified"
    assert len(lines) == 11
    assert all(line.split(",")[3] == format(-0.5, ".16e") for line in lines[1:])


def test_spectrum_negative_box(capsys):
    assert main(["spectrum", "--family", "parabolic-delay", "--n", "1", "--box", "-1,1,0.1,40"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2
    assert float(lines[1].split(",")[3]) == pytest.approx(-0.3181315052047641, abs=1e-12)


def test_spectrum_is_byte_identical(capsys):
    argv = ["spectrum", "--family", "hyperbolic-delay", "--n", "1"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == first


def test_certify_exit_codes(capsys):
    assert main(["certify", "--b", "1", "--n", "1"]) == EXIT_CERTIFICATION
    assert main(["certify", "--b", "2", "--n", "100"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[-2].startswith("n,x_n,y_n,margin,residual")
    assert lines[-1].startswith("100,")


def test_certify_json(capsys):
    assert main(["certify", "--b", "1", "--n-range", "10:10000:log", "--format", "json"]) == EXIT_OK
    document = json.loads(capsys.readouterr().out)
    xs = [row["x_n"] for row in document["table"]]
    assert len(xs) == 4
    assert all(a < b for a, b in zip(xs, xs[1:]))
    assert document["meta"]["smallest_certified_n"] == 10
    assert all(root["certified"] for root in document["roots"])


def test_stablecheck(capsys):
    assert main(["stablecheck", "--n-range", "1:5"]) == EXIT_OK
    assert main(["stablecheck", "--family", "parabolic-delay", "--n", "100", "--lemma-disk"]) == EXIT_CERTIFICATION


def test_asymptote_perturbed(capsys):
    assert main(["asymptote", "--family", "perturbed-hyperbolic", "--n-range", "50:120", "--format", "json"]) == EXIT_OK
    document = json.loads(capsys.readouterr().out)
    assert document["table"]
    assert all(row["y_in_bracket"] for row in document["table"])


def test_simulate_writes_trajectory(capsys, tmp_path):
    path = tmp_path / "traj.txt"
    code = main(["simulate", "--family", "maxwell-cattaneo", "--n", "1", "--t-end", "60", "--trajectory", str(path), "--format", "json"])
    assert code == EXIT_OK
    document = json.loads(capsys.readouterr().out)
    assert document["table"][0]["sigma_hat"] == pytest.approx(-0.5, abs=0.02)
    assert path.exists()


def test_usage_errors(capsys):
    assert main(["spectrum", "--family", "heat", "--n", "1"]) == EXIT_USAGE
    assert main(["spectrum", "--family", "parabolic-delay", "--n-range", "9:1"]) == EXIT_USAGE
    assert main(["spectrum", "--family", "parabolic-delay", "--n", "1", "--box", "1,0,0,1"]) == EXIT_USAGE
    assert main(["simulate", "--family", "parabolic-delay", "--n", "1", "--history", "ramp:1"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE


def test_numeric_error_exit_code(capsys):
    assert main(["simulate", "--family", "parabolic-delay", "--n", "1", "--dt", "0.03"]) == EXIT_NUMERIC


def test_config_file(capsys, tmp_path):
    config = tmp_path / "quasiroots.env"
    config.write_text("newton_tol=1e-10\nQUASIROOTS_ROUCHE_SAMPLES=8192\n")
    code = main(["--config", str(config), "spectrum", "--family", "maxwell-cattaneo", "--n", "1", "--format", "json"])
    assert code == EXIT_OK
    settings = json.loads(capsys.readouterr().out)["meta"]["settings"]
    assert settings["newton_tol"] == 1e-10
    assert settings["rouche_samples"] == 8192


def test_config_file_unknown_key(capsys, tmp_path):
    config = tmp_path / "bad.env"
    config.write_text("colour=blue\n")
    assert main(["--config", str(config), "spectrum", "--family", "maxwell-cattaneo", "--n", "1"]) == EXIT_USAGE


def test_output_files(capsys, tmp_path):
    code = main(["spectrum", "--family", "maxwell-cattaneo", "--n", "2", "--format", "both", "--output", str(tmp_path / "mc")])
    assert code == EXIT_OK
    assert (tmp_path / "mc.csv").exists()
    assert (tmp_path / "mc.json").exists()


def test_spectrum_stable_window_is_empty(capsys):
    argv = ["spectrum", "--family", "stable-parabolic-delay", "--n", "1", "--box", "0.5,40,-200,200"]
    assert main(argv) == EXIT_OK
    assert capsys.readouterr().out.splitlines() == ["family,n,k,re,im,residual,method,certified"]


def test_simulate_stable_family(capsys):
    code = main(["simulate", "--family", "stable-parabolic-delay", "--n", "3", "--t-end", "60", "--no-compare", "--format", "json"])
    assert code == EXIT_OK
    assert json.loads(capsys.readouterr().out)["table"][0]["sigma_hat"] < 0


@pytest.mark.parametrize("family, expected", [("maxwell-cattaneo", -0.5), ("parabolic-delay", None)])
def test_simulate_default_span(capsys, family, expected):
    code = main(["simulate", "--family", family, "--n", "1", "--format", "json"])
    assert code == EXIT_OK
    document = json.loads(capsys.readouterr().out)
    assert document["meta"]["t_end"] == 80.0
    row = document["table"][0]
    if expected is not None:
        assert row["sigma_hat"] == pytest.approx(expected, abs=0.02)
    assert row["rel_error"] <= 0.05
