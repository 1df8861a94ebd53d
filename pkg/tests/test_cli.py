import subprocess
import sys

import numpy as np
import pytest

from mtspec.cli import build_parser, main, parse_domain
from mtspec.domain import write_domain, random_blob


def _run(*args):
    return main([str(a) for a in args])


def _taper_columns(path):
    header = path.read_text().splitlines()[1].split(",")
    return [c for c in header if c.startswith("taper_")]


def test_tapers_interval(tmp_path):
    assert _run("tapers", "--domain", "interval(64)", "--w", 0.1, "--out", tmp_path) == 0
    assert len(_taper_columns(tmp_path / "tapers.csv")) == 7
    eig = [l for l in (tmp_path / "eigenvalues.txt").read_text().splitlines() if not l.startswith("#")]
    assert len(eig) == 7


def test_tapers_full_bandwidth(tmp_path):
    assert _run("tapers", "--domain", "interval(8)", "--w", 1, "--out", tmp_path) == 0
    assert len(_taper_columns(tmp_path / "tapers.csv")) == 8


def test_tapers_k_too_large(tmp_path, capsys):
    assert _run("tapers", "--domain", "interval(8)", "--k", 9, "--out", tmp_path) == 2
    assert "--k" in capsys.readouterr().err


def test_tapers_needs_one_of_w_k(tmp_path):
    assert _run("tapers", "--domain", "interval(8)", "--out", tmp_path) == 2
    assert _run("tapers", "--domain", "interval(8)", "--w", 0.5, "--k", 2, "--out", tmp_path) == 2


def test_domain_specs(tmp_path):
    assert parse_domain("rectangle(3,4)").cardinality == 12
    assert parse_domain("disk(1)").cardinality == 5
    assert parse_domain("disk(1,3)").cardinality == 7
    assert parse_domain("blob(30,2,5)") == random_blob(30, 2, 5)
    path = tmp_path / "d.txt"
    write_domain(random_blob(20, 2, 1), path)
    assert parse_domain(str(path)) == random_blob(20, 2, 1)
    with pytest.raises(ValueError):
        parse_domain("triangle(3)")
    with pytest.raises(ValueError):
        parse_domain(str(tmp_path / "missing.txt"))


def test_estimate_zero_sample(tmp_path):
    sample = tmp_path / "s.csv"
    sample.write_text("x1,value\n" + "".join(f"{i},0.0\n" for i in range(1, 11)))
    assert _run("estimate", "--sample", sample, "--k", 3, "--out", tmp_path / "o") == 0
    data = np.loadtxt(tmp_path / "o" / "estimate.csv", delimiter=",", skiprows=1)
    assert np.all(data[:, 1] == 0)


def test_estimate_simulated_constant(tmp_path):
    assert _run("estimate", "--domain", "rectangle(5,5)", "--density", "constant(0.5)", "--k", 4,
                "--out", tmp_path, "--svg") == 0
    assert (tmp_path / "estimate.svg").read_text().startswith("<svg")
    assert (tmp_path / "lags.csv").exists()


def test_estimate_missing_sample(tmp_path):
    assert _run("estimate", "--sample", tmp_path / "nope.csv", "--k", 2, "--out", tmp_path) == 2


def test_estimate_length_mismatch(tmp_path):
    sample = tmp_path / "s.csv"
    sample.write_text("x1,value\n1,0.5\n2,0.1\n3,0.2\n")
    assert _run("estimate", "--domain", "interval(5)", "--sample", sample, "--k", 2, "--out", tmp_path) == 2


def test_simulate_round_trip(tmp_path):
    assert _run("simulate", "--domain", "disk(2)", "--density", "cosine(0.5,0.1)", "--seed", 3,
                "--out", tmp_path) == 0
    assert _run("estimate", "--domain", "disk(2)", "--sample", tmp_path / "sample.csv", "--w", 0.5,
                "--out", tmp_path) == 0


def test_not_samplable_exit_code(tmp_path):
    assert _run("simulate", "--domain", "interval(6)", "--density", "cosine(0.5,0.6)", "--out", tmp_path) == 3


def test_rate_synthetic_echoes_exponent(tmp_path):
    assert _run("rate", "--sizes", "64,128,256,512", "--synthetic", 0.8, "--out", tmp_path, "--svg") == 0
    footer = [l for l in (tmp_path / "rate.csv").read_text().splitlines() if l.startswith("# slope=")]
    slope = float(footer[0].split("slope=")[1].split()[0])
    assert slope == pytest.approx(0.8, abs=1e-12)
    assert "polyline" in (tmp_path / "rate.svg").read_text()


def test_rate_needs_three_sizes(tmp_path):
    assert _run("rate", "--sizes", "64,128", "--synthetic", 0.8, "--out", tmp_path) == 2


def test_rate_simulated_rows(tmp_path):
    assert _run("rate", "--sizes", "32,64,128", "--density", "cosine(0.5,0.02)", "--replicates", 5,
                "--out", tmp_path, "--svg") == 0
    lines = (tmp_path / "rate.csv").read_text().splitlines()
    rows = [l for l in lines[1:] if not l.startswith("#")]
    assert len(rows) == 3
    assert any(l.startswith("# slope=") for l in lines)
    assert (tmp_path / "rate.json").exists()


def test_rate_square_family(tmp_path):
    assert _run("rate", "--family", "square", "--sizes", "4,6,8", "--density", "constant(0.5)",
                "--replicates", 3, "--out", tmp_path) == 0


def test_fano_rejects_inadmissible(tmp_path, capsys):
    assert _run("fano", "--d", 1, "--M", 4, "--tau", 0.5, "--out", tmp_path) == 2
    assert "epsilon=0.00806" in capsys.readouterr().err


def test_fano_tau_001_properties(tmp_path, capsys):
    # 0.01 exceeds the C2 ceiling, so the run needs the override flag
    assert _run("fano", "--d", 1, "--M", 4, "--tau", 0.01, "--out", tmp_path) == 2
    capsys.readouterr()
    assert _run("fano", "--d", 1, "--M", 4, "--tau", 0.01, "--allow-inadmissible", "--out", tmp_path) == 0
    out = capsys.readouterr().out
    for name in ("floor_is_half", "sup_distance", "l2_distance", "partial_sum_deviation",
                 "partial_sum_nonnegative", "coefficient_symmetry", "disjoint_supports", "parseval_chain"):
        line = next(l for l in out.splitlines() if name in l)
        assert "PASS" in line
    assert "c2_admissible            FAIL" in out


def test_fano_single_member(tmp_path):
    assert _run("fano", "--d", 1, "--M", 1, "--tau", 0.005, "--out", tmp_path) == 0
    assert (tmp_path / "fano.csv").exists()


def test_idempotent_outputs(tmp_path):
    runs = [
        ("tapers", "--domain", "disk(2.5)", "--w", 0.6, "--svg"),
        ("estimate", "--domain", "interval(30)", "--density", "cosine(0.5,0.02)", "--k", 4, "--seed", 9, "--svg"),
        ("rate", "--sizes", "16,32,64", "--density", "constant(0.5)", "--replicates", 4, "--svg"),
        ("fano", "--d", 1, "--M", 2, "--tau", 0.004),
    ]
    for args in runs:
        a, b = tmp_path / "a", tmp_path / "b"
        assert _run(*args, "--out", a) == 0
        assert _run(*args, "--out", b) == 0
        for f in a.iterdir():
            assert f.read_bytes() == (b / f.name).read_bytes(), f.name
        for d in (a, b):
            for f in d.iterdir():
                f.unlink()


def test_threads_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("MTSPEC_THREADS", "2")
    assert _run("estimate", "--domain", "interval(12)", "--density", "constant(0.5)", "--k", 2,
                "--out", tmp_path) == 0
    monkeypatch.setenv("MTSPEC_THREADS", "zero")
    assert _run("estimate", "--domain", "interval(12)", "--density", "constant(0.5)", "--k", 2,
                "--out", tmp_path) == 2


def test_help_lists_flags(capsys):
    for cmd in ("tapers", "estimate", "simulate", "rate", "fano"):
        with pytest.raises(SystemExit) as info:
            main([cmd, "--help"])
        assert info.value.code == 0
        text = capsys.readouterr().out
        for flag in ("--domain", "--oversample", "--replicates", "--seed", "--out", "--threads", "--svg"):
            assert flag in text
    est = build_parser().parse_args(["estimate", "--w", "0.2"])
    assert est.w == 0.2


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as info:
        main(["tapers", "--bogus"])
    assert info.value.code == 2


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "mtspec", "tapers", "--domain", "interval(5)", "--k", "2",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
