import json
import subprocess
import sys
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qensemble.cli import RunConfig, dumps, main, run
from qensemble.errors import SpectrumParseError
from qensemble.specfile import format_spectrum, parse_spectrum, read_spectrum, write_spectrum
from qensemble.spectrum import Spectrum

TWO_LEVEL = "# two-level system\nlow 0\nhigh 1\n"
THREE_LEVEL = "a 0\nb 1\nc 2\n"


@pytest.fixture
def two_file(tmp_path):
    path = tmp_path / "two.txt"
    path.write_text(TWO_LEVEL)
    return path


@pytest.fixture
def three_file(tmp_path):
    path = tmp_path / "three.txt"
    path.write_text(THREE_LEVEL)
    return path


def structured(capsys, argv):
    status = main(argv + ["--format", "structured"])
    out = capsys.readouterr().out
    return status, json.loads(out)


# -- run() ------------------------------------------------------------------

def test_run_solve_q_example():
    status, doc, _, _ = run(RunConfig("solve-q", q=2.0, abar="0.25"), parse_spectrum(TWO_LEVEL))
    assert status == 0
    res = doc["result"]
    assert max(res["identity_residuals"].values()) <= 1e-10
    assert abs(res["stationarity_residual"]) <= 1e-6
    assert res["q_mean"] == pytest.approx(0.25, abs=1e-10)


def test_run_count_example():
    status, doc, rows, _ = run(RunConfig("count", N=[8], abar="1/4", eps="0.1"), parse_spectrum(TWO_LEVEL))
    assert status == 0
    res = doc["result"]
    assert res["Y_N"] == "28"
    assert res["distribution"]["p_exact"]["high"] == "1/4"
    assert res["distribution"]["p"]["high"] == 0.25
    assert ("p(high)", "1/4") in rows


@pytest.mark.parametrize("q", [0.3, 1.0, 3.7])
def test_run_qmath_example(q):
    status, doc, _, _ = run(RunConfig("qmath", fn="ln_q", x=1.0, q=q))
    assert status == 0 and doc["result"]["value"] == 0.0


def test_run_qmath_ratio_and_exp():
    _, doc, _, _ = run(RunConfig("qmath", fn="ln_q_ratio", x=2.0, y=4.0, q=2.0))
    assert doc["result"]["value"] == pytest.approx(-1.0)
    _, doc, _, _ = run(RunConfig("qmath", fn="e_q", x=-3.0, q=0.5))
    assert doc["result"]["value"] == 0.0


def test_run_solve_bg_modes():
    spec = parse_spectrum(TWO_LEVEL)
    _, doc, _, _ = run(RunConfig("solve-bg", abar="1/4"), spec)
    assert doc["result"]["beta"] == pytest.approx(1.0986122886681098, rel=1e-12)
    assert doc["result"]["S"] == pytest.approx(doc["result"]["ln_Ztilde"], rel=1e-12)
    _, doc, _, _ = run(RunConfig("solve-bg", beta=0.0), spec)
    assert doc["result"]["distribution"]["p"] == {"low": 0.5, "high": 0.5}


@pytest.mark.parametrize("cfg, code", [
    (RunConfig("solve-bg"), "usage"),
    (RunConfig("solve-bg", abar="0.2", beta=1.0), "usage"),
    (RunConfig("solve-q", q=2.0), "usage"),
    (RunConfig("count", N=[4, 8], abar="1/4"), "usage"),
    (RunConfig("entropy-rate", N=[4], abar="1/4"), None),
])
def test_run_usage(cfg, code):
    status, doc, _, _ = run(cfg, parse_spectrum(TWO_LEVEL))
    if code is None:
        assert status == 0
    else:
        assert status == 1 and doc["error"]["code"] == code


def test_run_requires_spectrum():
    status, doc, _, _ = run(RunConfig("count", N=[4], abar="1/2"))
    assert status == 1 and "spectrum" in doc["error"]["message"]


def test_run_infeasible_and_empty():
    spec = parse_spectrum(TWO_LEVEL)
    status, doc, _, _ = run(RunConfig("solve-q", q=1.5, abar="1"), spec)
    assert status == 2 and doc["error"]["code"]
    status, doc, _, _ = run(RunConfig("count", N=[4], abar="1/3", eps="1/100"), spec)
    assert status == 2
    assert "1/4" in doc["error"]["message"]


def test_run_entropy_rate_and_beta():
    spec = parse_spectrum(TWO_LEVEL)
    _, doc, _, _ = run(RunConfig("entropy-rate", N=[64], abar="1/2", q=1.0), spec)
    assert doc["result"]["rate_log"] == doc["result"]["rate_qlog"]
    _, doc, _, _ = run(RunConfig("beta", N=[128], abar="1/2"), spec)
    assert abs(doc["result"]["beta"]) <= 0.02


def test_run_qcheck_fit_study():
    spec = parse_spectrum(THREE_LEVEL)
    status, doc, _, _ = run(RunConfig("qcheck", N=[64], abar="4/5", q=1.0), spec)
    assert status == 0 and len(doc["result"]["rows"]) == 3
    assert set(doc["result"]["log_W_readings"]) == {"lnY/(N+1)", "lnY*(N+1)/N"}
    status, doc, _, _ = run(RunConfig("fit", N=[64], abar="4/5"), spec)
    assert status == 0 and 0.5 <= doc["result"]["q_hat"] <= 2.0
    status, doc, _, _ = run(RunConfig("study", N=[32, 64], abar="4/5"), spec)
    assert [r["N"] for r in doc["result"]["reports"]] == [32, 64]


def test_run_verify_default_and_negative_control():
    status, doc, _, _ = run(RunConfig("verify"))
    assert status == 0 and doc["result"]["passed"]
    status, doc, _, _ = run(RunConfig("verify", tol=0.0))
    assert status == 3 and not doc["result"]["passed"]


def test_verify_includes_bg_when_q1_in_grid():
    _, doc, _, _ = run(RunConfig("verify", q_grid=[1.0, 2.0]))
    names = {c["name"] for c in doc["result"]["checks"]}
    assert {"bg_entropy", "bg_mean"} <= names
    _, doc, _, _ = run(RunConfig("verify", q_grid=[2.0]))
    assert "bg_entropy" not in {c["name"] for c in doc["result"]["checks"]}


# -- main() -----------------------------------------------------------------

def test_main_exit_codes(capsys, two_file, tmp_path):
    assert main(["qmath", "--x", "1", "--q", "2"]) == 0
    assert main(["solve-q", str(two_file), "--q", "2", "--abar", "0.25"]) == 0
    assert main(["solve-q", str(two_file), "--q", "2", "--abar", "2"]) == 2
    assert main(["count", str(two_file), "--N", "4", "--abar", "1/3", "--eps", "1/100"]) == 2
    assert main(["verify", str(two_file), "--tol", "0"]) == 3
    assert main(["solve-q", str(two_file), "--q", "2"]) == 1
    bad = tmp_path / "bad.txt"
    bad.write_text("low 0\nhigh 1.x\n")
    assert main(["solve-bg", str(bad), "--beta", "1"]) == 1
    assert main(["solve-bg", str(tmp_path / "missing.txt"), "--beta", "1"]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["not-a-mode"])
    assert exc.value.code == 1
    err = capsys.readouterr().err
    assert "line 2, column 6" in err


def test_main_table_output(capsys, two_file):
    assert main(["count", str(two_file), "--N", "8", "--abar", "1/4", "--eps", "0.1"]) == 0
    out = capsys.readouterr().out
    assert "Y_N" in out and "28" in out and "p(high)  1/4" in out


def test_structured_schema(capsys, two_file):
    status, doc = structured(capsys, ["solve-q", str(two_file), "--q", "2", "--abar", "1/4"])
    assert status == 0
    assert doc["schema_version"] == 1 and doc["mode"] == "solve-q"
    assert doc["spectrum"]["energies"] == ["0", "1"]
    status, doc = structured(capsys, ["solve-q", str(two_file), "--q", "2", "--abar", "3"])
    assert status == 2 and doc["error"]["code"] == "infeasible-mean"


def test_determinism_byte_identical(tmp_path, two_file):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}.json"
        argv = ["qcheck", str(two_file), "--N", "64", "--abar", "1/4", "--q", "1.5", "--out", str(out)]
        assert main(argv) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_subprocess_entry_point(two_file):
    cmd = [sys.executable, "-m", "qensemble", "count", str(two_file), "--N", "4",
           "--abar", "1/2", "--eps", "0.13", "--format", "structured"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b
    assert json.loads(a)["result"]["Y_N"] == "6"


@pytest.mark.parametrize("argv, first_col", [
    (["solve-q", "--q", "1.5", "--abar", "0.3"], "energy"),
    (["count", "--N", "16", "--abar", "1/4"], "energy"),
    (["study", "--N", "32,64", "--abar", "4/5"], "N"),
    (["fit", "--N", "64", "--abar", "4/5"], "energy"),
    (["qcheck", "--N", "64", "--abar", "4/5", "--q", "1"], "energy"),
    (["solve-bg", "--beta", "0.7"], "energy"),
])
def test_plot_output(tmp_path, three_file, argv, first_col):
    data = tmp_path / "plot.dat"
    argv = argv[:1] + [str(three_file)] + argv[1:] + ["--plot-out", str(data)]
    assert main(argv) == 0
    lines = data.read_text().splitlines()
    assert lines[0].startswith(f"# {first_col} ")
    rows = [list(map(float, ln.split())) for ln in lines[1:]]
    assert rows and all(len(r) == 2 for r in rows)
    png = data.with_suffix(".png")
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_plot_not_offered_for_scalar_modes(three_file, tmp_path):
    assert main(["beta", str(three_file), "--N", "16", "--abar", "1", "--plot-out", str(tmp_path / "x.dat")]) == 1


# -- spectrum files ---------------------------------------------------------

def test_parse_spectrum_basic():
    spec = parse_spectrum("g 0 1  # ground\n\n  e1 1/3 2\ne2 0.25\n")
    assert spec.labels == ("g", "e1", "e2")
    assert spec.exact_energies == (Fraction(0), Fraction(1, 3), Fraction(1, 4))
    assert spec.degeneracies.tolist() == [1, 2, 1]


@pytest.mark.parametrize("text, line, column", [
    ("a 0\nb 1.x\n", 2, 3),
    ("a 0\na 1\n", 2, 1),
    ("a 0 0\n", 1, 5),
    ("a 0 1.5\n", 1, 5),
    ("a\n", 1, 1),
    ("a 0 1 extra\n", 1, 1),
    ("a 0\n  b 1/0\n", 2, 5),
])
def test_parse_errors_locate(text, line, column):
    with pytest.raises(SpectrumParseError) as exc:
        parse_spectrum(text)
    assert (exc.value.line, exc.value.column) == (line, column)


def test_parse_empty():
    with pytest.raises(SpectrumParseError):
        parse_spectrum("# nothing\n\n")


fractions = st.fractions(min_value=-50, max_value=50, max_denominator=1000)


@settings(max_examples=50)
@given(entries=st.lists(st.tuples(fractions, st.integers(1, 9)), min_size=1, max_size=8))
def test_spectrum_round_trip(entries):
    spec = Spectrum([e for e, _ in entries], [g for _, g in entries],
                    labels=[f"s{i}" for i in range(len(entries))])
    again = parse_spectrum(format_spectrum(spec))
    assert again == spec
    assert again.exact_energies == spec.exact_energies


def test_spectrum_file_round_trip(tmp_path):
    spec = Spectrum(["0", "0.3", "7/3"], [1, 2, 5], labels=["x", "y", "z"])
    path = tmp_path / "s.txt"
    write_spectrum(spec, path)
    assert read_spectrum(path) == spec


def test_dumps_big_counts_as_strings():
    _, doc, _, _ = run(RunConfig("count", N=[512], abar="1/2"), parse_spectrum(TWO_LEVEL))
    text = dumps(doc)
    assert int(json.loads(text)["result"]["Y_N"]) > 2**400
