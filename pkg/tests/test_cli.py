import csv
import os
from pathlib import Path

import numpy as np
import pytest

from cstarphase import cli

GOLDEN = Path(__file__).parent / "golden"

# (golden csv, argv) pairs; the CSVs were frozen from these exact invocations
GOLDEN_RUNS = [
    ("spectrum_ramp.csv", ["spectrum", "--path", "ramp.path"]),
    ("holonomy_loops.csv", ["holonomy", "--path", "loops.path"]),
    ("evolve_const.csv", ["evolve", "--path", "const.path"]),
    ("evolve_loop_l3.csv", ["evolve", "--path", "loop_short.path", "--level", "L3"]),
]


def run(argv, tmp_path):
    out = tmp_path / "out.csv"
    argv = [a if not a.endswith(".path") else str(GOLDEN / a) for a in argv]
    code = cli.main([*argv, "--out", str(out)])
    return code, out


def read_lines(path):
    return Path(path).read_text().splitlines()


def write_path_file(tmp_path, text):
    f = tmp_path / "paths.txt"
    f.write_text(text)
    return str(f)


@pytest.mark.parametrize("golden, argv", GOLDEN_RUNS, ids=[g for g, _ in GOLDEN_RUNS])
def test_golden_header_and_end_rows(golden, argv, tmp_path):
    code, out = run(argv, tmp_path)
    assert code == cli.EXIT_OK
    got, want = read_lines(out), read_lines(GOLDEN / golden)
    assert len(got) == len(want)
    assert got[0] == want[0]
    assert got[1] == want[1]
    assert got[-1] == want[-1]


def test_headers_match_documented_columns(tmp_path):
    for golden, cols in [
        ("spectrum_ramp.csv", cli.SPECTRUM_COLUMNS),
        ("holonomy_loops.csv", cli.HOLONOMY_COLUMNS),
        ("evolve_const.csv", cli.EVOLVE_COLUMNS),
    ]:
        assert read_lines(GOLDEN / golden)[0].split(",") == cols


def test_spectrum_sums_to_zero(tmp_path):
    code, out = run(["spectrum", "--path", "ramp.path", "--hbar", "0.7"], tmp_path)
    assert code == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    lam = np.array([[float(r[f"lambda{i}"]) for i in range(1, 5)] for r in rows])
    np.testing.assert_allclose(lam.sum(axis=1), 0, atol=1e-12)
    # lambda1 = hbar (alpha - 2B) / 4 at the first sample: alpha = 2, B = 1
    assert lam[0, 0] == pytest.approx(0.0, abs=1e-15)
    assert lam[0, 1] == pytest.approx(0.7, abs=1e-14)


def test_holonomy_one_row_per_loop(tmp_path):
    code, out = run(["holonomy", "--path", "loops.path"], tmp_path)
    assert code == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert [r["loop_id"] for r in rows] == ["0", "1"]
    for r in rows:
        assert float(r["abs_error"]) < 1e-12
        assert float(r["instanton_factor"]) == pytest.approx(1.0, abs=1e-9)


def test_steps_override(tmp_path):
    code, out = run(["spectrum", "--path", "ramp.path", "--steps", "10"], tmp_path)
    assert code == 0
    assert len(read_lines(out)) == 12


def test_stdout_when_no_out(capsys):
    assert cli.main(["spectrum", "--path", str(GOLDEN / "const.path"), "--steps", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split(",") == cli.SPECTRUM_COLUMNS
    assert len(lines) == 4


def test_evolve_flags_fast_loop(tmp_path, capsys):
    f = write_path_file(tmp_path, "loop theta=1 B=1 alpha=0.5 T=2 steps=100\n")
    assert cli.main(["evolve", "--path", f, "--out", str(tmp_path / "e.csv")]) == 0
    assert "NON-ADIABATIC" in capsys.readouterr().err


def test_evolve_quiet_on_constant_path(tmp_path, capsys):
    assert run(["evolve", "--path", "const.path"], tmp_path)[0] == 0
    assert "NON-ADIABATIC" not in capsys.readouterr().err


class TestExitCodes:
    def test_verify_default_suite_passes(self, capsys):
        assert cli.main(["verify"]) == cli.EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines and all(line.startswith("PASS ") for line in lines)

    def test_verify_fails_on_degenerate_path(self, tmp_path, capsys):
        f = write_path_file(tmp_path, "const B=(0,0,0) alpha=1 T=1 steps=3\n")
        assert cli.main(["verify", "--path", f]) == cli.EXIT_FAIL
        assert "FAIL degeneracy_guard" in capsys.readouterr().out

    def test_parse_error_is_usage(self, tmp_path, capsys):
        f = write_path_file(tmp_path, "loop theta=1.5 B=1 alpha=-1 T=1 steps=3\n")
        assert cli.main(["spectrum", "--path", f]) == cli.EXIT_USAGE
        assert "line 1, column" in capsys.readouterr().err

    @pytest.mark.parametrize(
        "argv",
        [
            ["bogus"],
            ["spectrum"],
            ["spectrum", "--path", "/nonexistent/paths.txt"],
            ["spectrum", "--path", str(GOLDEN / "const.path"), "--hbar", "0"],
            ["spectrum", "--path", str(GOLDEN / "const.path"), "--steps", "1"],
            ["evolve", "--path", str(GOLDEN / "loops.path")],
            ["holonomy", "--path", str(GOLDEN / "ramp.path")],
        ],
    )
    def test_usage_errors(self, argv, capsys):
        assert cli.main(argv) == cli.EXIT_USAGE


def test_atomic_write_leaves_no_temp_files(tmp_path):
    target = tmp_path / "x.csv"
    target.write_text("old\n")
    cli.write_csv(["a", "b"], [[1, 0.5]], str(target))
    assert target.read_text() == "a,b\n1,0.5\n"
    assert os.listdir(tmp_path) == ["x.csv"]


def test_atomic_write_keeps_old_file_on_failure(tmp_path):
    target = tmp_path / "x.csv"
    target.write_text("old\n")

    def rows():
        yield [1.0]
        raise RuntimeError("boom")

    with pytest.raises(RuntimeError):
        cli.write_csv(["a"], rows(), str(target))
    assert target.read_text() == "old\n"
    assert os.listdir(tmp_path) == ["x.csv"]


def test_floats_round_trip_bit_exactly(tmp_path):
    xs = [0.1, 1 / 3, np.pi * 1e-17, -2.5e300]
    target = tmp_path / "f.csv"
    cli.write_csv(["x"], [[x] for x in xs], str(target))
    assert [float(v) for v in read_lines(target)[1:]] == xs
