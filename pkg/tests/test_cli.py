import csv
import io
import json
import math
import subprocess
import sys

import pytest

from breakrenorm.cli import main, raster_regions, render


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_rotnum_csv(capsys):
    code, out, _ = run(capsys, "rotnum", "--c", "2", "--a", "1", "--v", "0.5", "--depth", "8")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[0]["schema"] == "1"
    assert rows[0]["cf"] == "2 1 1 4 7 2 3 1"


def test_rotnum_jsonl(capsys):
    code, out, _ = run(capsys, "rotnum", "--c", "2", "--a", "1", "--v", "0.5", "--depth", "4",
                       "--format", "jsonl")
    row = json.loads(out)
    assert code == 0 and row["cf"] == [2, 1, 1, 4]
    assert row["rho_lo"] <= row["rho_hi"]


@pytest.mark.parametrize("argv,code", [
    (["rotnum", "--a", "1", "--v", "0.5"], 64),
    (["rotnum", "--c", "2"], 64),
    (["rotnum", "--c", "2", "--a", "x", "--v", "0.5"], 64),
    (["periodic", "--c", "1.5", "--word", "1"], 64),
    (["rotnum", "--c", "2", "--a", "3", "--v", "0.5"], 1),
    (["periodic", "--c", "1.0", "--word", "1,1"], 1),
    (["periodic", "--c", "1.5", "--word", "1,1", "--tol", "1e-30"], 2),
])
def test_exit_codes(capsys, argv, code):
    try:
        got = main(argv)
    except SystemExit as e:
        got = e.code
    _, err = capsys.readouterr()
    assert got == code
    if code:
        assert err


def test_renorm_orbit(capsys):
    code, out, _ = run(capsys, "renorm-orbit", "--c", "2", "--a", "1", "--v", "0.5", "--depth", "2",
                       "--format", "jsonl")
    rows = [json.loads(x) for x in out.splitlines()]
    assert code == 0
    assert rows[1]["a"] == pytest.approx(16 / 9, rel=1e-13)


def test_regions_output_is_deterministic(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"r{k}.csv"
        subprocess.run([sys.executable, "-m", "breakrenorm.cli", "regions", "--c", "3", "--grid", "24",
                        "--out", str(path)], check=True)
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    rows = list(csv.DictReader(io.StringIO(outs[0].decode())))
    assert len(rows) == 24 * 24
    assert {r["class"] for r in rows} >= {"renormalizable", "nonrenormalizable"}


def test_regions_below_one_have_no_nonrenormalizable_cells():
    rows = raster_regions(0.8, 30)
    assert not any(r["class"] == "nonrenormalizable" for r in rows)


def test_render_special_values():
    rows = [{"x": math.inf, "y": math.nan, "z": [1, 2]}]
    assert render(rows, "csv").splitlines()[1] == "inf,,1 2"
    assert json.loads(render(rows, "jsonl")) == {"x": "inf", "y": None, "z": [1, 2]}


@pytest.mark.parametrize("argv", [
    ["periodic", "--c", "1.5", "--word", "2,1"],
    ["curve", "--c", "1.5", "--word", "1,1", "--grid", "4"],
    ["attractor", "--c", "1.5", "--word", "2,1"],
    ["hyperbolicity", "--c", "1.5", "--word", "1,1", "--depth", "2"],
    ["duality-check", "--c", "0.8", "--a", "0.5", "--v", "-0.1"],
    ["cone-check", "--c", "1.5", "--a", "1.2", "--v", "0.2"],
    ["apriori-scan", "--c", "1.5", "--samples", "200"],
])
def test_subcommands_run(capsys, argv):
    code, out, _ = run(capsys, *argv, "--format", "jsonl")
    assert code == 0
    rows = [json.loads(x) for x in out.splitlines()]
    assert rows and all(r["schema"] == 1 for r in rows)


def test_out_file(tmp_path, capsys):
    path = tmp_path / "o.jsonl"
    assert main(["cone-check", "--c", "0.8", "--a", "0.5", "--v", "-0.1", "--format", "jsonl",
                 "--out", str(path)]) == 0
    assert capsys.readouterr().out == ""
    assert json.loads(path.read_text())["status"] == "inside"
