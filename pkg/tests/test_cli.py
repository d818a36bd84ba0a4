import json
import subprocess
import sys

import pytest

from decstar import cli

SUBCOMMANDS = ["info", "dual", "hodge", "cond", "table1", "solve", "wave",
               "sample-field", "fig8", "convert"]


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    lines = [json.loads(l) for l in out.out.splitlines() if l.strip()]
    return code, lines, out.err


@pytest.mark.parametrize("name", SUBCOMMANDS)
def test_help_contract(name):
    proc = subprocess.run(
        [sys.executable, "-m", "decstar.cli", name, "--help"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert name in proc.stdout


def test_top_level_help():
    proc = subprocess.run(
        [sys.executable, "-m", "decstar.cli", "--help"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    for name in SUBCOMMANDS:
        assert name in proc.stdout


def test_info_summary(capsys):
    code, lines, _ = run(["info", "--mesh", "two_triangle"], capsys)
    assert code == 0
    assert lines[0]["counts"] == {"0": "4", "1": "5", "2": "2"} or \
        lines[0]["counts"] == {"0": 4, "1": 5, "2": 2}


def test_bad_mesh_spec_fails(capsys):
    code, lines, err = run(["info", "--mesh", "nonsense:1"], capsys)
    assert code == 1
    assert "error:" in err


def test_degenerate_mesh_fails(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({
        "dimension": 2,
        "vertices": [[0, 0], [1, 0], [2, 0]],
        "cells": [[0, 1, 2]],
    }))
    code, _, err = run(["info", "--mesh", str(bad)], capsys)
    assert code == 1
    assert "error:" in err


def test_hodge_writes_matrix_market(tmp_path, capsys):
    code, lines, _ = run([
        "hodge", "--mesh", "fig8:2", "--k", "1", "--kind", "diag",
        "--rule", "circumcentric", "--out", str(tmp_path),
    ], capsys)
    assert code == 0
    path = tmp_path / "hodge_diag_k1.mtx"
    text = path.read_text()
    assert text.startswith("%%MatrixMarket matrix coordinate real general")
    assert lines[0]["shape"] == [13, 13]
    assert lines[0]["symmetric"] is True


def test_hodge_deterministic_output(tmp_path, capsys):
    outs = []
    for sub in ("a", "b"):
        d = tmp_path / sub
        d.mkdir()
        code, _, _ = run([
            "hodge", "--mesh", "grid:3", "--k", "1", "--kind", "whitney",
            "--out", str(d),
        ], capsys)
        assert code == 0
        outs.append((d / "hodge_whitney_k1.mtx").read_bytes())
    assert outs[0] == outs[1]


def test_cond_summary(capsys):
    code, lines, _ = run([
        "cond", "--mesh", "fig8:2", "--k", "1", "--kind", "whitney",
        "--method", "leading-block",
    ], capsys)
    assert code == 0
    assert lines[0]["condition"] == pytest.approx(3.2443, abs=1e-3)


def test_table1_golden(tmp_path, capsys):
    code, lines, _ = run([
        "table1", "--P", "2", "--grid", "64", "--out", str(tmp_path),
    ], capsys)
    assert code == 0
    csv = (tmp_path / "table1.csv").read_text().splitlines()
    assert csv[0] == "P,cond_diag,cond_whitney,cond_dual_inverse"
    assert csv[1].startswith("2,6.34")
    assert lines[0]["cond_diag"] == pytest.approx(6.341, abs=1e-3)


def test_table1_determinism(tmp_path, capsys):
    texts = []
    for sub in ("a", "b"):
        d = tmp_path / sub
        d.mkdir()
        code, _, _ = run(["table1", "--P", "2", "--grid", "64",
                          "--out", str(d)], capsys)
        assert code == 0
        texts.append((d / "table1.csv").read_bytes())
    assert texts[0] == texts[1]


def test_table1_rejects_small_p(capsys):
    code, _, err = run(["table1", "--P", "0.4", "--grid", "64"], capsys)
    assert code == 1
    assert "1/2" in err


def test_grid_floor_enforced(capsys):
    code, _, err = run(["table1", "--P", "2", "--grid", "8"], capsys)
    assert code == 1
    assert "16" in err


def test_solve_cross_validation(capsys, tmp_path):
    code, lines, _ = run([
        "solve", "darcy", "--mesh", "two_triangle", "--system", "1,2",
        "--kind", "whitney", "--tol", "1e-8", "--out", str(tmp_path),
    ], capsys)
    assert code == 0
    diff = [l for l in lines if l["command"] == "solve diff"][0]
    assert diff["pass"] is True
    assert max(diff["diffs"].values()) < 1e-8


def test_solve_rejects_mixed_groups(capsys):
    code, _, err = run([
        "solve", "darcy", "--mesh", "two_triangle", "--system", "1,3",
    ], capsys)
    assert code == 1
    assert "pair" in err


def test_solve_incompatible_load(tmp_path, capsys):
    load = tmp_path / "load.csv"
    load.write_text("id,value\n0,1.0\n1,1.0\n2,1.0\n3,1.0\n")
    code, _, err = run([
        "solve", "magneto", "--mesh", "two_triangle", "--system", "1",
        "--load", str(load),
    ], capsys)
    assert code == 1
    assert "range" in err


def test_solve_writes_cochains(tmp_path, capsys):
    code, lines, _ = run([
        "solve", "darcy", "--mesh", "grid:3", "--system", "1",
        "--kind", "diag", "--write", "--out", str(tmp_path),
    ], capsys)
    assert code == 0
    f_csv = (tmp_path / "darcy-1_f.csv").read_text().splitlines()
    assert f_csv[0] == "id,value"
    assert len(f_csv) == 1 + 33  # header plus one row per edge
    assert lines[0]["file_f"].endswith("darcy-1_f.csv")


def test_wave_summary(capsys):
    code, lines, _ = run([
        "wave", "--mesh", "grid:3", "--kind", "whitney", "--count", "3",
    ], capsys)
    assert code == 0
    assert len(lines[0]["omega_squared"]) == 3


def test_sample_field(tmp_path, capsys):
    code, lines, _ = run([
        "sample-field", "--mesh", "grid:3", "--k", "1", "--samples", "6",
        "--out", str(tmp_path),
    ], capsys)
    assert code == 0
    body = (tmp_path / "field_samples.csv").read_text().splitlines()
    assert body[0] == "x,y,value0,value1"
    assert lines[0]["samples"] > 0


def test_convert_off(tmp_path, capsys):
    off = tmp_path / "square.off"
    off.write_text("OFF\n4 2 0\n0 0\n1 0\n1 1\n0 1\n3 0 1 2\n3 0 2 3\n")
    code, lines, _ = run(["convert", str(off), "--out", str(tmp_path)],
                         capsys)
    assert code == 0
    assert lines[0]["counts"]["2"] == 2
    code2, lines2, _ = run(["info", "--mesh",
                            str(tmp_path / "square.json")], capsys)
    assert code2 == 0


def test_fig8_subcommand(tmp_path, capsys):
    code, lines, _ = run(["fig8", "--P", "3", "--out", str(tmp_path)],
                         capsys)
    assert code == 0
    assert (tmp_path / "fig8_P3.json").exists()
    assert lines[0]["counts"] == {"0": 8, "1": 13, "2": 6}
