from __future__ import annotations

import csv
import json
import math

import pytest

from fbscope import cli
from fbscope.field import read_fbsf


def run(tmp_path, *argv):
    return cli.main([*argv, "--out", str(tmp_path)])


def test_config_hash_is_order_free_and_ignores_out(tmp_path):
    a = cli.load_config("functionals", None, ["field.analytic=wedge:q=0.5", "grid.cells=32"], str(tmp_path / "a"))
    b = cli.load_config("functionals", None, ["grid.cells=32", "field.analytic=wedge:q=0.5"], str(tmp_path / "b"))
    assert a.config_hash == b.config_hash and len(a.config_hash) == 16
    c = cli.load_config("functionals", None, ["field.analytic=wedge:q=0.6", "grid.cells=32"], str(tmp_path / "c"))
    assert c.config_hash != a.config_hash


def test_config_file_and_overrides(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[field]\nanalytic = wedge:q=0.5\n[grid]\ncells = 32  # comment\n")
    cfg = cli.load_config("functionals", str(ini), ["grid.cells=48"], str(tmp_path / "o"))
    assert cfg.integer("grid", "cells", 0) == 48


@pytest.mark.parametrize("sets", [
    [],                                                            # no field source
    ["field.analytic=wedge:q=0.5", "field.path=missing.fbsf"],     # two sources
    ["field.analytic=nonsense"],
    ["field.path=does_not_exist.fbsf"],
])
def test_config_errors_exit_3(tmp_path, sets):
    argv = ["functionals"] + [a for s in sets for a in ("--set", s)]
    assert run(tmp_path, *argv) == cli.EXIT_CONFIG


def test_unknown_command_exits_3(tmp_path):
    assert cli.main(["frobnicate"]) == cli.EXIT_CONFIG


def test_functionals_artifacts(tmp_path):
    code = run(tmp_path, "functionals", "--set", "field.analytic=wedge:q=0.5", "--set", "grid.cells=64",
               "--set", "functionals.r_max=0.4", "--set", "functionals.centers=0,0;0.9,0")
    assert code == cli.EXIT_OK
    rows = list(csv.DictReader(open(tmp_path / "functionals.csv")))
    doc = json.loads((tmp_path / "functionals.json").read_text())
    assert {r["config_hash"] for r in rows} == {doc["config_hash"]}
    good = [r for r in rows if r["center"] == "0" and not r["error"]]
    assert len(good) == 8
    assert all(abs(float(r["N"]) - 1.0) < 0.02 for r in good)
    assert any(r["center"] == "1" and r["error"] for r in rows)


def test_functionals_zero_field_sentinel(tmp_path):
    assert run(tmp_path, "functionals", "--set", "field.analytic=zero", "--set", "grid.cells=32") == cli.EXIT_OK
    rows = list(csv.DictReader(open(tmp_path / "functionals.csv")))
    assert rows and all(math.isinf(float(r["N"])) and float(r["N"]) < 0 for r in rows)


def test_solve_writes_rungs_and_sidecars(tmp_path):
    code = run(tmp_path, "solve", "--set", "solver.ladder=0.4,0.2", "--set", "solver.dirichlet=wedge:q=1",
               "--set", "grid.cells=32")
    assert code == cli.EXIT_OK
    side = json.loads((tmp_path / "rung1.json").read_text())
    assert side["converged"] and side["cauchy_sup_to_previous"] is not None
    assert "domain_variation_residual" in side and len(side["config_hash"]) == 16
    assert read_fbsf(tmp_path / "rung1.fbsf").spec.cells == (32, 32)


def test_solve_failure_exits_2(tmp_path):
    code = run(tmp_path, "solve", "--set", "solver.ladder=0.1", "--set", "solver.dirichlet=wedge:q=1",
               "--set", "grid.cells=64", "--set", "solver.max_iter=1")
    assert code == cli.EXIT_SOLVER
    diag = json.loads((tmp_path / "diagnostics.json").read_text())
    assert diag["failed_rungs"] == [0]


def test_classify_labels_only(tmp_path):
    code = run(tmp_path, "classify", "--labels-only", "--set", "field.analytic=wedge:q=0.5",
               "--set", "grid.cells=64")
    assert code == cli.EXIT_OK
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["counts"].get("sigmaH", 0) > 0 and "regular" not in summary["counts"]
    assert not (tmp_path / "measure_profiles.json").exists()
    assert (tmp_path / "boundary.csv").exists()


def test_cover_synthetic_point(tmp_path):
    code = run(tmp_path, "cover", "--set", "cover.oracle=synthetic:point:c=1",
               "--set", "cover.candidates=rays:angles=0/90,dmin=1e-4,growth=1.05", "--set", "cover.r_stop=1e-3")
    assert code == cli.EXIT_OK
    doc = json.loads((tmp_path / "covering.json").read_text())
    assert doc["summary"]["budget_ok"] and doc["nodes"][0]["generation"] == 0
    assert (tmp_path / "covering.dot").read_text().split("\n")[1].startswith("digraph")


def test_verify_list_and_exit_codes(tmp_path, capsys):
    assert cli.main(["verify", "--list"]) == cli.EXIT_OK
    assert len(capsys.readouterr().out.strip().splitlines()) == 12
    assert run(tmp_path, "verify", "--set", "verify.criteria=1", "--set", "verify.quiet=1") == cli.EXIT_OK
    doc = json.loads((tmp_path / "verify.json").read_text())
    assert [r["id"] for r in doc["criteria"]] == [1] and doc["passed"]
    # a tolerance scale far below discretisation error makes the criterion fail
    assert run(tmp_path / "strict", "verify", "--set", "verify.criteria=1",
               "--set", "verify.tol_scale=1e-6", "--set", "verify.quiet=1") == cli.EXIT_ACCEPTANCE
    assert run(tmp_path / "bad", "verify", "--set", "verify.tol_scale=0") == cli.EXIT_CONFIG


def test_pipeline_is_deterministic(tmp_path):
    cli.determinism_pipeline(tmp_path / "a")
    cli.determinism_pipeline(tmp_path / "b")
    da, db = cli.tree_digest(tmp_path / "a"), cli.tree_digest(tmp_path / "b")
    assert da == db and len(da) >= 10
