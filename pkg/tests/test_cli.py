import json
import math

import numpy as np
import pytest

from subdiff import cli
from subdiff.levy import INF, ParetoTail, PointMass


def test_parse_config_scalars_and_lists():
    cfg = cli.parse_config(
        "alpha = 0.5\nN=100 # comment\nratios=10,100\nname=stable\n"
        "r=inf\ncontrol=true\n\n# full comment line\n")
    assert cfg == {"alpha": 0.5, "N": 100, "ratios": [10, 100],
                   "name": "stable", "r": INF, "control": True}


def test_parse_config_rejects_bare_words():
    with pytest.raises(ValueError):
        cli.parse_config("not a pair\n")


def test_model_from_config_zeta_kinds():
    m = cli.model_from_config({"alpha": 0.6, "zeta.kind": "point",
                               "zeta.location": 2.0, "zeta.mass": 0.5})
    assert isinstance(m.zeta, PointMass)
    assert m.zeta.total_mass == 0.5
    m2 = cli.model_from_config({"alpha": 0.6, "zeta.kind": "pareto",
                                "zeta.index": 4})
    assert isinstance(m2.zeta, ParetoTail)
    with pytest.raises(ValueError):
        cli.model_from_config({"zeta.kind": "nope"})


def test_paths_determinism_and_schema(tmp_path):
    cfg = {"n_grid": 50, "t_max": 1.0}
    a = tmp_path / "a"
    b = tmp_path / "b"
    cli.run_paths(cfg, 123, a)
    cli.run_paths(cfg, 123, b)
    assert (a / "paths.csv").read_bytes() == (b / "paths.csv").read_bytes()
    lines = (a / "paths.csv").read_text().splitlines()
    assert lines[0].startswith("# provenance: config=")
    assert "seed=123" in lines[0]
    assert lines[1] == "t,L,gamma,Gamma"
    assert len(lines) == 52


def test_paths_empty_grid_header_only(tmp_path):
    cli.run_paths({"n_grid": 0}, 1, tmp_path)
    lines = (tmp_path / "paths.csv").read_text().splitlines()
    assert len(lines) == 2


def test_paths_with_process_columns(tmp_path):
    cli.run_paths({"n_grid": 5, "process": "brownian", "d": 2}, 7, tmp_path)
    lines = (tmp_path / "paths.csv").read_text().splitlines()
    assert lines[1] == "t,L,gamma,Gamma,T,M_1,M_2"
    assert len(lines) == 7


def test_paths_json_format(tmp_path):
    cli.run_paths({"n_grid": 3}, 9, tmp_path, fmt="json")
    data = json.loads((tmp_path / "paths.json").read_text())
    assert data["provenance"]["seed"] == 9
    assert len(data["rows"]) == 3
    assert set(data["rows"][0]) == {"t", "L", "gamma", "Gamma"}


def test_validate_refuses_small_samples(tmp_path):
    with pytest.raises(ValueError):
        cli.run_validate({"N": 100}, 1, tmp_path)


def test_web_control_small(tmp_path):
    rep = cli.run_web({"control": True, "ratios": [10, 100, 1000],
                       "replicas": 300}, 11, tmp_path)
    assert abs(rep["fitted_T_exponent"]) < 0.05
    assert rep["mean_tamsd_over_t_at_largest_T"] == pytest.approx(1.0,
                                                                  abs=0.1)
    summary = (tmp_path / "web_summary.csv").read_text().splitlines()
    assert summary[1] == "t,T,mean,ci_lo,ci_hi"
    assert len(summary) == 5


def test_benchmark_schema_and_determinism(tmp_path):
    cfg = {"alphas": [0.5, 0.7], "draws": 20, "repetitions": 2}
    rep = cli.run_benchmark(cfg, 3, tmp_path)
    lines = (tmp_path / "benchmark.csv").read_text().splitlines()
    assert lines[1] == "param,repetition,wall_ns,ops"
    assert len(lines) == 6
    assert {c["param"] for c in rep["cells"]} == {0.5, 0.7}
    # ops columns (not wall times) are reproducible
    a = [l.split(",")[3] for l in lines[2:]]
    cli.run_benchmark(cfg, 3, tmp_path)
    lines2 = (tmp_path / "benchmark.csv").read_text().splitlines()
    assert [l.split(",")[3] for l in lines2[2:]] == a


def test_main_entry(tmp_path, capsys):
    rc = cli.main(["paths", "--seed", "5", "--out", str(tmp_path),
                   "--format", "json"])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    assert out["rows"] == 1000
