import csv
import json
import os

import numpy as np
import pytest

from proxywave import cli, experiment
from proxywave.experiment import ConfigError, parse_config

SMALL = """
[scatterer]
n_elements = 3200

[y_side]
leaf_size = 100

[y_side.fast_uv]
tol = 1e-12
variant = original
scheme = multi_level

[y_side.fast_uv_vtailored]
tol = 1e-10
variant = tailored
scheme = single_level

[run]
methods = conv, fast_u, fast_uv, fast_uv_vtailored
"""


@pytest.fixture
def small_ini(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(SMALL)
    return path


def test_defaults_are_benchmark():
    cfg = experiment.ExperimentConfig().validate()
    assert cfg.scatterer.radius == 0.99 and cfg.scatterer.n_elements == 12800
    assert (cfg.medium.omega, cfg.medium.eps1, cfg.medium.eps2) == (10.0, 1.0, 2.0)
    assert cfg.x_side.tol == 1e-6 and cfg.x_side.proxy_factor == 1.5
    assert cfg.y_side["fast_uv"].tol == 1e-12 and cfg.y_side["fast_uv"].scheme == "multi_level"
    assert cfg.y_side["fast_uv_vtailored"].tol == 1e-10
    assert cfg.y_side["fast_uv_vtailored"].variant == "tailored"


def test_format_parse_round_trip():
    cfg = experiment.ExperimentConfig()
    again = parse_config(experiment.format_config(cfg))
    assert again == cfg


def test_shipped_config_matches_defaults():
    path = os.path.join(os.path.dirname(__file__), "..", "configs", "benchmark.ini")
    assert experiment.load_config(path) == experiment.ExperimentConfig()


@pytest.mark.parametrize("text, field", [
    ("[x_side]\ntol = 2.0\n", "x_side.tol"),
    ("[x_side]\ntol = 0\n", "x_side.tol"),
    ("[scatterer]\nn_elements = 2\n", "scatterer.n_elements"),
    ("[scatterer]\nradius = -1\n", "scatterer.radius"),
    ("[scatterer]\nradius = 1.5\n", "grid.inner"),
    ("[grid]\nlayout = hex\n", "grid.layout"),
    ("[grid]\ncell_size = 0.7\n", "grid"),
    ("[medium]\nomega = abc\n", "medium.omega"),
    ("[medium]\nspeed = 3\n", "medium.speed"),
    ("[run]\nmethods = conv, magic\n", "methods"),
    ("[run]\nmethods = fast_uv\n", "y_side.fast_uv"),
    ("[y_side.fast_uv]\ntol = 1e-12\nvariant = original\n", "y_side.fast_uv.scheme"),
    ("[y_side.fast_uv]\ntol = 1e-12\nvariant = odd\nscheme = multi_level\n[run]\nmethods = fast_uv\n",
     "y_side.fast_uv.variant"),
    ("[bogus]\na = 1\n", "bogus"),
    ("not an ini", "syntax"),
])
def test_config_errors_name_the_field(text, field):
    if "[run]" not in text and "syntax" not in field:
        text += "[run]\nmethods = conv\n"
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        cfg = parse_config(text)
        experiment.build_problem(cfg)


def test_overrides_win(small_ini):
    cfg = experiment.load_config(small_ini)
    cfg2 = experiment.apply_overrides(cfg, methods=["conv"], n_elements=6400, x_tol=1e-7, y_tol=1e-9,
                                      variant="tailored", scheme="single_level", out_dir="elsewhere")
    assert cfg2.methods == ("conv",) and cfg2.scatterer.n_elements == 6400
    assert cfg2.x_side.tol == 1e-7 and cfg2.out_dir == "elsewhere"
    assert all(y.tol == 1e-9 and y.variant == "tailored" for y in cfg2.y_side.values())
    # the original is untouched
    assert cfg.scatterer.n_elements == 3200 and cfg.x_side.tol == 1e-6


def test_run_outputs(tmp_path, small_ini):
    cfg = experiment.apply_overrides(experiment.load_config(small_ini), out_dir=str(tmp_path / "out"))
    summary, prob, results = experiment.run_experiment(cfg)
    out = tmp_path / "out"
    js = json.loads((out / "summary.json").read_text())
    assert js["problem"]["n_points"] == 3200
    for name in experiment.evaluator.METHODS:
        e = js["methods"][name]
        for key in ("elapsed", "setup_elapsed", "normalized_time_vs_conv", "max_l2_cell_error"):
            assert key in e
        if name != "conv":
            assert e["s_x"] == results[name].info["s_x"]
        if name.startswith("fast_uv"):
            assert e["s_y_total"] == sum(e["s_y"])
    assert "s_x" not in js["methods"]["conv"]
    assert js["methods"]["conv"]["normalized_time_vs_conv"] == 1.0
    assert js["methods"]["fast_uv"]["normalized_time_vs_conv"] < 1.0

    with open(out / "field.csv") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 3201
    head = rows[0]
    assert head[:6] == ["index", "cell", "x1", "x2", "oracle_re", "oracle_im"]
    assert "fast_uv_relerr" in head
    # 17 significant digits round-trip exactly
    x = np.array([float(r[2]) for r in rows[1:]])
    assert np.array_equal(x, prob.grid.points[:, 0])

    with open(out / "cells.csv") as fh:
        cells = list(csv.reader(fh))
    assert len(cells) == 33
    col = cells[0].index("fast_uv_l2_relerr")
    assert max(float(r[col]) for r in cells[1:]) == pytest.approx(js["methods"]["fast_uv"]["max_l2_cell_error"])

    grid_txt = (out / "grid_fast_uv.txt").read_text().splitlines()
    header = [ln for ln in grid_txt if ln.startswith("#")]
    records = [ln for ln in grid_txt if not ln.startswith("#")]
    assert len(records) == 3200
    assert any(ln.startswith("# dims 60 60") for ln in header)


def test_conv_only_has_no_skeleton_fields(tmp_path, small_ini):
    cfg = experiment.apply_overrides(experiment.load_config(small_ini), methods=["conv"],
                                     out_dir=str(tmp_path))
    summary, _, _ = experiment.run_experiment(cfg)
    e = summary["methods"]["conv"]
    assert not any(k.startswith("s_") for k in e)


def test_field_grid_conv_vs_conv(tmp_path, small_ini):
    cfg = experiment.apply_overrides(experiment.load_config(small_ini), methods=["conv"])
    _, prob, results = experiment.run_experiment(cfg, write=False)
    res = results["conv"]
    path = experiment.emit_field_grid(res, prob.grid, tmp_path / "g.txt", res.values)
    recs = [ln.split() for ln in open(path) if not ln.startswith("#")]
    assert len(recs) == 3200
    assert all(float(r[5]) == 0.0 for r in recs)
    # row-major order: rows nondecreasing, columns increasing within a row
    rc = [(int(r[1]), int(r[0])) for r in recs]
    assert rc == sorted(rc)


def test_repeatable_csv(tmp_path, small_ini):
    paths = []
    for tag in ("a", "b"):
        cfg = experiment.apply_overrides(experiment.load_config(small_ini), out_dir=str(tmp_path / tag))
        experiment.run_experiment(cfg)
        paths.append(tmp_path / tag)
    for name in ("field.csv", "cells.csv", "grid_fast_uv.txt"):
        assert (paths[0] / name).read_bytes() == (paths[1] / name).read_bytes()


def test_cache_reuse(tmp_path, small_ini):
    cfg = experiment.apply_overrides(experiment.load_config(small_ini), methods=["fast_uv"],
                                     cache_dir=str(tmp_path / "cache"), out_dir=str(tmp_path / "o"))
    first, _, r1 = experiment.run_experiment(cfg)
    second, _, r2 = experiment.run_experiment(cfg)
    assert not first["methods"]["fast_uv"]["y_from_cache"]
    assert second["methods"]["fast_uv"]["y_from_cache"] and second["methods"]["fast_uv"]["x_from_cache"]
    assert np.array_equal(r1["fast_uv"].values, r2["fast_uv"].values)
    assert len(os.listdir(tmp_path / "cache")) == 2


def test_sweep(tmp_path, small_ini):
    cfg = experiment.apply_overrides(experiment.load_config(small_ini), methods=["fast_u"])
    rows = experiment.convergence_sweep(cfg, "x_tol", [1e-3, 1e-6, 1e-9], tmp_path / "sweep.csv")
    s_x = [r["s_x"] for r in rows]
    assert s_x == sorted(s_x)
    assert (tmp_path / "sweep.csv").exists()
    with pytest.raises(ConfigError, match="monotone"):
        experiment.convergence_sweep(cfg, "x_tol", [1e-3, 1e-6, 1e-4])
    with pytest.raises(ConfigError):
        experiment.convergence_sweep(cfg, "omega", [1.0])


def test_y_tol_sweep_tracks_tolerance(small_ini):
    # y-tol sweep with a tight x-side so the y-side error is visible
    cfg = experiment.apply_overrides(experiment.load_config(small_ini), methods=["conv", "fast_uv_vtailored"],
                                     x_tol=1e-12)
    prob = experiment.build_problem(cfg)
    for tol in (1e-4, 1e-6, 1e-8):
        run = experiment.apply_overrides(cfg, y_tol=tol)
        res = experiment.run_methods(run, prob)
        conv = res["conv"].values
        dev = np.max(np.abs(res["fast_uv_vtailored"].values - conv)) / np.max(np.abs(conv))
        assert dev <= 100 * tol


def test_cli_exit_codes(tmp_path, small_ini, capsys):
    out = tmp_path / "cli"
    assert cli.main(["run", "--config", str(small_ini), "--method", "conv", "--method", "fast_u",
                     "--out-dir", str(out), "--repeat", "2"]) == cli.EXIT_OK
    assert (out / "summary.json").exists()
    assert "fast_u" in capsys.readouterr().out

    bad = tmp_path / "bad.ini"
    bad.write_text("[x_side]\ntol = 5\n")
    assert cli.main(["run", "--config", str(bad)]) == cli.EXIT_CONFIG
    assert "x_side.tol" in capsys.readouterr().err
    assert cli.main(["run", "--config", str(tmp_path / "missing.ini")]) == cli.EXIT_CONFIG

    # 800 elements put the nearest evaluation points inside the quadrature guard
    assert cli.main(["run", "--config", str(small_ini), "--n-elements", "800", "--method", "conv",
                     "--out-dir", str(out)]) == cli.EXIT_NUMERICAL
    assert "numerical failure" in capsys.readouterr().err


def test_cli_sweep_and_config(tmp_path, small_ini, capsys):
    assert cli.main(["sweep", "--config", str(small_ini), "--method", "conv", "--param", "n_elements",
                     "--values", "1600,3200", "--output", str(tmp_path / "s.csv")]) == cli.EXIT_OK
    assert (tmp_path / "s.csv").read_text().count("\n") == 3
    capsys.readouterr()
    assert cli.main(["sweep", "--config", str(small_ini), "--param", "n_elements",
                     "--values", "3200,1600,6400"]) == cli.EXIT_CONFIG
    assert cli.main(["config"]) == cli.EXIT_OK
    assert parse_config(capsys.readouterr().out) == experiment.ExperimentConfig()
