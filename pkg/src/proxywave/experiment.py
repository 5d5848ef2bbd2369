"""Benchmark harness: configuration, method runs against the analytic oracle, reports."""

from dataclasses import asdict, dataclass, field, replace
import configparser
import csv
import json
import logging
import math
import os
import time

import numpy as np

from . import analytic, evaluator, geometry, skeleton

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field."""


@dataclass
class ScattererConfig:
    center: tuple = (0.0, 0.0)
    radius: float = 0.99
    n_elements: int = 12800


@dataclass
class MediumConfig:
    omega: float = 10.0
    eps1: float = 1.0
    eps2: float = 2.0


@dataclass
class GridConfig:
    inner: float = 1.0
    outer: float = 3.0
    cell_size: float = 1.0
    points_per_cell: int = 100
    layout: str = "uniform_grid"


@dataclass
class XSideConfig:
    tol: float = 1e-6
    proxy_factor: float = 1.5
    n_p: int = 64


@dataclass
class YSideConfig:
    tol: float
    variant: str
    scheme: str
    leaf_size: int = 200
    proxy_factor: float = 1.5
    n_p: int = 64


def _default_y_sides():
    return {
        "fast_uv": YSideConfig(1e-12, "original", "multi_level"),
        "fast_uv_vtailored": YSideConfig(1e-10, "tailored", "single_level"),
    }


@dataclass
class ExperimentConfig:
    scatterer: ScattererConfig = field(default_factory=ScattererConfig)
    medium: MediumConfig = field(default_factory=MediumConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    x_side: XSideConfig = field(default_factory=XSideConfig)
    y_side: dict = field(default_factory=_default_y_sides)
    methods: tuple = evaluator.METHODS
    out_dir: str = "results"
    seed: int = 0
    threads: int = 1
    repeat: int = 1
    cache_dir: str = ""

    def validate(self):
        s, m, g, x = self.scatterer, self.medium, self.grid, self.x_side
        _positive("scatterer.radius", s.radius)
        _count("scatterer.n_elements", s.n_elements, 4)
        for name in ("omega", "eps1", "eps2"):
            _positive(f"medium.{name}", getattr(m, name))
        _positive("grid.cell_size", g.cell_size)
        _count("grid.points_per_cell", g.points_per_cell, 1)
        if not 0 <= g.inner < g.outer:
            raise ConfigError(f"grid.inner/grid.outer: need 0 <= inner < outer, got {g.inner}, {g.outer}")
        if g.layout not in ("uniform_grid", "tensor_chebyshev"):
            raise ConfigError(f"grid.layout: unknown layout {g.layout!r}")
        # the inner edge of the frame must clear the scatterer
        cx, cy = s.center
        if g.inner - max(abs(cx), abs(cy)) <= s.radius:
            raise ConfigError("grid.inner: the evaluation frame overlaps the scatterer")
        _tol("x_side.tol", x.tol)
        _positive("x_side.proxy_factor", x.proxy_factor)
        _count("x_side.n_p", x.n_p, 3)
        unknown = set(self.methods) - set(evaluator.METHODS)
        if unknown:
            raise ConfigError(f"methods: unknown method(s) {sorted(unknown)}")
        if not self.methods:
            raise ConfigError("methods: at least one method is required")
        for meth in self.methods:
            if meth.startswith("fast_uv"):
                if meth not in self.y_side:
                    raise ConfigError(f"y_side.{meth}: section required when method {meth} is selected")
                y = self.y_side[meth]
                _tol(f"y_side.{meth}.tol", y.tol)
                if y.variant not in skeleton.VARIANTS:
                    raise ConfigError(f"y_side.{meth}.variant: unknown variant {y.variant!r}")
                if y.scheme not in skeleton.SCHEMES:
                    raise ConfigError(f"y_side.{meth}.scheme: unknown scheme {y.scheme!r}")
                _count(f"y_side.{meth}.leaf_size", y.leaf_size, 8)
                _positive(f"y_side.{meth}.proxy_factor", y.proxy_factor)
                _count(f"y_side.{meth}.n_p", y.n_p, 3)
        _count("threads", self.threads, 1)
        _count("repeat", self.repeat, 1)
        return self


def _positive(name, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ConfigError(f"{name}: must be a positive number, got {value!r}")


def _count(name, value, minimum):
    if not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{name}: must be an integer >= {minimum}, got {value!r}")


def _tol(name, value):
    if not (isinstance(value, float) and 0 < value < 1):
        raise ConfigError(f"{name}: tolerance must lie in (0, 1), got {value!r}")


# -- config files --------------------------------------------------------------

_FIELD_TYPES = {
    "scatterer": {"center": "pair", "radius": float, "n_elements": int},
    "medium": {"omega": float, "eps1": float, "eps2": float},
    "grid": {"inner": float, "outer": float, "cell_size": float, "points_per_cell": int,
             "layout": str},
    "x_side": {"tol": float, "proxy_factor": float, "n_p": int},
    "y_side": {"tol": float, "variant": str, "scheme": str, "leaf_size": int,
               "proxy_factor": float, "n_p": int},
    "run": {"methods": "list", "out_dir": str, "seed": int, "threads": int, "repeat": int,
            "cache_dir": str},
}


def _convert(section, key, raw):
    kind = _FIELD_TYPES[section].get(key)
    if kind is None:
        raise ConfigError(f"{section}.{key}: unknown field")
    try:
        if kind == "pair":
            parts = [float(v) for v in raw.split(",")]
            if len(parts) != 2:
                raise ValueError
            return tuple(parts)
        if kind == "list":
            return tuple(v.strip() for v in raw.replace(",", " ").split() if v.strip())
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r}") from None


def parse_config(text):
    """Build a validated config from INI text.

    Sections ``[scatterer]``, ``[medium]``, ``[grid]``, ``[x_side]`` and
    ``[run]`` override the benchmark defaults. ``[y_side]`` holds shared cluster
    settings and ``[y_side.<method>]`` the per-method ones; a selected
    ``fast_uv*`` method needs its own section.
    """
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from None
    cfg = ExperimentConfig(y_side={})
    shared = {}
    for name in parser.sections():
        items = {k: v for k, v in parser[name].items()}
        if name in ("scatterer", "medium", "grid", "x_side"):
            current = getattr(cfg, name)
            setattr(cfg, name, replace(current, **{k: _convert(name, k, v) for k, v in items.items()}))
        elif name == "run":
            for k, v in items.items():
                setattr(cfg, k, _convert("run", k, v))
        elif name == "y_side":
            shared = {k: _convert("y_side", k, v) for k, v in items.items()}
        elif name.startswith("y_side."):
            meth = name.split(".", 1)[1]
            if meth not in ("fast_uv", "fast_uv_vtailored"):
                raise ConfigError(f"{name}: y-side settings only apply to fast_uv methods")
            vals = {k: _convert("y_side", k, v) for k, v in items.items()}
            missing = {"tol", "variant", "scheme"} - set(vals) - set(shared)
            if missing:
                raise ConfigError(f"{name}.{sorted(missing)[0]}: required field missing")
            cfg.y_side[meth] = vals
        else:
            raise ConfigError(f"[{name}]: unknown section")
    cfg.y_side = {m: YSideConfig(**{**shared, **v}) for m, v in cfg.y_side.items()}
    return cfg.validate()


def load_config(path):
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"config file: {exc}") from None


def format_config(cfg):
    """INI text that ``parse_config`` reads back to ``cfg``."""
    lines = []

    def section(name, obj):
        lines.append(f"[{name}]")
        for k, v in asdict(obj).items():
            if isinstance(v, tuple):
                v = ", ".join(repr(float(t)) for t in v)
            lines.append(f"{k} = {v}")
        lines.append("")

    section("scatterer", cfg.scatterer)
    section("medium", cfg.medium)
    section("grid", cfg.grid)
    section("x_side", cfg.x_side)
    for meth, y in cfg.y_side.items():
        section(f"y_side.{meth}", y)
    lines += ["[run]", f"methods = {', '.join(cfg.methods)}", f"out_dir = {cfg.out_dir}",
              f"seed = {cfg.seed}", f"threads = {cfg.threads}", f"repeat = {cfg.repeat}",
              f"cache_dir = {cfg.cache_dir}", ""]
    return "\n".join(lines)


def apply_overrides(cfg, methods=None, n_elements=None, x_tol=None, y_tol=None, variant=None,
                    scheme=None, out_dir=None, threads=None, repeat=None, cache_dir=None):
    """Command-line values win over the file. y-side flags apply to every fast_uv method."""
    cfg = replace(cfg, scatterer=replace(cfg.scatterer), x_side=replace(cfg.x_side),
                  y_side={m: replace(y) for m, y in cfg.y_side.items()})
    if methods:
        cfg.methods = tuple(methods)
    if n_elements is not None:
        cfg.scatterer.n_elements = n_elements
    if x_tol is not None:
        cfg.x_side.tol = x_tol
    for y in cfg.y_side.values():
        if y_tol is not None:
            y.tol = y_tol
        if variant is not None:
            y.variant = variant
        if scheme is not None:
            y.scheme = scheme
    for name, value in (("out_dir", out_dir), ("threads", threads), ("repeat", repeat),
                        ("cache_dir", cache_dir)):
        if value is not None:
            setattr(cfg, name, value)
    return cfg.validate()


# -- running -------------------------------------------------------------------

@dataclass
class Problem:
    """Everything computed once per configuration: geometry, oracle, boundary data."""

    mesh: geometry.BoundaryMesh
    grid: geometry.EvalGrid
    params: analytic.MediumParams
    coeffs: analytic.SeriesCoefficients
    data: analytic.BoundaryData
    oracle: np.ndarray


def build_problem(cfg):
    s, g = cfg.scatterer, cfg.grid
    params = analytic.MediumParams(cfg.medium.omega, cfg.medium.eps1, cfg.medium.eps2)
    mesh = geometry.discretize_circle(s.center, s.radius, s.n_elements)
    try:
        grid = geometry.build_eval_grid(g.inner, g.outer, g.cell_size, g.points_per_cell, g.layout,
                                        scatterer=(s.center, s.radius))
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from None
    coeffs = analytic.solve_series(params, s.radius, center=s.center)
    data = analytic.boundary_data(mesh, coeffs, params)
    oracle = analytic.oracle_field(grid.points, coeffs, params)
    return Problem(mesh, grid, params, coeffs, data, oracle)


def _cached(cfg, kind, key, build, load, save):
    if not cfg.cache_dir:
        return build(), False
    path = os.path.join(cfg.cache_dir, f"{kind}-{key}.npz")
    if os.path.exists(path):
        try:
            return load(path, key), True
        except (KeyError, ValueError) as exc:
            logger.warning("ignoring unusable cache file %s: %s", path, exc)
    obj = build()
    os.makedirs(cfg.cache_dir, exist_ok=True)
    save(path, obj, key)
    return obj, False


def _x_skeleton(cfg, prob):
    x = cfg.x_side
    key = skeleton.cache_key(skeleton.layout_id(prob.grid.cells[0].offsets, prob.grid.cell_size),
                             x.tol, k1=prob.params.k1, proxy_factor=x.proxy_factor, n_p=x.n_p)
    return _cached(cfg, "x", key,
                   lambda: skeleton.build_grid_x_skeleton(prob.grid, prob.params.k1, x.tol,
                                                          x.proxy_factor, x.n_p),
                   skeleton.load_x_skeleton, skeleton.save_x_skeleton)


def _y_skeletons(cfg, prob, y):
    key = skeleton.cache_key(prob.mesh.digest(), y.tol, y.variant, y.scheme, k1=prob.params.k1,
                             leaf_size=y.leaf_size, proxy_factor=y.proxy_factor, n_p=y.n_p)

    def build():
        tree = geometry.build_cluster_tree(prob.mesh, y.leaf_size)
        return skeleton.build_all_y_skeletons(prob.mesh, tree, prob.params.k1, y.tol, y.variant,
                                              y.scheme, y.proxy_factor, y.n_p)

    return _cached(cfg, "y", key, build, skeleton.load_y_skeletons, skeleton.save_y_skeletons)


def _timed(fn, repeat):
    """Run ``fn`` ``repeat`` times; keep the last result and the minimum time."""
    best = math.inf
    res = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        res = fn()
        best = min(best, time.perf_counter() - t0)
    return res, best


def run_methods(cfg, prob):
    """Evaluate every selected method. Returns {method: FieldResult}."""
    results = {}
    xskel = None
    x_setup = 0.0
    x_cached = False
    if any(m != "conv" for m in cfg.methods):
        (xskel, x_cached), x_setup = _timed(lambda: _x_skeleton(cfg, prob), 1)
    args = (prob.mesh, prob.data, prob.grid, prob.params)
    for meth in cfg.methods:
        if meth == "conv":
            res, t = _timed(lambda: evaluator.eval_conv(*args, threads=cfg.threads), cfg.repeat)
            res.setup_elapsed = 0.0
        elif meth == "fast_u":
            res, t = _timed(lambda: evaluator.eval_fast_u(*args, xskel, threads=cfg.threads,
                                                          radius_factor=cfg.x_side.proxy_factor),
                            cfg.repeat)
            res.setup_elapsed = x_setup
        else:
            y = cfg.y_side[meth]
            (yskels, y_cached), y_setup = _timed(lambda: _y_skeletons(cfg, prob, y), 1)
            res, t = _timed(lambda: evaluator.eval_fast_uv(*args, xskel, yskels, threads=cfg.threads),
                            cfg.repeat)
            res.method = meth
            res.setup_elapsed = x_setup + y_setup
            res.info.update(y_tol=y.tol, variant=y.variant, scheme=y.scheme, y_from_cache=y_cached)
        if meth != "conv":
            res.info["x_from_cache"] = x_cached
        # minimum over repeats of the evaluator's own evaluation-phase clock
        res.elapsed = min(res.elapsed, t)
        results[meth] = res
    return results


def summarize(cfg, prob, results):
    conv_time = results["conv"].elapsed if "conv" in results else None
    methods = {}
    for meth, res in results.items():
        rep = evaluator.error_report(res.values, prob.oracle, prob.grid)
        entry = {
            "elapsed": res.elapsed,
            "setup_elapsed": res.setup_elapsed,
            "total_elapsed": res.elapsed + res.setup_elapsed,
            "normalized_time_vs_conv": None if conv_time is None else res.elapsed / conv_time,
            "max_l2_cell_error": rep.max,
            "max_error_cell": rep.argmax,
            "max_error_cell_center": prob.grid.cells[rep.argmax].center.tolist(),
            "kernel_evaluations": res.kernel_evaluations,
        }
        if meth != "conv":
            entry["s_x"] = res.info["s_x"]
            entry["x_from_cache"] = res.info["x_from_cache"]
        if meth.startswith("fast_uv"):
            entry["s_y_total"] = res.info["s_y_total"]
            entry["s_y"] = res.info["s_y"]
            for k in ("y_tol", "variant", "scheme", "y_from_cache"):
                entry[k] = res.info[k]
        methods[meth] = entry
    return {
        "config": json.loads(json.dumps(asdict(cfg), default=list)),
        "problem": {"N": prob.mesh.N, "p_x": prob.grid.p_x, "m": prob.grid.m,
                    "n_points": prob.grid.p_x * prob.grid.m, "k1": prob.params.k1,
                    "k2": prob.params.k2, "series_order": prob.coeffs.M},
        "methods": methods,
    }


def _g(v):
    return format(float(v), ".17g")


def write_field_csv(path, prob, results):
    pts = prob.grid.points
    names = list(results)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        head = ["index", "cell", "x1", "x2", "oracle_re", "oracle_im"]
        for n in names:
            head += [f"{n}_re", f"{n}_im", f"{n}_relerr"]
        w.writerow(head)
        errs = {n: evaluator.error_report(results[n].values, prob.oracle, prob.grid).per_point
                for n in names}
        for i, (x, o) in enumerate(zip(pts, prob.oracle)):
            row = [i, i // prob.grid.m, _g(x[0]), _g(x[1]), _g(o.real), _g(o.imag)]
            for n in names:
                v = results[n].values[i]
                row += [_g(v.real), _g(v.imag), _g(errs[n][i])]
            w.writerow(row)


def write_cell_csv(path, prob, results):
    names = list(results)
    reps = {n: evaluator.error_report(results[n].values, prob.oracle, prob.grid) for n in names}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell", "center_x1", "center_x2"] + [f"{n}_l2_relerr" for n in names])
        for c, cell in enumerate(prob.grid.cells):
            w.writerow([c, _g(cell.center[0]), _g(cell.center[1])]
                       + [_g(reps[n].per_cell[c]) for n in names])


def emit_field_grid(result, grid, path, oracle_values):
    """Plain-text lattice file for heatmaps.

    Header lines start with ``#``: the lattice shape, spacing and bounds. Each
    record is ``col row x1 x2 re_u relerr``; records are sorted row-major (by
    row, then column) and only points of the grid appear, so cells cut out of
    the frame are simply absent.
    """
    pts = grid.points
    per_point = evaluator.error_report(result.values, oracle_values, grid).per_point
    xs = np.unique(np.round(pts[:, 0], 12))
    ys = np.unique(np.round(pts[:, 1], 12))
    col = np.searchsorted(xs, np.round(pts[:, 0], 12))
    row = np.searchsorted(ys, np.round(pts[:, 1], 12))
    order = np.lexsort((col, row))
    with open(path, "w") as fh:
        fh.write(f"# proxywave field grid, method={result.method}\n")
        fh.write(f"# dims {len(xs)} {len(ys)}\n")
        fh.write(f"# bounds {_g(xs[0])} {_g(xs[-1])} {_g(ys[0])} {_g(ys[-1])}\n")
        fh.write(f"# records {len(pts)}\n")
        fh.write("# columns: col row x1 x2 re_u relerr\n")
        for i in order:
            fh.write(f"{col[i]} {row[i]} {_g(pts[i, 0])} {_g(pts[i, 1])} "
                     f"{_g(result.values[i].real)} {_g(per_point[i])}\n")
    return path


def run_experiment(cfg, write=True):
    """Build the problem, run the selected methods, and write the reports to ``cfg.out_dir``."""
    cfg.validate()
    prob = build_problem(cfg)
    results = run_methods(cfg, prob)
    summary = summarize(cfg, prob, results)
    if write:
        os.makedirs(cfg.out_dir, exist_ok=True)
        with open(os.path.join(cfg.out_dir, "summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2, default=float)
            fh.write("\n")
        write_field_csv(os.path.join(cfg.out_dir, "field.csv"), prob, results)
        write_cell_csv(os.path.join(cfg.out_dir, "cells.csv"), prob, results)
        for meth, res in results.items():
            emit_field_grid(res, prob.grid, os.path.join(cfg.out_dir, f"grid_{meth}.txt"), prob.oracle)
    return summary, prob, results


SWEEP_PARAMS = ("n_elements", "x_tol", "y_tol")


def convergence_sweep(cfg, param, values, out_path=None):
    """Rerun the experiment over one parameter. Returns a list of row dicts."""
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"sweep parameter must be one of {SWEEP_PARAMS}, got {param!r}")
    values = list(values)
    if len(values) < 1:
        raise ConfigError("sweep needs at least one value")
    diffs = np.diff(values)
    if not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ConfigError(f"sweep values must be strictly monotone, got {values}")
    rows = []
    for v in values:
        if param == "n_elements":
            run_cfg = apply_overrides(cfg, n_elements=int(v))
        elif param == "x_tol":
            run_cfg = apply_overrides(cfg, x_tol=float(v))
        else:
            run_cfg = apply_overrides(cfg, y_tol=float(v))
        summary, _, _ = run_experiment(run_cfg, write=False)
        for meth, entry in summary["methods"].items():
            rows.append({"param": param, "value": v, "method": meth,
                         "max_l2_cell_error": entry["max_l2_cell_error"],
                         "elapsed": entry["elapsed"], "setup_elapsed": entry["setup_elapsed"],
                         "s_x": entry.get("s_x", ""), "s_y_total": entry.get("s_y_total", "")})
    if out_path:
        with open(out_path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            for r in rows:
                w.writerow({k: (_g(x) if isinstance(x, float) else x) for k, x in r.items()})
    return rows
