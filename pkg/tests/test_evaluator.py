import numpy as np
import pytest

from proxywave import evaluator as ev
from proxywave import skeleton as sk
from proxywave.analytic import BoundaryData, MediumParams, boundary_data, incident_wave, oracle_field, solve_series
from proxywave.geometry import build_cluster_tree, build_eval_grid, discretize_circle

PARAMS = MediumParams(10.0, 1.0, 2.0)


class Setup:
    """A 3200-element problem, small enough for unit tests."""

    def __init__(self, inner=1.0, outer=3.0, N=3200, params=PARAMS):
        self.params = params
        self.mesh = discretize_circle((0.0, 0.0), 0.99, N)
        self.grid = build_eval_grid(inner, outer, 1.0, 100, scatterer=((0.0, 0.0), 0.99))
        self.coeffs = solve_series(params, 0.99)
        self.data = boundary_data(self.mesh, self.coeffs, params)
        self.oracle = oracle_field(self.grid.points, self.coeffs, params)
        self.xskel = sk.build_grid_x_skeleton(self.grid, params.k1, 1e-6)
        tree = build_cluster_tree(self.mesh, 100)
        self.y_orig = sk.build_all_y_skeletons(self.mesh, tree, params.k1, 1e-12, "original", "multi_level")
        self.y_tail = sk.build_all_y_skeletons(self.mesh, tree, params.k1, 1e-10, "tailored", "single_level")

    def run_all(self, data=None):
        data = self.data if data is None else data
        a = (self.mesh, data, self.grid, self.params)
        return {
            "conv": ev.eval_conv(*a),
            "fast_u": ev.eval_fast_u(*a, self.xskel),
            "fast_uv": ev.eval_fast_uv(*a, self.xskel, self.y_orig),
            "fast_uv_vtailored": ev.eval_fast_uv(*a, self.xskel, self.y_tail),
        }


@pytest.fixture(scope="module")
def bench():
    return Setup()


@pytest.fixture(scope="module")
def clear():
    # frame pushed out so every cell's x-proxy leaves the scatterer outside
    s = Setup(inner=2.0, outer=4.0)
    for c in s.grid.cells:
        assert np.hypot(*c.center) - 1.5 > 0.99
    return s


def test_result_shapes_and_labels(bench):
    res = bench.run_all()
    for name, r in res.items():
        assert r.method == name
        assert r.values.shape == (3200,)
        assert np.all(np.isfinite(r.values))
        assert r.elapsed > 0


def test_zero_data_gives_incident_wave(bench):
    zero = BoundaryData(np.zeros(bench.mesh.N, complex), np.zeros(bench.mesh.N, complex))
    inc = incident_wave(bench.grid.points, PARAMS.k1)
    for r in bench.run_all(zero).values():
        assert np.array_equal(r.values, inc)


def test_linearity(bench, rng):
    n = bench.mesh.N
    d1 = BoundaryData(rng.normal(size=n) + 1j * rng.normal(size=n), rng.normal(size=n) + 1j * rng.normal(size=n))
    d2 = BoundaryData(rng.normal(size=n) + 1j * rng.normal(size=n), rng.normal(size=n) + 1j * rng.normal(size=n))
    both = BoundaryData(d1.u + d2.u, d1.q + d2.q)
    inc = incident_wave(bench.grid.points, PARAMS.k1)
    r1, r2, r12 = bench.run_all(d1), bench.run_all(d2), bench.run_all(both)
    for name in ev.METHODS:
        a, b, ab = (r[name].values - inc for r in (r1, r2, r12))
        assert np.max(np.abs(ab - a - b)) <= 1e-12 * np.max(np.abs(ab))


def test_fast_u_consistency(clear):
    res = clear.run_all()
    conv = res["conv"].values
    dev = np.max(np.abs(res["fast_u"].values - conv)) / np.max(np.abs(conv))
    assert dev <= 10 * 1e-6


def test_tailored_consistency(clear):
    res = clear.run_all()
    conv = res["conv"].values
    dev = np.max(np.abs(res["fast_uv_vtailored"].values - conv)) / np.max(np.abs(conv))
    assert dev <= 1e-4


def test_kernel_evaluation_counts(bench):
    res = bench.run_all()
    s_x = bench.xskel.s_x
    assert res["conv"].kernel_evaluations == 32 * 100 * bench.mesh.N * 2
    assert res["fast_u"].kernel_evaluations == 32 * s_x * bench.mesh.N * 2
    assert res["fast_uv"].info["s_y_total"] == sum(s.s_y for s in bench.y_orig)


def test_no_contrast():
    s = Setup(params=MediumParams(10.0, 1.0, 1.0))
    inc = incident_wave(s.grid.points, 10.0)
    res = s.run_all()
    conv_err = np.max(np.abs(res["conv"].values - inc))
    assert conv_err < 1e-4
    assert np.max(np.abs(res["fast_u"].values - inc)) < 1e-4 + 10 * 1e-6


def test_interior(bench):
    a = 0.99
    x0 = ev.eval_interior(bench.mesh, bench.data, np.array([0.0, 0.0]), PARAMS)
    ref0 = oracle_field(np.array([0.0, 0.0]), bench.coeffs, PARAMS)
    assert abs(x0 - ref0) < 1e-3 * abs(ref0)
    th = 2 * np.pi * np.arange(16) / 16
    x = 0.5 * a * np.column_stack([np.cos(th), np.sin(th)])
    vals = ev.eval_interior(bench.mesh, bench.data, x, PARAMS)
    ref = oracle_field(x, bench.coeffs, PARAMS)
    assert np.max(np.abs(vals - ref) / np.abs(ref)) < 1e-3


def test_interior_no_contrast():
    p = MediumParams(10.0, 1.0, 1.0)
    mesh = discretize_circle((0, 0), 0.99, 3200)
    d = boundary_data(mesh, solve_series(p, 0.99), p)
    x = np.array([[0.1, 0.2], [-0.4, 0.3]])
    assert np.allclose(ev.eval_interior(mesh, d, x, p), incident_wave(x, 10.0), atol=1e-6)


def test_interior_rejects_outside(bench):
    with pytest.raises(ValueError):
        ev.eval_interior(bench.mesh, bench.data, np.array([0.985, 0.0]), PARAMS)
    with pytest.raises(ValueError):
        ev.eval_interior(bench.mesh, bench.data, np.array([2.0, 0.0]), PARAMS)


def test_conv_rejects_near_boundary():
    mesh = discretize_circle((0, 0), 0.99, 800)
    grid = build_eval_grid(1.0, 3.0, 1.0, 100)
    d = BoundaryData(np.ones(800, complex), np.ones(800, complex))
    with pytest.raises(ValueError, match="boundary"):
        ev.eval_conv(mesh, d, grid, PARAMS)


def test_layout_mismatch(bench):
    other = build_eval_grid(1.0, 3.0, 1.0, 64)
    xs = sk.build_grid_x_skeleton(other, 10.0, 1e-6)
    with pytest.raises(ValueError, match="layout"):
        ev.eval_fast_u(bench.mesh, bench.data, bench.grid, PARAMS, xs)
    with pytest.raises(ValueError, match="layout"):
        ev.eval_fast_uv(bench.mesh, bench.data, bench.grid, PARAMS, xs, bench.y_tail)


def test_coverage_gap(bench):
    with pytest.raises(ValueError, match="partition"):
        ev.eval_fast_uv(bench.mesh, bench.data, bench.grid, PARAMS, bench.xskel, bench.y_tail[:-1])
    mixed = bench.y_tail[: len(bench.y_tail) // 2]
    tree = build_cluster_tree(bench.mesh, 100)
    half = sk.build_all_y_skeletons(bench.mesh, tree, 10.0, 1e-10, "original", "single_level")
    mixed = mixed + half[len(half) // 2:]
    with pytest.raises(ValueError, match="mixed"):
        ev.eval_fast_uv(bench.mesh, bench.data, bench.grid, PARAMS, bench.xskel, mixed)


def test_threads_match_serial(bench):
    a = (bench.mesh, bench.data, bench.grid, PARAMS)
    one = ev.eval_conv(*a, threads=1).values
    four = ev.eval_conv(*a, threads=4).values
    assert np.max(np.abs(one - four)) <= 1e-14 * np.max(np.abs(one))
    u1 = ev.eval_fast_uv(*a, bench.xskel, bench.y_orig, threads=1).values
    u3 = ev.eval_fast_uv(*a, bench.xskel, bench.y_orig, threads=3).values
    assert np.max(np.abs(u1 - u3)) <= 1e-14 * np.max(np.abs(u1))


def test_repeatable(bench):
    a = (bench.mesh, bench.data, bench.grid, PARAMS)
    assert np.array_equal(ev.eval_fast_uv(*a, bench.xskel, bench.y_orig).values,
                          ev.eval_fast_uv(*a, bench.xskel, bench.y_orig).values)


class TestErrorReport:
    grid = build_eval_grid(1.0, 3.0, 1.0, 100)

    def test_exact(self, rng):
        o = rng.normal(size=3200) + 1j * rng.normal(size=3200)
        rep = ev.error_report(o.copy(), o, self.grid)
        assert rep.max == 0 and np.all(rep.per_cell == 0) and np.all(rep.per_point == 0)

    def test_single_perturbation(self, rng):
        o = rng.normal(size=3200) + 1j * rng.normal(size=3200)
        v = o.copy()
        v[517] += 0.25 - 0.1j
        rep = ev.error_report(v, o, self.grid)
        s = np.linalg.norm(o[500:600])
        assert rep.per_cell[5] == pytest.approx(abs(0.25 - 0.1j) / s, rel=1e-13)
        assert np.all(np.delete(rep.per_cell, 5) == 0)
        assert rep.argmax == 5

    def test_errors(self):
        o = np.ones(3200, complex)
        with pytest.raises(ValueError):
            ev.error_report(o[:10], o[:10], self.grid)
        z = o.copy()
        z[:100] = 0
        with pytest.raises(ValueError, match="vanishes"):
            ev.error_report(o, z, self.grid)
