"""Built-in scenarios and configuration parsing."""

import numpy as np
import pytest
import sympy

from wgbf.errors import ConfigError
from wgbf.scenarios import (ManufacturedSolution, ScenarioConfig,
                            cavity_lid_velocity, load_config, parse_levels)


def test_velocity_is_divergence_free_symbolically():
    x, y = sympy.symbols("x y")
    u1 = 10 * x**2 * (x - 1)**2 * y * (y - 1) * (2*y - 1)
    u2 = -10 * x * (x - 1) * (2*x - 1) * y**2 * (y - 1)**2
    assert sympy.simplify(sympy.diff(u1, x) + sympy.diff(u2, y)) == 0


def test_velocity_vanishes_on_boundary():
    ms = ManufacturedSolution()
    t = np.linspace(0.0, 1.0, 13)
    for pts in (np.column_stack([t, np.zeros_like(t)]),
                np.column_stack([t, np.ones_like(t)]),
                np.column_stack([np.zeros_like(t), t]),
                np.column_stack([np.ones_like(t), t])):
        assert np.allclose(ms.velocity(pts), 0.0, atol=1e-14)


def test_gradient_matches_finite_differences():
    ms = ManufacturedSolution()
    rng = np.random.default_rng(0)
    pts = rng.random((20, 2))
    g = ms.velocity_gradient(pts)
    eps = 1e-6
    for d in range(2):
        dp, dm = pts.copy(), pts.copy()
        dp[:, d] += eps
        dm[:, d] -= eps
        fd = (ms.velocity(dp) - ms.velocity(dm)) / (2 * eps)
        assert np.allclose(g[..., d], fd, atol=1e-8)


def test_pressure_zero_mean_and_gradient():
    ms = ManufacturedSolution()
    x, y = sympy.symbols("x y")
    p = 10 * (2*x - 1)**2 * (2*y - 1)
    assert sympy.integrate(sympy.integrate(p, (x, 0, 1)), (y, 0, 1)) == 0
    rng = np.random.default_rng(1)
    pts = rng.random((10, 2))
    eps = 1e-6
    g = ms.pressure_gradient(pts)
    for d in range(2):
        dp, dm = pts.copy(), pts.copy()
        dp[:, d] += eps
        dm[:, d] -= eps
        fd = (ms.pressure(dp) - ms.pressure(dm)) / (2 * eps)
        assert np.allclose(g[..., d], fd, atol=1e-7)


def test_forcing_matches_symbolic_operator():
    # f = -nu lap u + (u.grad)u + alpha |u|^{r-2} u + grad p, via sympy
    nu, alpha, r = 2.0, 3.0, 4.0
    ms = ManufacturedSolution(nu, alpha, r)
    x, y = sympy.symbols("x y")
    u1 = 10 * x**2 * (x - 1)**2 * y * (y - 1) * (2*y - 1)
    u2 = -10 * x * (x - 1) * (2*x - 1) * y**2 * (y - 1)**2
    p = 10 * (2*x - 1)**2 * (2*y - 1)
    mag = u1**2 + u2**2
    f1 = (-nu * (sympy.diff(u1, x, 2) + sympy.diff(u1, y, 2))
          + u1 * sympy.diff(u1, x) + u2 * sympy.diff(u1, y)
          + alpha * mag * u1                      # r=4: weight |u|^{r-2} = |u|^2
          + sympy.diff(p, x))
    f2 = (-nu * (sympy.diff(u2, x, 2) + sympy.diff(u2, y, 2))
          + u1 * sympy.diff(u2, x) + u2 * sympy.diff(u2, y)
          + alpha * mag * u2
          + sympy.diff(p, y))
    fn = sympy.lambdify((x, y), (f1, f2), "numpy")
    pts = np.random.default_rng(2).random((30, 2))
    ref = np.stack(fn(pts[:, 0], pts[:, 1]), axis=-1)
    assert np.allclose(ms.forcing(pts), ref, rtol=1e-10, atol=1e-10)


def test_stream_function_curl_is_velocity():
    ms = ManufacturedSolution()
    pts = np.random.default_rng(3).random((15, 2))
    eps = 1e-6
    dy_p, dy_m = pts.copy(), pts.copy()
    dy_p[:, 1] += eps
    dy_m[:, 1] -= eps
    dx_p, dx_m = pts.copy(), pts.copy()
    dx_p[:, 0] += eps
    dx_m[:, 0] -= eps
    u1 = (ms.stream_function(dy_p) - ms.stream_function(dy_m)) / (2 * eps)
    u2 = -(ms.stream_function(dx_p) - ms.stream_function(dx_m)) / (2 * eps)
    u = ms.velocity(pts)
    assert np.allclose(u[:, 0], u1, atol=1e-7)
    assert np.allclose(u[:, 1], u2, atol=1e-7)


def test_cavity_lid_velocity():
    pts = np.array([[0.5, 1.0], [0.5, 0.5], [1.0, 1.0], [0.3, 0.0]])
    v = cavity_lid_velocity(pts)
    assert np.allclose(v, [[1, 0], [0, 0], [1, 0], [0, 0]])


def test_parse_levels():
    assert parse_levels("4,8,16") == [(4, 4), (8, 8), (16, 16)]
    assert parse_levels("4x4, 8x6") == [(4, 4), (8, 6)]
    with pytest.raises(ConfigError):
        parse_levels("4,zebra")
    with pytest.raises(ConfigError):
        parse_levels("0,4")
    with pytest.raises(ConfigError):
        parse_levels("")


def test_scenario_config_validation():
    with pytest.raises(ConfigError):
        ScenarioConfig(scenario="wavepool")
    with pytest.raises(ConfigError):
        ScenarioConfig(levels=[])
    with pytest.raises(ConfigError):
        ScenarioConfig(m=2, k=0)
    with pytest.raises(ConfigError):
        ScenarioConfig(scenario="cavity", rect=(0.0, 2.0, 0.0, 1.0))


def test_load_config(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("""
[scenario]
name = manufactured
levels = 4, 8

[space]
m = 2
k = 1

[physics]
nu = 0.25
alpha = 7
r = 3

[solver]
tol = 1e-9
condense = on

[output]
dir = results
""")
    cfg = load_config(str(path))
    assert cfg.scenario == "manufactured"
    assert cfg.levels == [(4, 4), (8, 8)]
    assert (cfg.m, cfg.k) == (2, 1)
    assert cfg.nu == 0.25
    assert cfg.alpha == 7.0
    assert cfg.r == 3.0
    assert cfg.tol == 1e-9
    assert cfg.condense is True
    assert cfg.out_dir == "results"


def test_load_config_defaults_k_to_m(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[space]\nm = 2\n")
    assert load_config(str(path)).k == 2


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.ini"))
    bad = tmp_path / "bad.ini"
    bad.write_text("[physics]\nnu = quick\n")
    with pytest.raises(ConfigError):
        load_config(str(bad))
