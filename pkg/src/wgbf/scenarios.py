"""Built-in problem setups and configuration-file parsing.

The manufactured setup carries a closed-form divergence-free velocity and a
pressure on the unit square, with the forcing obtained by applying the full
momentum operator symbolically; no numeric differentiation anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
import configparser

import numpy as np

from .errors import ConfigError


# separable factors of the manufactured velocity:
#   u1 =  10 * X(x) * Y(y),  u2 = -10 * Xt(x) * Yt(y)
# with X' = 2 Xt and Yt' = 2 Y, so div u = 20 Xt Y - 20 Xt Y = 0.
def _X(x):
    return x * x * (x - 1.0) ** 2


def _Xt(x):
    return x * (x - 1.0) * (2.0 * x - 1.0)


def _Y(y):
    return y * (y - 1.0) * (2.0 * y - 1.0)


def _Yt(y):
    return y * y * (y - 1.0) ** 2


class ManufacturedSolution:
    """Exact fields and forcing on [0,1]^2 for given (nu, alpha, r)."""

    def __init__(self, nu: float = 1.0, alpha: float = 5.0, r: float = 10.0):
        self.nu = nu
        self.alpha = alpha
        self.r = r

    def velocity(self, pts: np.ndarray) -> np.ndarray:
        x, y = pts[..., 0], pts[..., 1]
        return np.stack([10.0 * _X(x) * _Y(y),
                         -10.0 * _Xt(x) * _Yt(y)], axis=-1)

    def velocity_gradient(self, pts: np.ndarray) -> np.ndarray:
        """Entries [..., c, d] = d u_c / d x_d."""
        x, y = pts[..., 0], pts[..., 1]
        dYdy = 6.0 * y * y - 6.0 * y + 1.0
        dXtdx = 6.0 * x * x - 6.0 * x + 1.0
        g = np.empty(pts.shape[:-1] + (2, 2))
        g[..., 0, 0] = 20.0 * _Xt(x) * _Y(y)
        g[..., 0, 1] = 10.0 * _X(x) * dYdy
        g[..., 1, 0] = -10.0 * dXtdx * _Yt(y)
        g[..., 1, 1] = -20.0 * _Xt(x) * _Y(y)
        return g

    def pressure(self, pts: np.ndarray) -> np.ndarray:
        x, y = pts[..., 0], pts[..., 1]
        return 10.0 * (2.0 * x - 1.0) ** 2 * (2.0 * y - 1.0)

    def pressure_gradient(self, pts: np.ndarray) -> np.ndarray:
        x, y = pts[..., 0], pts[..., 1]
        return np.stack([40.0 * (2.0 * x - 1.0) * (2.0 * y - 1.0),
                         20.0 * (2.0 * x - 1.0) ** 2], axis=-1)

    def stream_function(self, pts: np.ndarray) -> np.ndarray:
        x, y = pts[..., 0], pts[..., 1]
        return 5.0 * _X(x) * _Yt(y)

    def forcing(self, pts: np.ndarray) -> np.ndarray:
        """-nu lap u + (u . grad) u + alpha |u|^{r-2} u + grad p."""
        x, y = pts[..., 0], pts[..., 1]
        ddX = 12.0 * x * x - 12.0 * x + 2.0
        ddY = 12.0 * y - 6.0
        ddXt = 12.0 * x - 6.0
        ddYt = 12.0 * y * y - 12.0 * y + 2.0
        lap = np.stack([10.0 * (ddX * _Y(y) + _X(x) * ddY),
                        -10.0 * (ddXt * _Yt(y) + _Xt(x) * ddYt)], axis=-1)
        u = self.velocity(pts)
        g = self.velocity_gradient(pts)
        conv = np.einsum("...cd,...d->...c", g, u)
        mag2 = np.einsum("...d,...d->...", u, u)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(mag2 > 0.0, mag2 ** ((self.r - 2.0) / 2.0), 0.0)
        if self.r == 2.0:
            w = np.ones_like(mag2)
        damp = self.alpha * w[..., None] * u
        return -self.nu * lap + conv + damp + self.pressure_gradient(pts)


def cavity_lid_velocity(pts: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Unit tangential velocity on the top wall y = 1, zero elsewhere."""
    out = np.zeros(pts.shape[:-1] + (2,))
    out[..., 0] = np.where(np.abs(pts[..., 1] - 1.0) < tol, 1.0, 0.0)
    return out


_SCENARIOS = ("manufactured", "cavity", "custom")


@dataclass
class ScenarioConfig:
    """Everything one run needs: scenario, mesh levels, degrees, physics."""

    scenario: str = "manufactured"
    rect: tuple = (0.0, 1.0, 0.0, 1.0)
    levels: list = dc_field(default_factory=lambda: [(4, 4), (8, 8), (16, 16)])
    mesh_node_file: str | None = None
    mesh_cell_file: str | None = None
    m: int = 1
    k: int = 0
    nu: float = 1.0
    alpha: float = 5.0
    r: float = 10.0
    tol: float = 1e-8
    max_iter: int = 200
    condense: bool = False
    quad_degree: int | None = None
    out_dir: str = "out"

    def __post_init__(self):
        if self.scenario not in _SCENARIOS:
            raise ConfigError(
                f"unknown scenario {self.scenario!r}; choose from {_SCENARIOS}")
        if not self.levels and not self.mesh_node_file:
            raise ConfigError("levels list is empty and no mesh file given")
        if self.k not in (self.m - 1, self.m):
            raise ConfigError(f"k must be m-1 or m, got m={self.m} k={self.k}")
        if self.scenario == "cavity" and self.rect != (0.0, 1.0, 0.0, 1.0):
            raise ConfigError("cavity scenario is defined on the unit square")


def parse_levels(text: str):
    """'4,8,16' or '4x4,8x8' -> [(4,4),(8,8),(16,16)]."""
    levels = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            if "x" in tok:
                a, b = tok.split("x")
                levels.append((int(a), int(b)))
            else:
                n = int(tok)
                levels.append((n, n))
        except ValueError as exc:
            raise ConfigError(f"bad mesh level {tok!r} in {text!r}") from exc
    if not levels or any(n < 1 for lv in levels for n in lv):
        raise ConfigError(f"levels {text!r} must be positive integers")
    return levels


def load_config(path: str) -> ScenarioConfig:
    """Read an INI file with sections [scenario], [space], [physics],
    [solver], [output]; missing keys fall back to the defaults."""
    cp = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc

    kw = {}

    def grab(section, key, cast, dest=None):
        if cp.has_option(section, key):
            raw = cp.get(section, key)
            try:
                kw[dest or key] = cast(raw)
            except (ValueError, ConfigError) as exc:
                raise ConfigError(
                    f"{path}: bad value {raw!r} for [{section}] {key}") from exc

    def as_bool(raw):
        val = raw.strip().lower()
        if val in ("1", "true", "on", "yes"):
            return True
        if val in ("0", "false", "off", "no"):
            return False
        raise ValueError(raw)

    def as_rect(raw):
        parts = [float(v) for v in raw.split(",")]
        if len(parts) != 4:
            raise ValueError(raw)
        return tuple(parts)

    grab("scenario", "name", str, "scenario")
    grab("scenario", "domain", as_rect, "rect")
    grab("scenario", "levels", parse_levels)
    grab("scenario", "mesh_node_file", str)
    grab("scenario", "mesh_cell_file", str)
    grab("space", "m", int)
    grab("space", "k", int)
    grab("physics", "nu", float)
    grab("physics", "alpha", float)
    grab("physics", "r", float)
    grab("solver", "tol", float)
    grab("solver", "max_iter", int)
    grab("solver", "condense", as_bool)
    grab("solver", "quad_degree", int)
    grab("output", "dir", str, "out_dir")
    if "m" in kw and "k" not in kw:
        kw["k"] = kw["m"]
    return ScenarioConfig(**kw)
