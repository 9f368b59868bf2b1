"""Parametric double-curvature arch dam.

Coordinates: x across the valley (crown at x = 0), y along the river
(downstream positive), z vertical from the base (z = 0) to the crest (z = h).
Control level 1 is the crest and level 6 the base, matching the ordering of
the design bounds (thin crest, wide crest radii).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

N_LEVELS = 6
N_VAR = 2 + 3 * N_LEVELS

VARIABLE_NAMES = (
    ["gamma", "beta"]
    + [f"tc{i}" for i in range(1, N_LEVELS + 1)]
    + [f"ru{i}" for i in range(1, N_LEVELS + 1)]
    + [f"rd{i}" for i in range(1, N_LEVELS + 1)]
)

_TC_BOUNDS = [(3, 10), (5, 14), (7, 19), (9, 23), (11, 26), (12, 31)]
_R_BOUNDS = [(104, 135), (91, 118), (78, 101), (65, 85), (52, 68), (39, 51)]

LOWER = np.array([0.0, 0.5] + [lo for lo, _ in _TC_BOUNDS] + [lo for lo, _ in _R_BOUNDS] * 2, dtype=float)
UPPER = np.array([0.3, 1.0] + [hi for _, hi in _TC_BOUNDS] + [hi for _, hi in _R_BOUNDS] * 2, dtype=float)


class GeometryError(ValueError):
    """Invalid geometric input (bad canyon, duplicate levels, z out of range)."""


@dataclass(frozen=True)
class DesignVector:
    gamma: float
    beta: float
    tc: tuple[float, ...]
    ru: tuple[float, ...]
    rd: tuple[float, ...]

    def __post_init__(self):
        for name in ("tc", "ru", "rd"):
            values = tuple(float(v) for v in getattr(self, name))
            if len(values) != N_LEVELS:
                raise GeometryError(f"{name} needs {N_LEVELS} control values, got {len(values)}")
            object.__setattr__(self, name, values)
        if not self.beta > 0:
            raise GeometryError("beta must be positive")

    @classmethod
    def from_array(cls, x) -> "DesignVector":
        x = np.asarray(x, dtype=float)
        if x.shape != (N_VAR,):
            raise GeometryError(f"design array must have shape ({N_VAR},), got {x.shape}")
        n = N_LEVELS
        return cls(float(x[0]), float(x[1]), tuple(x[2 : 2 + n]), tuple(x[2 + n : 2 + 2 * n]), tuple(x[2 + 2 * n :]))

    def to_array(self) -> np.ndarray:
        return np.array([self.gamma, self.beta, *self.tc, *self.ru, *self.rd], dtype=float)

    def in_bounds(self, tol: float = 1e-12) -> bool:
        x = self.to_array()
        return bool(np.all(x >= LOWER - tol) and np.all(x <= UPPER + tol))


@dataclass(frozen=True)
class CanyonProfile:
    """Symmetric valley: half-width of the canyon as a piecewise-linear function of z."""

    height: float
    levels: tuple[tuple[float, float], ...]

    def __post_init__(self):
        levels = tuple((float(z), float(w)) for z, w in self.levels)
        object.__setattr__(self, "levels", levels)
        z = np.array([p[0] for p in levels])
        w = np.array([p[1] for p in levels])
        if len(levels) < 2:
            raise GeometryError("canyon needs at least two levels")
        if not np.isclose(z[0], 0.0) or not np.isclose(z[-1], self.height):
            raise GeometryError("canyon levels must run from z=0 to z=height")
        if np.any(np.diff(z) <= 0):
            raise GeometryError("canyon elevations must be strictly increasing")
        if np.any(w <= 0) or np.any(np.diff(w) < 0):
            raise GeometryError("canyon half-widths must be positive and non-decreasing")

    def half_width(self, z):
        zs, ws = zip(*self.levels)
        return np.interp(z, zs, ws)

    def area(self) -> float:
        """Exact area of the projected region A (trapezoidal in each linear piece)."""
        z = np.array([p[0] for p in self.levels])
        w = np.array([p[1] for p in self.levels])
        return float(np.sum(np.diff(z) * (w[1:] + w[:-1])))

    def to_dict(self) -> dict:
        return {"height": self.height, "levels": [list(p) for p in self.levels]}

    @classmethod
    def from_dict(cls, data: dict) -> "CanyonProfile":
        try:
            return cls(float(data["height"]), tuple(tuple(p) for p in data["levels"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise GeometryError(f"malformed canyon profile: {exc}") from exc

    @classmethod
    def load(cls, path) -> "CanyonProfile":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


MORROW_POINT_HEIGHT = 142.65
MORROW_POINT_CREST_LENGTH = 220.68


def morrow_point_canyon(base_half_width: float = 50.0) -> CanyonProfile:
    h = MORROW_POINT_HEIGHT
    return CanyonProfile(h, ((0.0, base_half_width), (h, MORROW_POINT_CREST_LENGTH / 2)))


def morrow_point_design() -> DesignVector:
    """Baseline shape: 3.66 m crest to 15.85 m base crown thickness, linear in height."""
    tc = np.linspace(3.66, 15.85, N_LEVELS)
    return DesignVector(
        gamma=0.15,
        beta=0.65,
        tc=tuple(tc),
        ru=(108.0, 95.0, 82.0, 70.0, 57.0, 45.0),
        rd=(104.0, 91.0, 78.0, 65.0, 52.0, 39.0),
    )


def control_levels(h: float) -> np.ndarray:
    """Elevations of the six control levels, crest first."""
    return h * (1.0 - np.arange(N_LEVELS) / (N_LEVELS - 1))


def crown_curve(gamma: float, beta: float, h: float, z):
    """Upstream offset g(z) of the crown cantilever; its slope vanishes at z = beta*h."""
    z = np.asarray(z, dtype=float)
    if beta <= 0:
        raise GeometryError("beta must be positive")
    if np.any(z < -1e-9 * h) or np.any(z > h * (1 + 1e-9)):
        raise GeometryError(f"elevation outside [0, {h}]")
    return gamma * z**2 / (2.0 * beta * h) - gamma * z


def crown_slope(gamma: float, beta: float, h: float, z):
    return gamma * np.asarray(z, dtype=float) / (beta * h) - gamma


def _check_levels(levels) -> np.ndarray:
    levels = np.asarray(levels, dtype=float)
    if len(np.unique(levels)) != len(levels):
        raise GeometryError("control levels must be distinct")
    return levels


def lagrange_interp(values, levels, z):
    """Degree-(n-1) Lagrange polynomial through ``(levels[i], values[i])`` evaluated at z."""
    levels = _check_levels(levels)
    values = np.asarray(values, dtype=float)
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    for i in range(len(levels)):
        basis = np.ones_like(z)
        for m in range(len(levels)):
            if m != i:
                basis = basis * (z - levels[m]) / (levels[i] - levels[m])
        out = out + values[i] * basis
    return out


def lagrange_derivative(values, levels, z):
    levels = _check_levels(levels)
    values = np.asarray(values, dtype=float)
    z = np.asarray(z, dtype=float)
    n = len(levels)
    out = np.zeros_like(z)
    for i in range(n):
        dbasis = np.zeros_like(z)
        for k in range(n):
            if k == i:
                continue
            term = np.full_like(z, 1.0 / (levels[i] - levels[k]))
            for m in range(n):
                if m != i and m != k:
                    term = term * (z - levels[m]) / (levels[i] - levels[m])
            dbasis = dbasis + term
        out = out + values[i] * dbasis
    return out


@dataclass
class Violations:
    """Nonnegative constraint violations; all zero means feasible.

    ``radius_ratio[i] = max(0, rd_i/ru_i - 1)``, ``overhang`` is the relative
    excess of the overhang slope, ``central_angle[i]`` is in degrees, and
    ``geometry`` measures nonpositive thickness or radius anywhere in the body.
    """

    radius_ratio: np.ndarray
    overhang: float
    central_angle: np.ndarray
    geometry: float = 0.0

    @property
    def total(self) -> float:
        # central-angle degrees scaled by the 90 degree lower bound so all terms are O(1)
        return float(self.radius_ratio.sum() + self.overhang + self.central_angle.sum() / 90.0 + self.geometry)

    @property
    def feasible(self) -> bool:
        return self.total == 0.0


@dataclass
class DamShape:
    design: DesignVector
    canyon: CanyonProfile
    s_abw: float = 0.3
    phi_bounds: tuple[float, float] = (90.0, 130.0)
    resolution: tuple[int, int] = (64, 64)
    volume: float = field(init=False)
    overhang_slope: float = field(init=False)
    central_angles: np.ndarray = field(init=False)
    violations: Violations = field(init=False)

    def __post_init__(self):
        self.central_angles = central_angles(self)
        self.overhang_slope = overhang_slope(self)
        self.violations = constraint_check(self, self.s_abw, *self.phi_bounds)
        self.volume = volume(self, self.resolution)

    @property
    def height(self) -> float:
        return self.canyon.height

    @property
    def levels(self) -> np.ndarray:
        return control_levels(self.height)

    def crown_thickness(self, z):
        return lagrange_interp(self.design.tc, self.levels, z)

    def ru(self, z):
        return lagrange_interp(self.design.ru, self.levels, z)

    def rd(self, z):
        return lagrange_interp(self.design.rd, self.levels, z)

    @property
    def feasible(self) -> bool:
        return self.violations.feasible


def faces(shape: DamShape, x, z):
    """Upstream and downstream face offsets ``(y_u, y_d)`` at (x, z).

    A nonpositive interpolated radius gives non-finite offsets; that state is
    reported by :func:`constraint_check` under ``geometry`` rather than raised.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    d = shape.design
    g = crown_curve(d.gamma, d.beta, shape.height, z)
    ru, rd = shape.ru(z), shape.rd(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        yu = np.where(ru > 0, x**2 / (2.0 * ru) + g, np.nan)
        yd = np.where(rd > 0, x**2 / (2.0 * rd) + g + shape.crown_thickness(z), np.nan)
    return yu, yd


def quadrature_grid(canyon: CanyonProfile, resolution=(64, 64), mirror: bool = False):
    """Midpoints and weights of a mapped nx-by-nz grid covering the projected area.

    Each horizontal strip of height dz spans [-w(z), w(z)] at its midpoint
    elevation and is split into nx equal cells.
    """
    nx, nz = resolution
    dz = canyon.height / nz
    zc = (np.arange(nz) + 0.5) * dz
    w = canyon.half_width(zc)
    s = -1.0 + (2.0 * np.arange(nx) + 1.0) / nx
    if mirror:
        s = -s[::-1]
    X = s[None, :] * w[:, None]
    Z = np.broadcast_to(zc[:, None], X.shape)
    W = np.broadcast_to((2.0 * w / nx * dz)[:, None], X.shape)
    return X, Z, W


def volume(shape: DamShape, resolution=(64, 64), mirror: bool = False) -> float:
    """Concrete volume: integral of |y_u - y_d| over the projected area (midpoint rule)."""
    nx, nz = resolution
    if nx < 8 or nz < 8:
        raise GeometryError("quadrature resolution must be at least 8x8")
    X, Z, W = quadrature_grid(shape.canyon, resolution, mirror)
    yu, yd = faces(shape, X, Z)
    thick = np.abs(yu - yd)
    if not np.all(np.isfinite(thick)):
        return float("inf")
    return float(np.sum(thick * W))


def overhang_slope(shape: DamShape, samples: int = 201) -> float:
    """Signed face slope dy/dz of largest magnitude along the crown cantilever."""
    d = shape.design
    z = np.linspace(0.0, shape.height, samples)
    up = crown_slope(d.gamma, d.beta, shape.height, z)
    down = up + lagrange_derivative(d.tc, shape.levels, z)
    both = np.concatenate([up, down])
    return float(both[np.argmax(np.abs(both))])


def central_angles(shape: DamShape) -> np.ndarray:
    """Opening angle (degrees) of the upstream arch at each control level: 2*atan(x_a / r_u)."""
    z = shape.levels
    xa = shape.canyon.half_width(z)
    ru = np.asarray(shape.design.ru)
    return np.degrees(2.0 * np.arctan2(xa, ru))


def _geometry_defect(shape: DamShape, samples: int = 101) -> float:
    z = np.linspace(0.0, shape.height, samples)
    xa = shape.canyon.half_width(z)
    ru, rd, tc = shape.ru(z), shape.rd(z), shape.crown_thickness(z)
    defect = float(np.sum(np.maximum(0.0, -ru)) + np.sum(np.maximum(0.0, -rd)))
    if np.any(ru <= 0) or np.any(rd <= 0):
        return defect + 1.0
    thick_crown = tc
    thick_abut = xa**2 / 2.0 * (1.0 / rd - 1.0 / ru) + tc
    return defect + float(np.sum(np.maximum(0.0, -np.minimum(thick_crown, thick_abut))))


def constraint_check(shape: DamShape, s_abw: float = 0.3, phi_l: float = 90.0, phi_u: float = 130.0) -> Violations:
    d = shape.design
    ratio = np.maximum(0.0, np.asarray(d.rd) / np.asarray(d.ru) - 1.0)
    s = overhang_slope(shape)
    over = max(0.0, abs(s) / s_abw - 1.0)
    phi = central_angles(shape)
    angle = np.maximum(0.0, phi_l - phi) + np.maximum(0.0, phi - phi_u)
    return Violations(ratio, over, angle, _geometry_defect(shape))


def make_shape(x, canyon: CanyonProfile | None = None, **kwargs) -> DamShape:
    design = x if isinstance(x, DesignVector) else DesignVector.from_array(x)
    return DamShape(design, canyon or morrow_point_canyon(), **kwargs)
