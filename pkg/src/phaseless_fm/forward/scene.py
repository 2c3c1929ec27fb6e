"""Scene description: wavenumber, obstacles and their physical conditions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from ..geometry import BoundaryCurve, points_in_polygon


class SceneError(ValueError):
    """Inadmissible scene (sign conditions, overlapping obstacles, ...)."""


@dataclass(frozen=True)
class Dirichlet:
    """Sound-soft boundary: u = 0."""

    name = "dirichlet"


@dataclass(frozen=True)
class Impedance:
    """Robin boundary du/dnu + rho u = 0 with rho(t) = a + b sin(t).

    ``Impedance()`` is the sound-hard (Neumann) obstacle.  A callable ``rho``
    of the curve parameter overrides the two coefficients.
    """

    a: complex = 0.0
    b: complex = 0.0
    rho: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)

    name = "impedance"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.rho is not None:
            return np.broadcast_to(np.asarray(self.rho(t), dtype=complex), t.shape)
        return complex(self.a) + complex(self.b) * np.sin(t)


@dataclass(frozen=True)
class Medium:
    """Penetrable inclusion with refractive index n (constant or n(points))."""

    n: Union[complex, Callable[[np.ndarray], np.ndarray]] = 1.0

    name = "medium"

    def index(self, points):
        points = np.asarray(points, dtype=float)
        if callable(self.n):
            return np.asarray(self.n(points), dtype=complex)
        return np.full(points.shape[:-1], complex(self.n))


Condition = Union[Dirichlet, Impedance, Medium]


@dataclass(frozen=True)
class Obstacle:
    curve: BoundaryCurve
    condition: Condition = field(default_factory=Dirichlet)


@dataclass(frozen=True)
class ScatteringScene:
    """Wavenumber plus a (possibly empty) list of disjoint obstacles.

    Boundary obstacles (Dirichlet/impedance) and penetrable media cannot be
    mixed in one scene.  ``medium_grid`` is the number of cells per axis of
    the volume grid used for penetrable obstacles.
    """

    k: float
    obstacles: tuple[Obstacle, ...] = ()
    medium_grid: int = 64

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if not (self.k > 0 and math.isfinite(self.k)):
            raise SceneError("wavenumber k must be positive and finite")
        kinds = {isinstance(ob.condition, Medium) for ob in self.obstacles}
        if len(kinds) > 1:
            raise SceneError("cannot mix penetrable media with impenetrable obstacles")
        for ob in self.obstacles:
            _check_condition(ob)
        _check_disjoint(self.obstacles)

    @property
    def is_empty(self) -> bool:
        return not self.obstacles

    @property
    def is_medium(self) -> bool:
        return bool(self.obstacles) and isinstance(self.obstacles[0].condition, Medium)

    def enclosing_radius(self) -> float:
        """Radius of the smallest origin-centred disc containing all obstacles."""
        if not self.obstacles:
            return 0.0
        return max(float(np.hypot(*ob.curve.polyline(2048).T).max()) for ob in self.obstacles)


def _check_condition(ob: Obstacle):
    cond = ob.condition
    if isinstance(cond, Impedance):
        t = np.linspace(0, 2 * np.pi, 721)
        rho = cond(t)
        if np.any(rho.imag < -1e-14) or not np.all(np.isfinite(rho)):
            raise SceneError("impedance must satisfy Im(rho) >= 0 on the whole boundary")
    elif isinstance(cond, Medium):
        curve = ob.curve
        r = curve.radius
        g = np.linspace(-r, r, 41)
        pts = np.stack(np.meshgrid(g, g), -1).reshape(-1, 2) + np.asarray(curve.center)
        pts = np.concatenate([pts[curve.contains(pts)], curve.polyline(64)])
        n = cond.index(pts)
        if np.any(n.real <= 0) or np.any(n.imag < -1e-14) or not np.all(np.isfinite(n)):
            raise SceneError("refractive index must satisfy Re n >= c0 > 0 and Im n >= 0")
    elif not isinstance(cond, Dirichlet):
        raise SceneError(f"unsupported condition {cond!r}")


def _check_disjoint(obstacles):
    polys = [ob.curve.polyline(1024) for ob in obstacles]
    for i in range(len(polys)):
        for j in range(i + 1, len(polys)):
            if points_in_polygon(polys[i], polys[j]).any() or points_in_polygon(polys[j], polys[i]).any():
                raise SceneError(f"obstacles {i} and {j} overlap")


def suggested_quadrature_count(curve: BoundaryCurve, k: float, points_per_wavelength: float = 12.0) -> int:
    """max(256, ppw * perimeter / wavelength), rounded up to an even number."""
    n = math.ceil(points_per_wavelength * curve.perimeter * k / (2 * np.pi))
    n = max(256, n)
    return n + (n % 2)
