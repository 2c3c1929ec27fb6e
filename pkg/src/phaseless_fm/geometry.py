"""Boundary curves, measurement directions and sampling grids.

The five curve families are 2*pi-periodic, counter-clockwise
parametrizations with analytic first and second derivatives, which is
what the spectrally accurate Nystrom discretization in ``forward`` needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

CURVE_KINDS = ("circle", "kite", "peanut", "rounded_square", "rounded_triangle")

TWO_PI = 2.0 * np.pi


class GeometryError(ValueError):
    """Invalid geometric input (bad kind, degenerate parametrization, ...)."""


def _polar(r, dr, ddr, t):
    c, s = np.cos(t), np.sin(t)
    pos = np.stack([r * c, r * s], axis=-1)
    d1 = np.stack([dr * c - r * s, dr * s + r * c], axis=-1)
    d2 = np.stack([ddr * c - 2 * dr * s - r * c, ddr * s + 2 * dr * c - r * s], axis=-1)
    return pos, d1, d2


def _evaluate(kind, t):
    """Return (x, x', x'') of the centred curve at parameters ``t``."""
    c, s = np.cos(t), np.sin(t)
    if kind == "circle":
        one = np.ones_like(t)
        return _polar(one, 0 * t, 0 * t, t)
    if kind == "kite":
        pos = np.stack([c + 0.65 * np.cos(2 * t) - 0.65, 1.5 * s], axis=-1)
        d1 = np.stack([-s - 1.3 * np.sin(2 * t), 1.5 * c], axis=-1)
        d2 = np.stack([-c - 2.6 * np.cos(2 * t), -1.5 * s], axis=-1)
        return pos, d1, d2
    if kind == "peanut":
        g = c**2 + 0.25 * s**2
        dg = -0.75 * np.sin(2 * t)
        ddg = -1.5 * np.cos(2 * t)
        r = np.sqrt(g)
        dr = dg / (2 * r)
        ddr = ddg / (2 * r) - dg**2 / (4 * r**3)
        return _polar(r, dr, ddr, t)
    if kind == "rounded_square":
        pos = 0.75 * np.stack([c**3 + c, s**3 + s], axis=-1)
        d1 = 0.75 * np.stack([-3 * c**2 * s - s, 3 * s**2 * c + c], axis=-1)
        d2 = 0.75 * np.stack([6 * c * s**2 - 3 * c**3 - c, 6 * s * c**2 - 3 * s**3 - s], axis=-1)
        return pos, d1, d2
    if kind == "rounded_triangle":
        r = 2 + 0.3 * np.cos(3 * t)
        dr = -0.9 * np.sin(3 * t)
        ddr = -2.7 * np.cos(3 * t)
        return _polar(r, dr, ddr, t)
    raise GeometryError(f"unknown curve kind {kind!r}; expected one of {CURVE_KINDS}")


@dataclass(frozen=True)
class BoundaryCurve:
    """One of the closed test curves, translated to ``center``.

    ``quadrature_count`` is the number of equispaced Nystrom nodes used when
    this curve is discretized; it must be even.
    """

    kind: str
    center: tuple[float, float] = (0.0, 0.0)
    quadrature_count: int = 256

    def __post_init__(self):
        if self.kind not in CURVE_KINDS:
            raise GeometryError(f"unknown curve kind {self.kind!r}; expected one of {CURVE_KINDS}")
        if self.quadrature_count <= 0 or self.quadrature_count % 2:
            raise GeometryError("quadrature_count must be a positive even integer")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    def point(self, t):
        t = np.mod(np.asarray(t, dtype=float), TWO_PI)
        pos, _, _ = _evaluate(self.kind, t)
        return pos + np.asarray(self.center)

    def derivatives(self, t):
        t = np.mod(np.asarray(t, dtype=float), TWO_PI)
        _, d1, d2 = _evaluate(self.kind, t)
        return d1, d2

    def normal(self, t):
        d1, _ = self.derivatives(t)
        speed = np.hypot(d1[..., 0], d1[..., 1])
        if np.any(speed < 1e-12):
            raise GeometryError("degenerate parametrization: |x'(t)| < 1e-12")
        nu = np.stack([d1[..., 1], -d1[..., 0]], axis=-1) / speed[..., None]
        return self.orientation * nu

    @cached_property
    def orientation(self) -> int:
        """+1 when (x2', -x1') points outward (counter-clockwise curve), else -1."""
        poly = self.polyline(2048)
        x, y = poly[:, 0], poly[:, 1]
        area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
        return 1 if area > 0 else -1

    def nodes(self, n: int | None = None):
        """Equispaced parameters t_j = 2*pi*j/n with positions and derivatives."""
        n = self.quadrature_count if n is None else n
        t = TWO_PI * np.arange(n) / n
        pos = self.point(t)
        d1, d2 = self.derivatives(t)
        return t, pos, d1, d2

    def polyline(self, n: int = 4096) -> np.ndarray:
        return self.point(TWO_PI * np.arange(n) / n)

    @cached_property
    def perimeter(self) -> float:
        _, _, d1, _ = self.nodes(1024)
        return float(np.hypot(d1[:, 0], d1[:, 1]).mean() * TWO_PI)

    @cached_property
    def area(self) -> float:
        poly = self.polyline(4096)
        x, y = poly[:, 0], poly[:, 1]
        return float(abs(0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))

    @cached_property
    def radius(self) -> float:
        """Largest distance from the centre to the curve."""
        poly = self.polyline(4096) - np.asarray(self.center)
        return float(np.hypot(poly[:, 0], poly[:, 1]).max())

    def contains(self, points, n: int = 4096) -> np.ndarray:
        """Even-odd point-in-polygon test against a fine polyline."""
        return points_in_polygon(points, self.polyline(n))


def points_in_polygon(points, polygon) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    px, py = pts[:, 0][:, None], pts[:, 1][:, None]
    x0, y0 = polygon[:, 0][None, :], polygon[:, 1][None, :]
    x1, y1 = np.roll(polygon[:, 0], -1)[None, :], np.roll(polygon[:, 1], -1)[None, :]
    inside = np.zeros(pts.shape[0], dtype=bool)
    # chunk over points to bound memory
    step = max(1, 2_000_000 // polygon.shape[0])
    for lo in range(0, pts.shape[0], step):
        sl = slice(lo, lo + step)
        yy, xx = py[sl], px[sl]
        crosses = (y0 > yy) != (y1 > yy)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = x0 + (yy - y0) * (x1 - x0) / (y1 - y0)
        hits = crosses & (xx < x_at)
        inside[sl] = np.count_nonzero(hits, axis=1) % 2 == 1
    return inside


def curve_point(curve: BoundaryCurve, t):
    return curve.point(t)


def curve_derivatives(curve: BoundaryCurve, t):
    return curve.derivatives(t)


def outward_normal(curve: BoundaryCurve, t):
    return curve.normal(t)


@dataclass(frozen=True)
class DirectionSet:
    """L equispaced unit vectors with angles 2*pi*j/L, j = 0..L-1."""

    count: int
    angles: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.count, (int, np.integer)) or self.count < 2 or self.count % 2:
            raise GeometryError("direction count L must be an even integer >= 2")
        object.__setattr__(self, "angles", TWO_PI * np.arange(self.count) / self.count)

    @property
    def vectors(self) -> np.ndarray:
        return np.stack([np.cos(self.angles), np.sin(self.angles)], axis=-1)

    def antipode(self, j):
        """Index j' with x_{j'} = -x_j."""
        return (np.asarray(j) + self.count // 2) % self.count


def uniform_directions(L: int) -> DirectionSet:
    return DirectionSet(L)


@dataclass(frozen=True)
class SamplingGrid:
    xmin: float = -6.0
    xmax: float = 6.0
    ymin: float = -6.0
    ymax: float = 6.0
    nx: int = 101
    ny: int = 101

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise GeometryError("grid needs at least 2 nodes per axis")
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise GeometryError("grid bounds must satisfy min < max")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.xmin, self.xmax, self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.ymin, self.ymax, self.ny)

    @property
    def spacing(self) -> tuple[float, float]:
        return (self.xmax - self.xmin) / (self.nx - 1), (self.ymax - self.ymin) / (self.ny - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return self.ny, self.nx


def grid_nodes(grid: SamplingGrid) -> np.ndarray:
    """Nodes in row-major order (x varies fastest), shape (ny*nx, 2)."""
    gx, gy = np.meshgrid(grid.xs, grid.ys)
    return np.stack([gx.ravel(), gy.ravel()], axis=-1)
