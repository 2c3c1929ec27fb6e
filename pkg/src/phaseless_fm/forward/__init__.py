"""Direct scattering: solvers, far fields and synthetic data."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..geometry import uniform_directions
from ..noise import GENERATOR_ID, apply_relative_noise
from .medium import MediumSolver
from .mie import analytic_circle_farfield
from .nystrom import AccuracyWarning, BoundarySolver, SolverError
from .scene import (
    Dirichlet,
    Impedance,
    Medium,
    Obstacle,
    ScatteringScene,
    SceneError,
    suggested_quadrature_count,
)

__all__ = [
    "AccuracyWarning",
    "Dirichlet",
    "FarFieldMatrix",
    "ForwardSolution",
    "Impedance",
    "Medium",
    "Obstacle",
    "PhaselessDataset",
    "ScatteringScene",
    "SceneError",
    "SolverError",
    "analytic_circle_farfield",
    "far_field",
    "make_solver",
    "scattered_field",
    "simulate_farfield",
    "simulate_phaseless",
    "solve_dirichlet",
    "solve_impedance",
    "solve_medium",
    "suggested_quadrature_count",
]


class _EmptySolver:
    def __init__(self, scene):
        self.scene = scene
        self.k = scene.k

    def solve(self, directions):
        return np.zeros((0, np.atleast_2d(directions).shape[0]), dtype=complex)

    def scattered(self, points, values):
        return np.zeros((np.atleast_2d(points).shape[0], values.shape[1]), dtype=complex)

    def far_field(self, xhat, values):
        return np.zeros((np.atleast_2d(xhat).shape[0], values.shape[1]), dtype=complex)


class _BoundaryAdapter(BoundarySolver):
    def solve(self, directions):
        return self.densities(directions)


class _MediumAdapter(MediumSolver):
    def solve(self, directions):
        return self.total_field(directions)


def make_solver(scene: ScatteringScene):
    """Solver object exposing ``solve``, ``scattered`` and ``far_field``.

    Impenetrable scenes are assembled and factored once, so solving for many
    incident directions is cheap.
    """
    if scene.is_empty:
        return _EmptySolver(scene)
    if scene.is_medium:
        return _MediumAdapter(scene)
    return _BoundaryAdapter(scene)


@dataclass
class ForwardSolution:
    """Solution for one incident direction.

    ``values`` holds the nodal boundary densities (obstacles) or the grid
    values of the total field (media).
    """

    scene: ScatteringScene
    direction: np.ndarray
    values: np.ndarray
    solver: object

    def far_field(self, xhat):
        return far_field(self, xhat)

    def scattered_field(self, x):
        return scattered_field(self, x)


def _solve(scene, d, allowed):
    for ob in scene.obstacles:
        if not isinstance(ob.condition, allowed):
            raise SceneError(f"condition {type(ob.condition).__name__} not handled by this solver")
    d = np.asarray(d, dtype=float)
    if abs(np.hypot(*d) - 1) > 1e-12:
        raise ValueError("incident direction must be a unit vector")
    solver = make_solver(scene)
    return ForwardSolution(scene, d, solver.solve(d)[:, 0], solver)


def solve_dirichlet(scene: ScatteringScene, d) -> ForwardSolution:
    """Sound-soft scattering of the plane wave e^{ik x.d}."""
    return _solve(scene, d, Dirichlet)


def solve_impedance(scene: ScatteringScene, d) -> ForwardSolution:
    """Impedance (or sound-hard, rho = 0) scattering of e^{ik x.d}."""
    return _solve(scene, d, (Impedance, Dirichlet))


def solve_medium(scene: ScatteringScene, d) -> ForwardSolution:
    """Penetrable-medium scattering of e^{ik x.d}."""
    return _solve(scene, d, Medium)


def far_field(solution: ForwardSolution, xhat):
    xh = np.asarray(xhat, dtype=float)
    out = solution.solver.far_field(np.atleast_2d(xh), solution.values[:, None])[:, 0]
    return out[0] if xh.ndim == 1 else out


def scattered_field(solution: ForwardSolution, x):
    x = np.asarray(x, dtype=float)
    out = solution.solver.scattered(np.atleast_2d(x), solution.values[:, None])[:, 0]
    return out[0] if x.ndim == 1 else out


@dataclass
class PhaselessDataset:
    """|u(R xhat_i, xhat_j)| on an L x L grid of observation/incidence pairs.

    ``noise_delta`` is 0 and ``noise_seed`` None for exact data.
    """

    values: np.ndarray
    k: float
    R: float
    noise_delta: float = 0.0
    noise_seed: Optional[int] = None
    generator: str = GENERATOR_ID

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("phaseless data must be a square L x L matrix")
        if v.shape[0] % 2:
            raise ValueError("L must be even")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("phaseless data must be finite and nonnegative")
        if not (self.k > 0 and self.R > 0):
            raise ValueError("k and R must be positive")

    @property
    def L(self) -> int:
        return self.values.shape[0]

    @property
    def exact(self) -> bool:
        return self.noise_seed is None or self.noise_delta == 0


@dataclass
class FarFieldMatrix:
    """u^inf(xhat_i, xhat_j) for L equispaced directions."""

    values: np.ndarray
    k: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] % 2:
            raise ValueError("far-field matrix must be square with even L")
        if not np.all(np.isfinite(v)):
            raise ValueError("far-field matrix has non-finite entries")

    @property
    def L(self) -> int:
        return self.values.shape[0]


def _circle_fields(scene, R, L, solver):
    dirs = uniform_directions(L).vectors
    if scene.enclosing_radius() >= R:
        raise SceneError("all obstacles must lie strictly inside the measurement circle")
    solver = solver or make_solver(scene)
    us = solver.scattered(R * dirs, solver.solve(dirs))
    ui = np.exp(1j * scene.k * R * dirs @ dirs.T)
    return ui, us


def total_field_on_circle(scene: ScatteringScene, R: float, L: int, solver=None) -> np.ndarray:
    """Complex u(R xhat_i, xhat_j) for the L uniform directions."""
    ui, us = _circle_fields(scene, R, L, solver)
    return ui + us


def simulate_phaseless(scene: ScatteringScene, R: float, L: int, delta: float = 0.0,
                       seed: Optional[int] = None, solver=None) -> PhaselessDataset:
    """Phaseless total-field data, optionally with relative uniform noise."""
    ui, us = _circle_fields(scene, R, L, solver)
    # |u^i| = 1, so |u| = |1 + u^s conj(u^i)|; exact when u^s vanishes
    amplitude = np.abs(1.0 + us * ui.conj())
    if delta > 0:
        if seed is None:
            raise ValueError("a seed is required for noisy data")
        amplitude = apply_relative_noise(amplitude, delta, seed)
        return PhaselessDataset(amplitude, scene.k, R, delta, seed)
    return PhaselessDataset(amplitude, scene.k, R)


def simulate_farfield(scene: ScatteringScene, L: int, solver=None) -> FarFieldMatrix:
    dirs = uniform_directions(L).vectors
    solver = solver or make_solver(scene)
    values = solver.solve(dirs)
    return FarFieldMatrix(solver.far_field(dirs, values), scene.k)
