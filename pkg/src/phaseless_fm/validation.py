"""Numerical checks of the asymptotic statements behind the method.

Each check returns a ``DecayReport``: the measured error for a list of
increasing parameters (radii or truncation orders) and the least-squares
slope of log(error) against log(parameter).
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special

from .forward import (
    FarFieldMatrix,
    ScatteringScene,
    make_solver,
    simulate_farfield,
    simulate_phaseless,
)
from .geometry import uniform_directions
from .inversion import ParameterWarning
from .operators import (
    assemble_b_matrix,
    assemble_data_matrix,
    assemble_f_tilde,
    assemble_n_tilde,
    sharp,
    spectral_norm,
)


@dataclass
class DecayReport:
    """Errors against an increasing parameter with a fitted log-log slope.

    ``passed`` combines the slope criterion (``slope_min <= slope <=
    slope_max``) with strict decrease when ``require_decreasing`` is set.
    An all-zero error list is the degenerate report of an empty scene; it
    has slope nan and passes.
    """

    name: str
    parameters: np.ndarray
    errors: np.ndarray
    slope_min: float = -np.inf
    slope_max: float = np.inf
    require_decreasing: bool = True
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.parameters = np.asarray(self.parameters, dtype=float)
        self.errors = np.asarray(self.errors, dtype=float)
        if self.parameters.shape != self.errors.shape or self.parameters.ndim != 1:
            raise ValueError("parameters and errors must be 1-d arrays of equal length")
        if np.any(np.diff(self.parameters) <= 0):
            raise ValueError("parameters must be strictly increasing")
        if np.any(self.errors < 0) or not np.all(np.isfinite(self.errors)):
            raise ValueError("errors must be finite and nonnegative")

    @property
    def degenerate(self) -> bool:
        return bool(np.all(self.errors == 0))

    @property
    def slope(self) -> float:
        if self.degenerate or np.any(self.errors == 0) or self.parameters.size < 2:
            return float("nan")
        return float(np.polyfit(np.log(self.parameters), np.log(self.errors), 1)[0])

    @property
    def decreasing(self) -> bool:
        return bool(np.all(np.diff(self.errors) < 0))

    @property
    def ratios(self) -> np.ndarray:
        """Successive error ratios e_i / e_{i+1}."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.errors[:-1] / self.errors[1:]

    @property
    def passed(self) -> bool:
        if self.degenerate:
            return True
        ok = True
        if np.isfinite(self.slope_min) or np.isfinite(self.slope_max):
            s = self.slope
            ok = np.isfinite(s) and self.slope_min <= s <= self.slope_max
        if self.require_decreasing:
            ok = ok and self.decreasing
        return bool(ok)

    def to_text(self) -> str:
        lines = [
            f"check: {self.name}",
            f"parameters: {' '.join(f'{p:.17g}' for p in self.parameters)}",
            f"errors: {' '.join(f'{e:.17g}' for e in self.errors)}",
            f"slope: {self.slope:.6f}",
            f"slope_range: [{self.slope_min:g}, {self.slope_max:g}]",
            f"decreasing: {str(self.decreasing).lower()}",
        ]
        lines += [f"{key}: {val}" for key, val in self.extra.items()]
        lines.append(f"passed: {str(self.passed).lower()}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["parameter", "error"])
        for p, e in zip(self.parameters, self.errors):
            w.writerow([f"{p:.17g}", f"{e:.17g}"])
        return buf.getvalue()


def check_reciprocity(F) -> float:
    """max |F[i, j] - F[-j, -i]| over antipodal index pairs."""
    values = F.values if isinstance(F, FarFieldMatrix) else np.asarray(F)
    L = values.shape[0]
    if values.shape != (L, L):
        raise ValueError("far-field matrix must be square")
    if L % 2:
        raise ValueError("reciprocity check needs an even number of directions")
    neg = (np.arange(L) + L // 2) % L
    return float(np.abs(values - values[neg][:, neg].T).max())


def _diameter(scene: ScatteringScene) -> float:
    if scene.is_empty:
        return 0.0
    pts = np.concatenate([ob.curve.polyline(256) for ob in scene.obstacles])
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff**2).sum(-1)).max())


def check_farfield_asymptotics(scene: ScatteringScene, d, radii, directions: int = 64) -> DecayReport:
    """Remainder of u^s(R xhat) ~ e^{i pi/4}/sqrt(8 k pi) e^{ikR}/sqrt(R) u^inf(xhat).

    The remainder decays like R^{-3/2}; the default pass band is
    [-1.7, -1.3].
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(radii < 10 * _diameter(scene)):
        raise ValueError("radii must be at least ten times the scatterer diameter")
    k = scene.k
    d = np.atleast_2d(np.asarray(d, dtype=float))
    solver = make_solver(scene)
    values = solver.solve(d)
    xh = uniform_directions(directions).vectors
    uinf = solver.far_field(xh, values)[:, 0]
    gamma = np.exp(1j * np.pi / 4) / np.sqrt(8 * k * np.pi)
    errors = []
    for R in radii:
        us = solver.scattered(R * xh, values)[:, 0]
        errors.append(np.abs(us - gamma * np.exp(1j * k * R) / np.sqrt(R) * uinf).max())
    return DecayReport("farfield-asymptotics", radii, errors, -1.7, -1.3)


def _operator_errors(scene, L, M, radii, use_sharp):
    radii = np.asarray(radii, dtype=float)
    if M < radii.max():
        warnings.warn(f"M={M} is below the largest radius {radii.max():g}; M >= R is recommended",
                      ParameterWarning, stacklevel=3)
    k = scene.k
    solver = make_solver(scene)
    B = assemble_b_matrix(L, M)
    Ft = assemble_f_tilde(simulate_farfield(scene, L, solver), B)
    ref = sharp(Ft).matrix if use_sharp else Ft.values
    errors = []
    for R in radii:
        Nt = assemble_n_tilde(assemble_data_matrix(simulate_phaseless(scene, R, L, solver=solver)), B, k, R)
        lhs = sharp(Nt).matrix if use_sharp else Nt.values
        errors.append(spectral_norm(lhs - ref / np.sqrt(8 * k * np.pi * R)))
    return radii, errors


def _check_k(scene, k):
    if k is not None and k != scene.k:
        raise ValueError(f"wavenumber {k} does not match the scene ({scene.k})")


def check_operator_asymptotics(scene: ScatteringScene, L: int, M: int, radii,
                               k: Optional[float] = None) -> DecayReport:
    """E(R) = |N~ - (8 k pi R)^{-1/2} F~| in the spectral norm.

    The continuous statement gives E = O(1/R); the pass criterion is strict
    decrease with slope <= -0.8.
    """
    _check_k(scene, k)
    radii, errors = _operator_errors(scene, L, M, radii, use_sharp=False)
    return DecayReport("operator-asymptotics", radii, errors, slope_max=-0.8, extra={"L": L, "M": M})


def check_sharp_asymptotics(scene: ScatteringScene, L: int, M: int, radii,
                            k: Optional[float] = None) -> DecayReport:
    """E_#(R) = |sharp(N~) - (8 k pi R)^{-1/2} sharp(F~)|; pass: decreasing, slope <= -0.5."""
    _check_k(scene, k)
    radii, errors = _operator_errors(scene, L, M, radii, use_sharp=True)
    return DecayReport("sharp-asymptotics", radii, errors, slope_max=-0.5, extra={"L": L, "M": M})


def truncation_residual(k: float, z, M: int) -> float:
    """|(I - P_M) phi_z| in L^2(S^1) for phi_z(xhat) = exp(-ik xhat . z).

    The Fourier coefficients of phi_z in the orthonormal basis
    exp(im theta)/sqrt(2 pi) have modulus sqrt(2 pi) |J_m(k|z|)|.
    """
    kz = k * float(np.hypot(*np.asarray(z, dtype=float)))
    if kz == 0:
        return 0.0
    # tail beyond this order is below double precision
    top = int(M + 2 * kz + 60)
    m = np.arange(M + 1, top + 1)
    tail = 2.0 * np.sum(special.jv(m, kz) ** 2)
    return float(np.sqrt(2 * np.pi * tail))


def check_truncation_decay(k: float, z, L: int, M_list) -> DecayReport:
    """Residual of the order-M projection of phi_z for each M.

    Decay is superexponential once M exceeds k|z|, so only monotonicity
    is part of the pass flag; ``extra`` carries the residual at the last M.
    """
    M_list = np.asarray(M_list, dtype=int)
    if L <= 2 * M_list.max():
        raise ValueError("L must exceed 2 max(M)")
    errors = [truncation_residual(k, z, int(M)) for M in M_list]
    return DecayReport("truncation", M_list, errors, extra={"L": L, "k|z|": k * float(np.hypot(*z))})
