"""Indicator function of the factorization method.

For a sampling point z the test vector is B (exp(-ik xhat_j . z))_j and

    W(z) = [ sum_l |<phi_z, psi_l>|^2 / lambda_l ]^{-1}

over the eigensystem {lambda_l; psi_l} of A_#, where A is either the
phaseless operator N~ or its far-field counterpart F~.  W is large for z
inside the scatterer and small outside.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .forward import FarFieldMatrix, PhaselessDataset
from .geometry import DirectionSet, SamplingGrid, grid_nodes, uniform_directions
from .operators import (
    OperatorMatrix,
    SpectralOperator,
    assemble_b_matrix,
    assemble_data_matrix,
    assemble_f_tilde,
    assemble_n_tilde,
    sharp,
)

DEFAULT_M = 100
DEFAULT_CUTOFF = 1e-12

_CHUNK = 4096


class ParameterWarning(UserWarning):
    """Inversion parameters outside the recommended range."""


@dataclass(frozen=True)
class TestVector:
    z: np.ndarray
    values: np.ndarray

    __test__ = False  # keep pytest from collecting this class


def test_vector(z, k: float, directions: DirectionSet, B) -> TestVector:
    """B (phi_z(xhat_1), ..., phi_z(xhat_L))^T with phi_z(xhat) = exp(-ik xhat . z)."""
    z = np.asarray(z, dtype=float)
    b = B.values if isinstance(B, OperatorMatrix) else np.asarray(B)
    if b.shape != (directions.count, directions.count):
        raise ValueError(f"B has shape {b.shape}, expected {(directions.count,) * 2}")
    phi = np.exp(-1j * k * directions.vectors @ z)
    return TestVector(z, b @ phi)


test_vector.__test__ = False


def _kept(spec: SpectralOperator, cutoff_rel: float):
    if not 0.0 <= cutoff_rel < 1.0:
        raise ValueError("cutoff_rel must lie in [0, 1)")
    lam = spec.eigenvalues
    lmax = spec.lambda_max
    if lmax <= 0:
        return lam[:0], spec.eigenvectors[:, :0]
    keep = lam > cutoff_rel * lmax
    return lam[keep], spec.eigenvectors[:, keep]


def _indicator_from_vectors(lam, V, tv: np.ndarray) -> np.ndarray:
    """W for a batch of test vectors stored as columns of ``tv``."""
    if not lam.size:
        return np.zeros(tv.shape[1])
    coeff = V.conj().T @ tv
    total = (np.abs(coeff) ** 2 / lam[:, None]).sum(axis=0)
    out = np.zeros(tv.shape[1])
    pos = total > 0
    out[pos] = 1.0 / total[pos]
    return out


def indicator_value(spec: SpectralOperator, tv: TestVector, cutoff_rel: float = DEFAULT_CUTOFF) -> float:
    """W(z); zero when every eigenvalue is cut off or the sum vanishes."""
    lam, V = _kept(spec, cutoff_rel)
    return float(_indicator_from_vectors(lam, V, np.asarray(tv.values)[:, None])[0])


@dataclass(frozen=True)
class IndicatorField:
    """Indicator values on a sampling grid, shape (ny, nx)."""

    grid: SamplingGrid
    values: np.ndarray
    raw_max: float
    cutoff_rel: float
    normalized: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("indicator values must be finite and nonnegative")
        object.__setattr__(self, "values", v)

    @property
    def argmax_point(self) -> np.ndarray:
        iy, ix = np.unravel_index(np.argmax(self.values), self.values.shape)
        return np.array([self.grid.xs[ix], self.grid.ys[iy]])


def evaluate_indicator(spec: SpectralOperator, points, k: float, B, cutoff_rel: float = DEFAULT_CUTOFF) -> np.ndarray:
    """W at each row of ``points``, evaluated in blocks."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    b = B.values if isinstance(B, OperatorMatrix) else np.asarray(B)
    xh = uniform_directions(spec.L).vectors
    lam, V = _kept(spec, cutoff_rel)
    # fold B into the eigenvectors once: <B phi, psi> = <phi, B psi>, B real symmetric
    BV = b.conj().T @ V
    out = np.empty(pts.shape[0])
    for lo in range(0, pts.shape[0], _CHUNK):
        phi = np.exp(-1j * k * xh @ pts[lo:lo + _CHUNK].T)
        out[lo:lo + _CHUNK] = _indicator_from_vectors(lam, BV, phi)
    return out


def _sweep(spec, grid, k, B, cutoff_rel, meta):
    values = evaluate_indicator(spec, grid_nodes(grid), k, B, cutoff_rel).reshape(grid.shape)
    return IndicatorField(grid, values, float(values.max()), cutoff_rel, meta=meta)


def reconstruct(data: PhaselessDataset, grid: SamplingGrid | None = None, M: int = DEFAULT_M,
                cutoff_rel: float = DEFAULT_CUTOFF) -> IndicatorField:
    """Indicator of the phaseless method from |u| on the circle of radius R."""
    grid = grid or SamplingGrid()
    if M < data.R:
        warnings.warn(f"truncation M={M} is below the measurement radius R={data.R:g}; M >= R is recommended",
                      ParameterWarning, stacklevel=2)
    B = assemble_b_matrix(data.L, M)
    Nt = assemble_n_tilde(assemble_data_matrix(data), B, data.k, data.R)
    meta = {"pipeline": "phaseless", "k": data.k, "R": data.R, "L": data.L, "M": M}
    return _sweep(sharp(Nt), grid, data.k, B, cutoff_rel, meta)


def reconstruct_from_farfield(F: FarFieldMatrix, grid: SamplingGrid | None = None, M: int = DEFAULT_M,
                              cutoff_rel: float = DEFAULT_CUTOFF) -> IndicatorField:
    """Reference indicator built from sharp(B F B)."""
    grid = grid or SamplingGrid()
    B = assemble_b_matrix(F.L, M)
    meta = {"pipeline": "farfield", "k": F.k, "L": F.L, "M": M}
    return _sweep(sharp(assemble_f_tilde(F, B)), grid, F.k, B, cutoff_rel, meta)


def normalize(field_: IndicatorField) -> IndicatorField:
    """Scale to unit maximum; an all-zero field is returned unchanged."""
    peak = float(field_.values.max())
    if peak <= 0:
        return field_
    return replace(field_, values=field_.values / peak, raw_max=peak, normalized=True)


def level_set(field_: IndicatorField, fraction: float) -> np.ndarray:
    """Boolean mask of nodes with W >= fraction * max W."""
    peak = field_.values.max()
    if peak <= 0:
        return np.zeros(field_.values.shape, dtype=bool)
    return field_.values >= fraction * peak
