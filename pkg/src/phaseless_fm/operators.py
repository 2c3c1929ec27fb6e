"""Discrete operators of the phaseless factorization method.

All matrices are L x L and indexed by the uniform directions
xhat_j = (cos 2*pi*j/L, sin 2*pi*j/L).  The smoothing matrix B_{L,M} is the
trapezoidal discretization of the truncated H^{1/2} weighting; the data
matrix N_L carries no quadrature weight, and neither does the far-field
analogue F~ = B F_L B, so the two stay directly comparable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .forward import FarFieldMatrix, PhaselessDataset
from .geometry import uniform_directions

TAGS = ("N_L", "B_LM", "N_tilde", "F_L", "F_tilde", "derived")

HERMITIAN_TOL = 1e-10


class OperatorError(ValueError):
    """Shape mismatch, non-Hermitian input or eigensolver failure."""


@dataclass(frozen=True)
class OperatorMatrix:
    """Square complex matrix with a provenance tag."""

    values: np.ndarray
    tag: str = "derived"

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise OperatorError(f"operator matrix must be square, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise OperatorError("operator matrix has non-finite entries")
        if self.tag not in TAGS:
            raise OperatorError(f"unknown provenance tag {self.tag!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def L(self) -> int:
        return self.values.shape[0]


def _values(A) -> np.ndarray:
    if isinstance(A, (OperatorMatrix, FarFieldMatrix)):
        return A.values
    if isinstance(A, SpectralOperator):
        return A.matrix
    v = np.asarray(A, dtype=complex)
    if v.ndim != 2 or v.shape[0] != v.shape[1]:
        raise OperatorError(f"operator matrix must be square, got shape {v.shape}")
    return v


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its first non-negligible entry is real positive."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        lead = np.nonzero(np.abs(col) > 1e-8 * np.abs(col).max())[0]
        if lead.size:
            c = col[lead[0]]
            out[:, j] = col * (abs(c) / c)
    return out


@dataclass(frozen=True)
class SpectralOperator:
    """Hermitian matrix with its eigensystem, eigenvalues in descending order."""

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        A = np.asarray(self.matrix, dtype=complex)
        lam = np.asarray(self.eigenvalues, dtype=float)
        V = np.asarray(self.eigenvectors, dtype=complex)
        n = A.shape[0]
        if A.shape != (n, n) or V.shape != (n, n) or lam.shape != (n,):
            raise OperatorError("inconsistent eigensystem shapes")
        if np.any(np.diff(lam) > 0):
            raise OperatorError("eigenvalues must be sorted in descending order")
        if self.check and n:
            scale = max(np.linalg.norm(A, 2), np.finfo(float).tiny)
            resid = np.linalg.norm(A @ V - V * lam, axis=0).max()
            if resid > HERMITIAN_TOL * scale and resid > 1e-300:
                raise OperatorError(f"eigenpair residual {resid:.2e} exceeds 1e-10 * |A| = {HERMITIAN_TOL * scale:.2e}")
            orth = np.abs(V.conj().T @ V - np.eye(n)).max()
            if orth > HERMITIAN_TOL:
                raise OperatorError(f"eigenvectors not orthonormal (deviation {orth:.2e})")
        for name, val in (("matrix", A), ("eigenvalues", lam), ("eigenvectors", V)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @classmethod
    def from_matrix(cls, A) -> "SpectralOperator":
        H = _hermitize(_values(A))
        lam, V = _eigh(H)
        return cls(H, lam[::-1], _fix_signs(V[:, ::-1]))

    @property
    def L(self) -> int:
        return self.matrix.shape[0]

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[0]) if self.L else 0.0


def _eigh(H):
    try:
        return np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise OperatorError(
            f"Hermitian eigensolver failed for {H.shape[0]}x{H.shape[0]} matrix "
            f"(max |entry| {np.abs(H).max():.3e}): {exc}"
        ) from exc


def _hermitize(A, tol=HERMITIAN_TOL):
    dev = np.abs(A - A.conj().T).max() if A.size else 0.0
    scale = np.abs(A).max() if A.size else 0.0
    if dev > tol * scale:
        raise OperatorError(f"matrix is not Hermitian (max |A - A*| = {dev:.2e}, max |A| = {scale:.2e})")
    return (A + A.conj().T) / 2


def assemble_data_matrix(data: PhaselessDataset) -> OperatorMatrix:
    """n_ij = (|u(R xhat_i, xhat_j)|^2 - 1) exp(ikR xhat_i . xhat_j)."""
    xh = uniform_directions(data.L).vectors
    phase = np.exp(1j * data.k * data.R * (xh @ xh.T))
    return OperatorMatrix((data.values**2 - 1.0) * phase, "N_L")


def assemble_b_matrix(L: int, M: int) -> OperatorMatrix:
    """B_{L,M} = (2 pi / L) C D C^* with c_im = phi_m(xhat_i), d_m = (1 + m^2)^{-1/4}.

    For uniform directions this is the real symmetric circulant
    (1/L) sum_{|m| <= M} (1 + m^2)^{-1/4} exp(im(theta_i - theta_j)).
    """
    if L <= 0 or L % 2:
        raise OperatorError("L must be a positive even integer")
    if M < 0:
        raise OperatorError("M must be nonnegative")
    theta = uniform_directions(L).angles
    m = np.arange(-M, M + 1)
    C = np.exp(1j * np.outer(theta, m)) / np.sqrt(2 * np.pi)
    d = (1.0 + m**2) ** -0.25
    B = (2 * np.pi / L) * (C * d) @ C.conj().T
    # the +-m terms pair into cosines; drop the rounding residue
    return OperatorMatrix(B.real.astype(complex), "B_LM")


def _check_shapes(A, B):
    if A.shape != B.shape:
        raise OperatorError(f"shape mismatch: {A.shape} vs {B.shape}")


def assemble_n_tilde(N, B, k: float, R: float) -> OperatorMatrix:
    """N~ = exp(-i(kR + pi/4)) B N B."""
    n, b = _values(N), _values(B)
    _check_shapes(n, b)
    return OperatorMatrix(np.exp(-1j * (k * R + np.pi / 4)) * (b @ n @ b), "N_tilde")


def assemble_f_tilde(F, B) -> OperatorMatrix:
    """F~ = B F_L B (no trapezoid weight, as for N~)."""
    f, b = _values(F), _values(B)
    _check_shapes(f, b)
    return OperatorMatrix(b @ f @ b, "F_tilde")


def hermitian_split(A):
    """(Re A, Im A) = ((A + A^*)/2, (A - A^*)/(2i))."""
    a = _values(A)
    ah = a.conj().T
    return OperatorMatrix((a + ah) / 2), OperatorMatrix((a - ah) / 2j)


def matrix_abs(A) -> OperatorMatrix:
    """|A| = V |Lambda| V^* for Hermitian A."""
    H = _hermitize(_values(A))
    lam, V = _eigh(H)
    out = (V * np.abs(lam)) @ V.conj().T
    return OperatorMatrix((out + out.conj().T) / 2)


def sharp(A) -> SpectralOperator:
    """A_# = |Re A| + |Im A| together with its eigensystem."""
    re, im = hermitian_split(A)
    return SpectralOperator.from_matrix(matrix_abs(re).values + matrix_abs(im).values)


def spectral_norm(A) -> float:
    a = _values(A)
    return float(np.linalg.norm(a, 2)) if a.size else 0.0
