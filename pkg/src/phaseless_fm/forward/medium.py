"""Lippmann-Schwinger solver for penetrable inclusions.

The total field solves u = u^i + k^2 \\int Phi(., y) m(y) u(y) dy with
m = n - 1.  Collocation at the centres of a uniform square-cell grid with
cell-averaged contrast turns the volume integral into a discrete
convolution; the singular self-cell integral is replaced by the closed-form
integral of Phi over the disc of equal area.  The convolution is applied
with zero-padded FFTs and the system is solved with GMRES.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse.linalg as spla
from scipy import special
from scipy.spatial import cKDTree

from ..geometry import points_in_polygon

from .nystrom import SolverError
from .scene import Medium, ScatteringScene

SUBSAMPLES = 8


def disc_integral(k: float, h: float) -> complex:
    """\\int Phi(0, y) dy over the disc of area h^2."""
    rho = h / np.sqrt(np.pi)
    return 1j * np.pi / (2 * k) * rho * special.hankel1(1, k * rho) - 1 / k**2


class VolumeGrid:
    """Cell-centred square grid covering all penetrable obstacles."""

    def __init__(self, scene: ScatteringScene, cells: int):
        lo = np.full(2, np.inf)
        hi = np.full(2, -np.inf)
        for ob in scene.obstacles:
            poly = ob.curve.polyline(2048)
            lo = np.minimum(lo, poly.min(axis=0))
            hi = np.maximum(hi, poly.max(axis=0))
        width = float((hi - lo).max())
        centre = (lo + hi) / 2
        self.cells = cells
        self.h = width / cells
        self.origin = centre - width / 2
        c = self.origin[:, None] + self.h * (np.arange(cells) + 0.5)[None, :]
        gx, gy = np.meshgrid(c[0], c[1])
        self.points = np.stack([gx.ravel(), gy.ravel()], -1)
        self.contrast = self._cell_contrast(scene)

    def _cell_contrast(self, scene):
        """Cell averages of m = n - 1.

        Cells cut by a boundary are averaged over SUBSAMPLES^2 points; all
        others take the value at their centre.
        """
        s = (np.arange(SUBSAMPLES) + 0.5) / SUBSAMPLES - 0.5
        ox, oy = np.meshgrid(s, s)
        offsets = self.h * np.stack([ox.ravel(), oy.ravel()], -1)
        m = np.zeros(self.points.shape[0], dtype=complex)
        for ob in scene.obstacles:
            curve = ob.curve
            poly = curve.polyline(4096)
            dist = np.hypot(*(self.points - np.asarray(curve.center)).T)
            cand = np.nonzero(dist <= curve.radius + self.h)[0]
            if not cand.size:
                continue
            pts = self.points[cand]
            gap, _ = cKDTree(poly).query(pts)
            cut = gap < self.h
            inside = curve.contains(pts[~cut])
            whole = cand[~cut][inside]
            m[whole] += ob.condition.index(self.points[whole]) - 1.0
            cells = cand[cut]
            sub = (self.points[cells][:, None, :] + offsets[None, :, :]).reshape(-1, 2)
            hit = points_in_polygon(sub, poly).reshape(cells.size, -1)
            vals = (ob.condition.index(sub).reshape(cells.size, -1) - 1.0) * hit
            m[cells] += vals.mean(axis=1)
        return m


class MediumSolver:
    """Solves the Lippmann-Schwinger equation for each incident direction."""

    def __init__(self, scene: ScatteringScene, cells: int | None = None, tol: float = 1e-10):
        if not scene.is_medium or not all(isinstance(ob.condition, Medium) for ob in scene.obstacles):
            raise SolverError("MediumSolver needs a scene made of penetrable obstacles")
        self.scene = scene
        self.k = float(scene.k)
        self.tol = tol
        self.grid = VolumeGrid(scene, cells or scene.medium_grid)
        self.support = np.nonzero(self.grid.contrast != 0)[0]
        self._build_kernel()

    def _build_kernel(self):
        g, k, h = self.grid, self.k, self.grid.h
        N = g.cells
        idx = np.arange(-N + 1, N)
        ix, iy = np.meshgrid(idx, idx)
        r = h * np.hypot(ix, iy)
        with np.errstate(invalid="ignore", divide="ignore"):
            kern = 0.25j * special.hankel1(0, k * np.where(r == 0, 1.0, r)) * h**2
        kern[N - 1, N - 1] = disc_integral(k, h)
        size = 2 * N - 1
        self._fft_shape = (size + N - 1, size + N - 1)
        self._kernel_hat = np.fft.fft2(k**2 * kern, self._fft_shape)

    def _convolve(self, v):
        """k^2 * sum_j K(x_i - y_j) v_j over the grid."""
        N = self.grid.cells
        full = np.fft.ifft2(self._kernel_hat * np.fft.fft2(v.reshape(N, N), self._fft_shape))
        return full[N - 1:2 * N - 1, N - 1:2 * N - 1].ravel()

    def total_field(self, directions) -> np.ndarray:
        """Grid values of u, shape (n_cells, n_directions)."""
        d = np.atleast_2d(np.asarray(directions, dtype=float))
        m = self.grid.contrast
        n = m.size
        op = spla.LinearOperator((n, n), matvec=lambda u: u - self._convolve(m * u), dtype=complex)
        out = np.empty((n, d.shape[0]), dtype=complex)
        for j, dj in enumerate(d):
            ui = np.exp(1j * self.k * self.grid.points @ dj)
            if not self.support.size:
                out[:, j] = ui
                continue
            u, info = spla.gmres(op, ui, x0=ui, rtol=self.tol, atol=0.0, restart=200, maxiter=50)
            resid = np.linalg.norm(op.matvec(u) - ui) / np.linalg.norm(ui)
            if info != 0 or resid > 10 * self.tol:
                raise SolverError(
                    f"Lippmann-Schwinger GMRES did not converge (info={info}, relative residual {resid:.2e})"
                )
            out[:, j] = u
        return out

    def sources(self, u) -> np.ndarray:
        """Quadrature-weighted volume sources k^2 m u h^2 on the support."""
        g = self.grid
        return self.k**2 * (g.contrast[self.support, None] * u[self.support]) * g.h**2

    def scattered(self, points, u) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        y = self.grid.points[self.support]
        src = self.sources(u)
        out = np.empty((pts.shape[0], u.shape[1]), dtype=complex)
        step = max(1, 4_000_000 // max(y.shape[0], 1))
        for lo in range(0, pts.shape[0], step):
            p = pts[lo:lo + step]
            r = np.hypot(p[:, None, 0] - y[None, :, 0], p[:, None, 1] - y[None, :, 1])
            near = r < 0.5 * self.grid.h
            r = np.where(near, 1.0, r)
            kern = 0.25j * special.hankel1(0, self.k * r)
            # points at a cell centre take the self-cell average
            kern = np.where(near, disc_integral(self.k, self.grid.h) / self.grid.h**2, kern)
            out[lo:lo + step] = kern @ src
        return out

    def farfield_matrix(self, xhat) -> np.ndarray:
        xh = np.atleast_2d(np.asarray(xhat, dtype=float))
        y = self.grid.points[self.support]
        return np.exp(-1j * self.k * xh @ y.T)

    def far_field(self, xhat, u) -> np.ndarray:
        return self.farfield_matrix(xhat) @ self.sources(u)
