"""Nystrom solver for sound-soft and impedance obstacles.

Integral formulations
---------------------
Sound-soft curves carry a combined potential

    u^s = DL(phi) - i*eta*SL(phi),      eta = k,

whose boundary trace gives the second-kind equation
phi + 2K phi - 2i*eta S phi = -2 u^i.  Impedance (and sound-hard) curves
carry a single layer u^s = SL(phi) with

    -phi + 2K' phi + 2 rho S phi = -2 (d/dnu + rho) u^i.

Self-interaction blocks split every kernel as
M(t, s) = M1(t, s) log(4 sin^2((t - s)/2)) + M2(t, s) and integrate the
logarithmic part with the trigonometric-interpolation weights R_j(t)
(Kussmaul-Martensen), the rest with the trapezoid rule.  Blocks between
distinct curves are smooth and use the trapezoid rule directly.
"""

from __future__ import annotations

import logging
import warnings

import numpy as np
import scipy.linalg
from scipy import special

from .scene import Dirichlet, Impedance, ScatteringScene

logger = logging.getLogger(__name__)

EULER_GAMMA = 0.57721566490153286061


class SolverError(RuntimeError):
    """The discrete linear system could not be solved reliably."""


class AccuracyWarning(UserWarning):
    """Discretization is likely too coarse, or an evaluation point too close."""


def log_weights(n_nodes: int) -> np.ndarray:
    """Kussmaul-Martensen weights as a circulant matrix.

    For 2n equispaced nodes t_j = pi*j/n,
    R_j(t) = -(2pi/n) sum_{m=1}^{n-1} cos(m(t - t_j))/m - (pi/n^2) cos(n(t - t_j)).
    """
    n = n_nodes // 2
    d = np.pi * np.arange(n_nodes) / n
    m = np.arange(1, n)
    row = -(2 * np.pi / n) * (np.cos(np.outer(d, m)) / m).sum(axis=1) - (np.pi / n**2) * np.cos(n * d)
    idx = (np.arange(n_nodes)[None, :] - np.arange(n_nodes)[:, None]) % n_nodes
    return row[idx]


class _Panel:
    """Nodes of one discretized curve."""

    def __init__(self, obstacle, k):
        curve = obstacle.curve
        self.obstacle = obstacle
        self.condition = obstacle.condition
        self.n = curve.quadrature_count
        self.t, self.x, self.dx, self.ddx = curve.nodes()
        self.sign = curve.orientation
        self.speed = np.hypot(self.dx[:, 0], self.dx[:, 1])
        # unit outward normal
        self.nu = self.sign * np.stack([self.dx[:, 1], -self.dx[:, 0]], -1) / self.speed[:, None]
        self.weights = (2 * np.pi / self.n) * self.speed
        self.double = isinstance(self.condition, Dirichlet)
        if isinstance(self.condition, Impedance):
            self.rho = self.condition(self.t)
        else:
            self.rho = None
        ppw = self.n * 2 * np.pi / (k * curve.perimeter)
        if ppw < 10:
            warnings.warn(
                f"{curve.kind}: {ppw:.1f} quadrature points per wavelength (< 10)", AccuracyWarning, stacklevel=4
            )


def _pairwise(targets, sources):
    diff = targets[:, None, :] - sources[None, :, :]
    r = np.hypot(diff[..., 0], diff[..., 1])
    return diff, r


def _self_block(p: _Panel, k: float, eta: float, R: np.ndarray) -> np.ndarray:
    """Doubled self-interaction operator of one panel, including the identity term."""
    n = p.n
    tdiff = p.t[:, None] - p.t[None, :]
    diff, r = _pairwise(p.x, p.x)
    eye = np.eye(n, dtype=bool)
    r_safe = np.where(eye, 1.0, r)
    kr = k * r_safe
    logterm = np.log(4 * np.sin(np.where(eye, 1.0, tdiff) / 2) ** 2)
    speed_s = p.speed[None, :]
    J0, J1 = special.j0(kr), special.j1(kr)
    H0, H1 = special.hankel1(0, kr), special.hankel1(1, kr)

    # single layer, doubled: M = (i/2) H0 |x'(s)|
    M = 0.5j * H0 * speed_s
    M1 = -J0 * speed_s / (2 * np.pi)
    M2 = M - M1 * logterm
    M1[eye] = -p.speed / (2 * np.pi)
    M2[eye] = (0.5j - EULER_GAMMA / np.pi - np.log(k * p.speed / 2) / np.pi) * p.speed
    S = R * M1 + (np.pi / (n // 2)) * M2

    curvature_term = (p.dx[:, 1] * p.ddx[:, 0] - p.dx[:, 0] * p.ddx[:, 1]) * p.sign / (2 * np.pi * p.speed**2)
    if p.double:
        # double layer, doubled: L = (ik/2) H1 (x(t)-x(s)).nu(s) |x'(s)| / r
        proj = (diff * p.nu[None, :, :]).sum(-1) * speed_s / r_safe
        L = 0.5j * k * H1 * proj
        L1 = -k / (2 * np.pi) * J1 * proj
        L2 = L - L1 * logterm
        L1[eye] = 0.0
        L2[eye] = curvature_term
        K = R * L1 + (np.pi / (n // 2)) * L2
        return np.eye(n) + K - 1j * eta * S
    # adjoint double layer, doubled: L' = -(ik/2) H1 (x(t)-x(s)).nu(t) |x'(s)| / r
    proj = (diff * p.nu[:, None, :]).sum(-1) * speed_s / r_safe
    Lp = -0.5j * k * H1 * proj
    Lp1 = k / (2 * np.pi) * J1 * proj
    Lp2 = Lp - Lp1 * logterm
    Lp1[eye] = 0.0
    Lp2[eye] = curvature_term
    Kp = R * Lp1 + (np.pi / (n // 2)) * Lp2
    return -np.eye(n) + Kp + p.rho[:, None] * S


def _field_kernels(targets, src: _Panel, k: float, eta: float, gradient: bool = False):
    """Potential generated at ``targets`` by unit nodal densities on ``src``.

    Returns the (n_targets, n_src) matrix mapping densities to u^s, already
    including quadrature weights, and optionally the two gradient components.
    """
    diff, r = _pairwise(targets, src.x)
    kr = k * r
    H0, H1 = special.hankel1(0, kr), special.hankel1(1, kr)
    w = src.weights[None, :]
    if src.double:
        proj = (diff * src.nu[None, :, :]).sum(-1) / r
        val = (0.25j * k * H1 * proj - 1j * eta * 0.25j * H0) * w
    else:
        val = 0.25j * H0 * w
    if not gradient:
        return val
    rhat = diff / r[..., None]
    # grad_x Phi = -(ik/4) H1(kr) rhat
    grad_sl = -0.25j * k * H1[..., None] * rhat
    if src.double:
        # grad_x of (ik/4) H1(kr) (x-y).nu / r
        f = H1 / r
        fprime = (kr * H0 - 2 * H1) / r**2
        dot = (diff * src.nu[None, :, :]).sum(-1)
        grad_dl = 0.25j * k * (f[..., None] * src.nu[None, :, :] + (fprime * dot / r)[..., None] * diff)
        grad = (grad_dl - 1j * eta * grad_sl) * w[..., None]
    else:
        grad = grad_sl * w[..., None]
    return val, grad[..., 0], grad[..., 1]


class BoundarySolver:
    """Assembles and LU-factors the coupled boundary system of a scene once.

    ``densities(directions)`` then solves for any number of incident plane
    waves at the cost of triangular solves.
    """

    def __init__(self, scene: ScatteringScene, eta: float | None = None):
        if scene.is_medium:
            raise SolverError("BoundarySolver handles impenetrable obstacles only")
        self.scene = scene
        self.k = float(scene.k)
        self.eta = self.k if eta is None else float(eta)
        self.panels = [_Panel(ob, self.k) for ob in scene.obstacles]
        self.offsets = np.cumsum([0] + [p.n for p in self.panels])
        self.size = int(self.offsets[-1])
        if self.size:
            self._factor()

    def _factor(self):
        k, eta = self.k, self.eta
        A = np.empty((self.size, self.size), dtype=complex)
        weight_cache = {}
        for a, pa in enumerate(self.panels):
            ra = slice(self.offsets[a], self.offsets[a + 1])
            for b, pb in enumerate(self.panels):
                rb = slice(self.offsets[b], self.offsets[b + 1])
                if a == b:
                    if pa.n not in weight_cache:
                        weight_cache[pa.n] = log_weights(pa.n)
                    A[ra, ra] = _self_block(pa, k, eta, weight_cache[pa.n])
                    continue
                if pa.double:
                    A[ra, rb] = 2 * _field_kernels(pa.x, pb, k, eta)
                else:
                    val, gx, gy = _field_kernels(pa.x, pb, k, eta, gradient=True)
                    dn = gx * pa.nu[:, :1] + gy * pa.nu[:, 1:]
                    A[ra, rb] = 2 * (dn + pa.rho[:, None] * val)
        if not np.all(np.isfinite(A)):
            raise SolverError("non-finite entries in the boundary system")
        self.matrix = A
        try:
            self._lu = scipy.linalg.lu_factor(A, check_finite=False)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SolverError(f"boundary system factorization failed: {exc}") from exc
        diag = np.abs(np.diag(self._lu[0]))
        if diag.min() < 1e-13 * diag.max():
            raise SolverError("boundary system is numerically singular (irregular frequency?)")

    def rhs(self, directions) -> np.ndarray:
        d = np.atleast_2d(np.asarray(directions, dtype=float))
        k = self.k
        b = np.empty((self.size, d.shape[0]), dtype=complex)
        for a, p in enumerate(self.panels):
            rows = slice(self.offsets[a], self.offsets[a + 1])
            ui = np.exp(1j * k * p.x @ d.T)
            if p.double:
                b[rows] = -2 * ui
            else:
                dn = 1j * k * (p.nu @ d.T) * ui
                b[rows] = -2 * (dn + p.rho[:, None] * ui)
        return b

    def densities(self, directions) -> np.ndarray:
        """Nodal densities, shape (size, n_directions)."""
        d = np.atleast_2d(np.asarray(directions, dtype=float))
        if not self.size:
            return np.zeros((0, d.shape[0]), dtype=complex)
        b = self.rhs(d)
        phi = scipy.linalg.lu_solve(self._lu, b, check_finite=False)
        resid = np.abs(self.matrix @ phi - b).max() / max(np.abs(b).max(), 1e-300)
        if not np.isfinite(resid) or resid > 1e-10:
            raise SolverError(f"boundary solve residual {resid:.2e} too large")
        self.last_residual = float(resid)
        return phi

    def _check_distance(self, points):
        for p in self.panels:
            h = p.obstacle.curve.perimeter / p.n
            _, r = _pairwise(points, p.x)
            near = r.min(axis=1) < 2 * np.pi * h
            if near.any():
                warnings.warn(
                    f"{int(near.sum())} evaluation point(s) within {2 * np.pi * h:.3g} of the boundary; "
                    "trapezoid evaluation loses accuracy there",
                    AccuracyWarning,
                    stacklevel=3,
                )
                return

    def evaluation_matrix(self, points, check: bool = True) -> np.ndarray:
        """Matrix mapping nodal densities to u^s at ``points``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if check:
            self._check_distance(pts)
        blocks = [_field_kernels(pts, p, self.k, self.eta) for p in self.panels]
        if not blocks:
            return np.zeros((pts.shape[0], 0), dtype=complex)
        return np.concatenate(blocks, axis=1)

    def scattered(self, points, phi) -> np.ndarray:
        return self.evaluation_matrix(points) @ phi

    def farfield_matrix(self, xhat) -> np.ndarray:
        """Matrix mapping nodal densities to u^infinity at directions ``xhat``."""
        xh = np.atleast_2d(np.asarray(xhat, dtype=float))
        k, eta = self.k, self.eta
        blocks = []
        for p in self.panels:
            phase = np.exp(-1j * k * xh @ p.x.T)
            if p.double:
                factor = -1j * k * (xh @ p.nu.T) - 1j * eta
            else:
                factor = 1.0
            blocks.append(factor * phase * p.weights[None, :])
        if not blocks:
            return np.zeros((xh.shape[0], 0), dtype=complex)
        return np.concatenate(blocks, axis=1)

    def far_field(self, xhat, phi) -> np.ndarray:
        return self.farfield_matrix(xhat) @ phi


def _log_weight_rows(t, nodes, n_nodes):
    n = n_nodes // 2
    d = t[:, None] - nodes[None, :]
    m = np.arange(1, n)
    cos_sum = np.cos(d[..., None] * m) @ (1.0 / m)
    return -(2 * np.pi / n) * cos_sum - (np.pi / n**2) * np.cos(n * d)


def _upsample(values, factor):
    """Trigonometric interpolation of periodic nodal values onto factor*n nodes."""
    n = values.shape[0]
    spec = np.fft.fft(values)
    fine = np.zeros(n * factor, dtype=complex)
    half = n // 2
    fine[:half] = spec[:half]
    fine[-half:] = spec[-half:]
    # split the Nyquist coefficient symmetrically
    fine[half] = spec[half] / 2
    fine[-half] = spec[half] / 2
    return np.fft.ifft(fine) * factor


def boundary_trace(solver: BoundarySolver, panel: int, t, phi, upsample: int = 4):
    """Exterior traces (u^s, du^s/dnu) at curve parameters ``t`` of one panel.

    The density is interpolated trigonometrically onto a finer grid and the
    weakly singular integrals are evaluated with log-splitting at the
    (off-node) targets, so the result is independent of the Nystrom system
    that produced ``phi``.  The normal derivative is only available on
    single-layer (impedance) panels and is None otherwise.
    """
    k, eta = solver.k, solver.eta
    t = np.atleast_1d(np.asarray(t, dtype=float))
    p = solver.panels[panel]
    curve = p.obstacle.curve
    fine_n = p.n * upsample
    ft, fx, fdx, _ = curve.nodes(fine_n)
    fspeed = np.hypot(fdx[:, 0], fdx[:, 1])
    fnu = p.sign * np.stack([fdx[:, 1], -fdx[:, 0]], -1) / fspeed[:, None]
    dens = _upsample(phi[solver.offsets[panel]:solver.offsets[panel + 1]], upsample)

    x = curve.point(t)
    nu_t = curve.normal(t)
    diff = x[:, None, :] - fx[None, :, :]
    r = np.hypot(diff[..., 0], diff[..., 1])
    kr = k * r
    logterm = np.log(4 * np.sin((t[:, None] - ft[None, :]) / 2) ** 2)
    R = _log_weight_rows(t, ft, fine_n)
    trap = 2 * np.pi / fine_n
    H0, H1 = special.hankel1(0, kr), special.hankel1(1, kr)
    J0, J1 = special.j0(kr), special.j1(kr)

    M = 0.5j * H0 * fspeed
    M1 = -J0 * fspeed / (2 * np.pi)
    S2 = (R * M1 + trap * (M - M1 * logterm)) @ dens  # 2 S phi
    # density itself at the targets, by trigonometric interpolation
    coeffs = np.fft.fft(phi[solver.offsets[panel]:solver.offsets[panel + 1]]) / p.n
    freqs = np.fft.fftfreq(p.n, 1.0 / p.n)
    dens_t = np.exp(1j * np.outer(t, freqs)) @ coeffs
    dn = None
    if p.double:
        proj = (diff * fnu[None, :, :]).sum(-1) * fspeed / r
        L = 0.5j * k * H1 * proj
        L1 = -k / (2 * np.pi) * J1 * proj
        K2 = (R * L1 + trap * (L - L1 * logterm)) @ dens
        us = 0.5 * (dens_t + K2) - 0.5j * eta * S2
    else:
        proj = (diff * nu_t[:, None, :]).sum(-1) * fspeed / r
        Lp = -0.5j * k * H1 * proj
        Lp1 = k / (2 * np.pi) * J1 * proj
        Kp2 = (R * Lp1 + trap * (Lp - Lp1 * logterm)) @ dens
        us = 0.5 * S2
        dn = -0.5 * dens_t + 0.5 * Kp2
    for b, pb in enumerate(solver.panels):
        if b == panel:
            continue
        block = phi[solver.offsets[b]:solver.offsets[b + 1]]
        val, gx, gy = _field_kernels(x, pb, k, eta, gradient=True)
        us = us + val @ block
        if dn is not None:
            dn = dn + (gx * nu_t[:, :1] + gy * nu_t[:, 1:]) @ block
    return us, dn
