"""Cylinder functions and the 2D Helmholtz fundamental solution.

The Bessel routines wrap ``scipy.special`` (AMOS / Cephes) behind a small
contract: real positive arguments, integer orders with ``|n| <= 300``, and a
``DomainError`` instead of silent NaNs.  Negative orders are mapped through
the reflection ``Z_{-n} = (-1)^n Z_n`` so callers never rely on the backend
for them.

All functions accept scalars or arrays and broadcast in the usual numpy way.
"""

from __future__ import annotations

import numpy as np
from scipy import special

MAX_ORDER = 300


class DomainError(ValueError):
    """Raised when an argument lies outside a function's supported domain."""


def _check(order, x):
    order = np.asarray(order)
    x = np.asarray(x, dtype=float)
    if not np.issubdtype(order.dtype, np.integer):
        if not np.all(np.equal(np.mod(order, 1), 0)):
            raise DomainError("order must be an integer")
        order = order.astype(np.int64)
    if np.any(np.abs(order) > MAX_ORDER):
        raise DomainError(f"|order| must not exceed {MAX_ORDER}")
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise DomainError("argument must be finite and strictly positive")
    return order, x


def _reflect(order, values):
    sign = np.where((order < 0) & (np.abs(order) % 2 == 1), -1.0, 1.0)
    return sign * values


def _scalar_or_array(value):
    if isinstance(value, np.ndarray) and value.ndim == 0:
        return value.item()
    return value


def bessel_j(order, x):
    """Bessel function of the first kind J_n(x) for integer n, x > 0."""
    order, x = _check(order, x)
    n = np.abs(order)
    return _scalar_or_array(_reflect(order, special.jv(n, x)))


def bessel_y(order, x):
    """Bessel function of the second kind Y_n(x) for integer n, x > 0."""
    order, x = _check(order, x)
    n = np.abs(order)
    return _scalar_or_array(_reflect(order, special.yv(n, x)))


def hankel1(order, x):
    """Hankel function of the first kind H^(1)_n(x) = J_n(x) + i Y_n(x)."""
    order, x = _check(order, x)
    n = np.abs(order)
    value = special.jv(n, x) + 1j * special.yv(n, x)
    return _scalar_or_array(_reflect(order, value))


def hankel1_derivative(order, x):
    """Derivative d/dx H^(1)_n(x), via H'_n = (H_{n-1} - H_{n+1}) / 2."""
    order, x = _check(order, x)
    n = np.abs(order)
    value = 0.5 * (
        special.jv(n - 1, x) - special.jv(n + 1, x)
        + 1j * (special.yv(n - 1, x) - special.yv(n + 1, x))
    )
    # d/dx Z_{-n} = (-1)^n d/dx Z_n
    return _scalar_or_array(_reflect(order, value))


def bessel_j_derivative(order, x):
    """Derivative d/dx J_n(x)."""
    order, x = _check(order, x)
    n = np.abs(order)
    value = 0.5 * (special.jv(n - 1, x) - special.jv(n + 1, x))
    return _scalar_or_array(_reflect(order, value))


def _distance(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    diff = x - y
    r = np.hypot(diff[..., 0], diff[..., 1])
    if np.any(r == 0):
        raise DomainError("fundamental solution is singular at x = y")
    return diff, r


def fundamental_solution(x, y, k):
    """Phi(x, y) = (i/4) H^(1)_0(k |x - y|).

    ``x`` and ``y`` are points (last axis of length 2) and broadcast.
    """
    if k <= 0:
        raise DomainError("wavenumber must be positive")
    _, r = _distance(x, y)
    return _scalar_or_array(0.25j * hankel1(0, k * r))


def fundamental_solution_normal_derivative(x, y, normal_at_y, k):
    """Normal derivative of Phi(x, y) with respect to y along ``normal_at_y``.

    Uses grad_y Phi = (ik/4) H^(1)_1(k r) (x - y) / r, so the result is
    (ik/4) H^(1)_1(k r) ((x - y) . nu(y)) / r.
    """
    if k <= 0:
        raise DomainError("wavenumber must be positive")
    nu = np.asarray(normal_at_y, dtype=float)
    if np.any(np.abs(np.hypot(nu[..., 0], nu[..., 1]) - 1.0) > 1e-12):
        raise DomainError("normal must be a unit vector")
    diff, r = _distance(x, y)
    proj = (diff * nu).sum(axis=-1) / r
    return _scalar_or_array(0.25j * k * hankel1(1, k * r) * proj)
