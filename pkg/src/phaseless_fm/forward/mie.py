"""Separation-of-variables far fields for an origin-centred disc.

With u^s = sum_m i^m b_m H_m(kr) e^{im(theta - theta_d)} and the far-field
normalization u^s ~ e^{i pi/4}/sqrt(8 pi k) e^{ikr}/sqrt(r) u^inf, the far
field is u^inf = -4i sum_m b_m e^{im(theta_x - theta_d)}.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import special


def _coefficients(k, a, condition, n_index, orders):
    ka = k * a
    J = special.jv(orders, ka)
    dJ = special.jvp(orders, ka)
    H = special.hankel1(orders, ka)
    dH = special.h1vp(orders, ka)
    if condition == "dirichlet":
        return -J / H
    if condition == "neumann":
        return -dJ / dH
    if condition == "transmission":
        kn = k * np.sqrt(complex(n_index))
        Jn = special.jv(orders, kn * a)
        dJn = special.jvp(orders, kn * a)
        return (kn * dJn * J - k * dJ * Jn) / (k * dH * Jn - kn * dJn * H)
    raise ValueError(f"unknown condition {condition!r}")


def analytic_circle_farfield(k, a, condition, xhat, d, n_index=1.0):
    """Far-field pattern u^inf(xhat, d) of a disc of radius ``a`` at the origin.

    ``condition`` is ``"dirichlet"``, ``"neumann"`` or ``"transmission"``
    (penetrable disc with refractive index ``n_index``).  ``xhat`` and ``d``
    are unit vectors or arrays of them and broadcast against each other.
    """
    if k * a > 200:
        raise ValueError("ka must not exceed 200")
    xhat = np.asarray(xhat, dtype=float)
    d = np.asarray(d, dtype=float)
    angle = np.arctan2(xhat[..., 1], xhat[..., 0]) - np.arctan2(d[..., 1], d[..., 0])
    scale = k * a
    if condition == "transmission":
        scale = max(scale, abs(k * np.sqrt(complex(n_index))) * a)
    order = math.ceil(scale) + 40
    m = np.arange(-order, order + 1)
    b = _coefficients(k, a, condition, n_index, m)
    tail = np.abs(b[[0, -1]]).max()
    if tail > 1e-14:
        warnings.warn(f"circle series truncated with tail term {tail:.1e}", RuntimeWarning, stacklevel=2)
    series = np.exp(1j * np.multiply.outer(angle, m)) @ b
    return -4j * series
