"""Shared numeric helpers: smooth windows, chart embedding, interpolation."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

TWO_PI = 2.0 * np.pi


def smoothstep(s):
    """Quintic smoothstep: 0 at s<=0, 1 at s>=1, C^2 at both ends."""
    s = np.clip(s, 0.0, 1.0)
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s))


def window(x, lo, hi):
    """1 for x <= lo, 0 for x >= hi, quintic blend in between."""
    return 1.0 - smoothstep((np.asarray(x, dtype=float) - lo) / (hi - lo))


def wrap_angle(theta):
    """Reduce angles to [0, 2pi)."""
    return np.mod(theta, TWO_PI)


def angdiff(a, b):
    """Signed difference a - b wrapped to (-pi, pi]."""
    d = np.mod(a - b + np.pi, TWO_PI) - np.pi
    return d


def embed3(r, theta):
    """Injective embedding of the (r, theta) chart into R^3.

    Pole rows collapse to single points, so distances computed on the
    embedded coordinates respect the chart degeneracy at r = 0 and r = 2.
    """
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    rho = r * (2.0 - r)
    return np.stack([rho * np.cos(theta), rho * np.sin(theta), r], axis=-1)


def chart_dist(p_r, p_t, q_r, q_t):
    """Distance between chart points through the R^3 embedding."""
    d = embed3(p_r, p_t) - embed3(q_r, q_t)
    return np.sqrt(np.sum(d * d, axis=-1))


def interp_grid(field, r_idx, t_idx, order=3):
    """Sample a (n_r, n_theta) field at fractional indices.

    theta is periodic (wrap padding), r is clamped to the grid.  order=1
    gives bilinear, order=3 cubic spline.
    """
    field = np.asarray(field, dtype=float)
    pad = 4
    padded = np.concatenate([field[:, -pad:], field, field[:, :pad]], axis=1)
    coords = np.stack([np.clip(r_idx, 0.0, field.shape[0] - 1.0), t_idx + pad])
    return ndimage.map_coordinates(padded, coords, order=order, mode="nearest")


def fourier_interp_1d(values, theta_query):
    """Evaluate the trigonometric interpolant of periodic nodal values.

    values are samples at theta_j = j*2pi/n.  Exact for band-limited data;
    used for smooth periodic profiles like the band correction factor.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    coef = np.fft.rfft(values) / n
    k = np.arange(coef.size)
    tq = np.asarray(theta_query, dtype=float)
    phases = np.exp(1j * np.outer(tq, k))
    out = phases @ (coef * np.where(k == 0, 1.0, 2.0))
    # Nyquist coefficient is real and must not be doubled for even n
    if n % 2 == 0:
        out -= phases[:, -1] * coef[-1]
    return out.real.reshape(np.shape(theta_query))


def strictly_increasing(values, rtol=0.0):
    values = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(values) > rtol))
