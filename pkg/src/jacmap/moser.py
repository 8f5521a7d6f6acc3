"""Moser transport: flow one unit-mass area form into another.

The time-dependent field is built from a primitive of the form difference.
The primitive comes from a mimetic Poisson solve on the chart cylinder:
spectral in theta, second-order staggered differences in r, Neumann
closure for the angular mean at the poles and Dirichlet for the higher
modes.  The discrete exterior derivative of the returned one-form
reproduces the input density to solver precision by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from ._util import TWO_PI, angdiff, chart_dist, interp_grid, window, wrap_angle
from .sphere_geom import AreaForm, Grid, integrate, quadrature_mass
from .maps import SampledMap, SphereMap, pullback

RHO_FLOOR = 1e-12


class TransportError(RuntimeError):
    pass


@dataclass
class OneForm:
    """alpha = a dr + b dtheta on the chart grid.

    a lives on the nodes; b is staggered: b_rad[0] and b_rad[-1] sit on the
    pole rows, the rows between at the radial half-points.  b_nodes gives a
    second-order collocation of b at the nodes for field evaluation.
    """

    grid: Grid
    a: np.ndarray
    b_rad: np.ndarray

    def __post_init__(self):
        g = self.grid
        self.a = np.asarray(self.a, dtype=float)
        self.b_rad = np.asarray(self.b_rad, dtype=float)
        if self.a.shape != (g.n_r, g.n_theta):
            raise ValueError("a shape does not match grid")
        if self.b_rad.shape != (g.n_r + 1, g.n_theta):
            raise ValueError("b_rad must have n_r + 1 rows")
        if not (np.all(np.isfinite(self.a)) and np.all(np.isfinite(self.b_rad))):
            raise ValueError("one-form components must be finite")

    def b_nodes(self):
        b = np.empty_like(self.a)
        b[0] = self.b_rad[0]
        b[-1] = self.b_rad[-1]
        b[1:-1] = 0.5 * (self.b_rad[1:-2] + self.b_rad[2:-1])
        return b


def _spectral_dtheta(field):
    n = field.shape[1]
    k = np.fft.rfftfreq(n, d=1.0 / n)
    return np.fft.irfft(np.fft.rfft(field, axis=1) * (1j * k), n=n, axis=1)


def discrete_curl(alpha: OneForm) -> np.ndarray:
    """Density of d(alpha) under the staggered-r / spectral-theta calculus."""
    g = alpha.grid
    dr = g.dr
    out = np.empty((g.n_r, g.n_theta))
    out[0] = (alpha.b_rad[1] - alpha.b_rad[0]) / (0.5 * dr)
    out[-1] = (alpha.b_rad[-1] - alpha.b_rad[-2]) / (0.5 * dr)
    out[1:-1] = (alpha.b_rad[2:-1] - alpha.b_rad[1:-2]) / dr
    return out - _spectral_dtheta(alpha.a)


def solve_primitive(diff: AreaForm, correct_poles: bool = True) -> OneForm:
    """One-form alpha with discrete d(alpha) equal to the given density.

    Requires zero total mass (exactness).  With correct_poles, a curl-free
    collar term is subtracted near each pole so that b vanishes on the pole
    rows and the transport field -b/rho stays bounded there.
    """
    g = diff.grid
    if abs(diff.total) >= 1e-8:
        raise ValueError(f"form with mass {diff.total:.3e} is not exact")
    n_r, n_t = g.n_r, g.n_theta
    dr = g.dr
    dens = np.asarray(diff.density, dtype=float)

    dhat = np.fft.rfft(dens, axis=1)
    n_modes = dhat.shape[1]
    u = np.zeros((n_r, n_modes), dtype=complex)
    b_rad = np.zeros((n_r + 1, n_t))

    # angular mean: explicit flux integration with no flux at the poles
    w_r = g.radial_weights()
    d0 = dhat[:, 0].real / n_t
    d0 = d0 - (w_r @ d0) / w_r.sum()  # enforce exact discrete compatibility
    flux = np.zeros(n_r + 1)
    flux[1] = 0.5 * dr * d0[0]
    for i in range(1, n_r - 1):
        flux[i + 1] = flux[i] + dr * d0[i]
    # the top half-cell closes exactly because d0 sums to zero

    # higher modes: tridiagonal Helmholtz with Dirichlet pole rows
    interior = n_r - 2
    for idx in range(1, n_modes):
        kk = idx
        ab = np.zeros((3, interior))
        ab[0, 1:] = 1.0 / dr**2
        ab[1, :] = -2.0 / dr**2 - kk**2
        ab[2, :-1] = 1.0 / dr**2
        u[1:-1, idx] = solve_banded((1, 1), ab, dhat[1:-1, idx])

    # assemble b on the staggered rows: spectral part plus the mean flux
    b_half_hat = (u[1:] - u[:-1]) / dr           # (n_r-1, modes)
    b_half_hat[:, 0] = 0.0
    b_rad[1:-1] = np.fft.irfft(b_half_hat, n=n_t, axis=1) + flux[1:-1][:, None]

    # pole rows of b from the pole-row curl equations
    a_hat = -1j * np.arange(n_modes)[None, :] * u
    a = np.fft.irfft(a_hat, n=n_t, axis=1)
    da_pole0 = _spectral_dtheta(a[[0]])[0]
    da_pole1 = _spectral_dtheta(a[[-1]])[0]
    b_rad[0] = b_rad[1] - 0.5 * dr * (dens[0] + da_pole0)
    b_rad[-1] = b_rad[-2] + 0.5 * dr * (dens[-1] + da_pole1)

    alpha = OneForm(g, a, b_rad)
    if correct_poles:
        _subtract_pole_collar(alpha)
    return alpha


def _subtract_pole_collar(alpha: OneForm):
    """Remove a discretely curl-free collar term so b = 0 on the pole rows.

    The correction is w(r) * P(theta) on the b rows paired with
    V(r) * R(theta) on a, where R is the spectral antiderivative of P and V
    the staggered difference of w; its discrete curl cancels exactly.
    """
    g = alpha.grid
    dr = g.dr
    r_b = np.concatenate([[0.0], g.r[:-1] + 0.5 * dr, [2.0]])
    for pole in (0, 1):
        prof = alpha.b_rad[0 if pole == 0 else -1].copy()
        prof -= prof.mean()
        if np.max(np.abs(prof)) == 0.0:
            continue
        dist = r_b if pole == 0 else 2.0 - r_b
        w = window(dist, 0.05, 0.35)
        anti = _spectral_antiderivative(prof)
        alpha.b_rad -= w[:, None] * prof[None, :]
        v = np.empty(g.n_r)
        v[0] = (w[1] - w[0]) / (0.5 * dr)
        v[-1] = (w[-1] - w[-2]) / (0.5 * dr)
        v[1:-1] = (w[2:-1] - w[1:-2]) / dr
        alpha.a -= v[:, None] * anti[None, :]


def _spectral_antiderivative(values):
    n = values.size
    coef = np.fft.rfft(values)
    k = np.fft.rfftfreq(n, d=1.0 / n)
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(k == 0, 0.0, coef / (1j * k))
    return np.fft.irfft(coef, n=n)


@dataclass
class DiffeoPath:
    """Time-indexed family of diffeomorphisms from the transport flow."""

    times: np.ndarray
    maps: list
    residuals: np.ndarray
    inverse_residual: np.ndarray
    grid: Grid

    @property
    def endpoint(self) -> SphereMap:
        return self.maps[-1]

    def export(self, directory, prefix="transport"):
        import json
        import os
        os.makedirs(directory, exist_ok=True)
        for t, m in zip(self.times, self.maps):
            m.to_csv(os.path.join(directory, f"{prefix}_t{t:.4f}.csv"), self.grid)
        summary = {
            "times": [float(t) for t in self.times],
            "residuals": [float(x) for x in self.residuals],
            "inverse_residual": [float(x) for x in self.inverse_residual],
        }
        path = os.path.join(directory, f"{prefix}_residuals.json")
        with open(path, "w") as fh:
            json.dump(summary, fh, indent=2)
        return path


def _density_at(form: AreaForm, r, theta, order=1):
    if form.density_fn is not None:
        return np.asarray(form.density_fn(r, theta), dtype=float)
    g = form.grid
    return interp_grid(form.density, g.r_index(r), g.theta_index(theta), order=order)


class _TransportField:
    """X_t with contraction X_t . nu_t = -alpha along the linear path."""

    def __init__(self, alpha: OneForm, nu0: AreaForm, nu1: AreaForm):
        self.a_nodes = alpha.a
        self.b_nodes = alpha.b_nodes()
        self.grid = alpha.grid
        self.nu0 = nu0
        self.nu1 = nu1

    def __call__(self, t, r, theta):
        g = self.grid
        ri = g.r_index(r)
        ti = g.theta_index(theta)
        a = interp_grid(self.a_nodes, ri, ti, order=3)
        b = interp_grid(self.b_nodes, ri, ti, order=3)
        rho = (1.0 - t) * _density_at(self.nu0, r, theta) \
            + t * _density_at(self.nu1, r, theta)
        safe = np.abs(rho) > RHO_FLOOR
        inv = np.where(safe, 1.0 / np.where(safe, rho, 1.0), 0.0)
        return -b * inv, a * inv


def _rk4(fieldfn, t0, dt, r, theta):
    k1r, k1t = fieldfn(t0, r, theta)
    k2r, k2t = fieldfn(t0 + 0.5 * dt, r + 0.5 * dt * k1r, theta + 0.5 * dt * k1t)
    k3r, k3t = fieldfn(t0 + 0.5 * dt, r + 0.5 * dt * k2r, theta + 0.5 * dt * k2t)
    k4r, k4t = fieldfn(t0 + dt, r + dt * k3r, theta + dt * k3t)
    r_new = r + dt / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r)
    t_new = theta + dt / 6.0 * (k1t + 2 * k2t + 2 * k3t + k4t)
    return np.clip(r_new, 0.0, 2.0), t_new


def transport_residual(m: SphereMap, nu0: AreaForm, target_density) -> float:
    """L1 distance between the pullback of nu0 through m and a target density."""
    pb = pullback(m, nu0)
    return quadrature_mass(nu0.grid, np.abs(pb.density - target_density))


def moser_flow(nu0: AreaForm, nu1: AreaForm, steps: int = 64,
               store_every: int = None, cond_bound: float = 1e6,
               mass_tol: float = 5e-5) -> DiffeoPath:
    """Diffeomorphism family s_t with s_t* nu0 = (1-t) nu0 + t nu1 and s_0 = id.

    Classical transport: the forward flow of X_t pulls nu_t back to nu0, so
    its inverse family realizes the stated convention; the inverse is built
    incrementally by backward steps composed through cubic interpolation.
    The forward trajectories are integrated alongside and used to report a
    bijection residual per stored time.

    mass_tol bounds how far the grid masses may sit from 1; it must absorb
    the quadrature error of unit-mass forms on the working grid.
    """
    g = nu0.grid
    if nu1.grid is not g and (nu1.grid.n_r, nu1.grid.n_theta) != (g.n_r, g.n_theta):
        raise ValueError("forms must share a grid")
    for nu in (nu0, nu1):
        if abs(nu.total - 1.0) > mass_tol:
            raise TransportError(
                f"form mass {nu.total:.8f} is not 1 within {mass_tol:g}")
        if np.min(nu.density[1:-1]) <= 0.0:
            raise TransportError("form density must be positive off the poles")

    lo = np.minimum(nu0.density[1:-1], nu1.density[1:-1])
    if np.max(np.abs(nu1.density - nu0.density)) / np.min(lo) > cond_bound:
        raise TransportError("density ratio exceeds the conditioning bound")

    # renormalize the difference so the primitive solve sees an exact form
    scale = nu0.total / nu1.total
    diff = AreaForm(g, nu1.density * scale - nu0.density)
    alpha = solve_primitive(diff)
    fieldfn = _TransportField(alpha, nu0, nu1)

    if store_every is None:
        store_every = max(1, steps // 8)
    dt = 1.0 / steps
    rr, tt = g.mesh()
    disp_r = np.zeros_like(rr)
    disp_t = np.zeros_like(rr)
    fwd_r = rr.copy()
    fwd_t = tt.copy()

    times = [0.0]
    maps = [SampledMap.identity(g)]
    stored_fwd = [(fwd_r.copy(), fwd_t.copy())]

    for j in range(steps):
        t_lo = j * dt
        t_hi = (j + 1) * dt
        # backward step of the new time slice, composed into the inverse map
        zr, zt = _rk4(fieldfn, t_hi, -dt, rr, tt)
        ri = g.r_index(zr)
        ti = g.theta_index(zt)
        dr_prev = interp_grid(disp_r, ri, ti, order=3)
        dt_prev = interp_grid(disp_t, ri, ti, order=3)
        disp_r = dr_prev + (zr - rr)
        disp_t = dt_prev + (zt - tt)
        # forward trajectories, pointwise
        fwd_r, fwd_t = _rk4(fieldfn, t_lo, dt, fwd_r, fwd_t)
        if (j + 1) % store_every == 0 or j == steps - 1:
            times.append(t_hi)
            maps.append(SampledMap(g, disp_r.copy(), disp_t.copy()))
            stored_fwd.append((fwd_r.copy(), fwd_t.copy()))

    times = np.asarray(times)
    residuals = np.empty(times.size)
    inv_res = np.empty(times.size)
    for i, (t, m, (fr, ft)) in enumerate(zip(times, maps, stored_fwd)):
        target = (1.0 - t) * nu0.density + t * nu1.density * scale
        residuals[i] = transport_residual(m, nu0, target)
        br, bt = m.eval(fr, ft)
        inv_res[i] = float(np.max(chart_dist(br, bt, rr, tt)))
    return DiffeoPath(times, maps, residuals, inv_res, g)


def verify_transport(path: DiffeoPath, nu0: AreaForm, nu1: AreaForm) -> float:
    """Max over the stored times of the L1 transport residual."""
    worst = 0.0
    for t, m in zip(path.times, path.maps):
        target = (1.0 - t) * nu0.density + t * nu1.density
        worst = max(worst, transport_residual(m, nu0, target))
    return worst
