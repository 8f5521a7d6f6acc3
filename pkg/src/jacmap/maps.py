"""Self-maps of the sphere in the (r, theta) chart.

Maps come in three flavors: closed-form (analytic evaluator, usually with
an analytic Jacobian), sampled (displacement fields on a grid), and lazy
compositions.  theta outputs are taken modulo 2pi and r outputs clipped to
[0, 2]; Jacobians are 2x2 chart partials (dr'/dr, dr'/dtheta, dtheta'/dr,
dtheta'/dtheta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import TWO_PI, angdiff, interp_grid, window, wrap_angle
from .sphere_geom import AreaForm, Grid

DEFAULT_FD_STEP = 1e-4


class SphereMap:
    """Common interface: eval(r, theta) and jacobian(r, theta)."""

    analytic = False

    def eval(self, r, theta):
        raise NotImplementedError

    def jacobian(self, r, theta, step=None):
        """Chart partials (J_rr, J_rt, J_tr, J_tt); FD fallback."""
        return fd_jacobian(self, r, theta, step or DEFAULT_FD_STEP)

    def __call__(self, r, theta):
        return self.eval(r, theta)

    def to_csv(self, path, grid: Grid):
        rr, tt = grid.mesh()
        ro, to = self.eval(rr, tt)
        rows = np.column_stack([rr.ravel(), tt.ravel(), ro.ravel(), to.ravel()])
        np.savetxt(path, rows, delimiter=",",
                   header="r,theta,r_out,theta_out", comments="")


def _clipwrap(r_out, t_out):
    return np.clip(r_out, 0.0, 2.0), wrap_angle(t_out)


class AnalyticMap(SphereMap):
    analytic = True

    def __init__(self, fn, jac_fn=None, name=""):
        self._fn = fn
        self._jac = jac_fn
        self.name = name

    def eval(self, r, theta):
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        return _clipwrap(*self._fn(r, theta))

    def jacobian(self, r, theta, step=None):
        if self._jac is not None and step is None:
            r = np.asarray(r, dtype=float)
            theta = np.asarray(theta, dtype=float)
            return self._jac(r, theta)
        return fd_jacobian(self, r, theta, step or DEFAULT_FD_STEP)


def fd_jacobian(f, r, theta, step):
    """Centered differences of the evaluator; stencils clamp at the pole rows.

    theta differences are wrapped, so maps whose angular output jumps by a
    multiple of 2pi across the stencil still produce finite entries.
    """
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    h = step
    r_hi = np.minimum(r + h, 2.0)
    r_lo = np.maximum(r - h, 0.0)
    span_r = r_hi - r_lo
    ro_hi, to_hi = f.eval(r_hi, theta)
    ro_lo, to_lo = f.eval(r_lo, theta)
    j_rr = (ro_hi - ro_lo) / span_r
    j_tr = angdiff(to_hi, to_lo) / span_r
    ro_hi, to_hi = f.eval(r, theta + h)
    ro_lo, to_lo = f.eval(r, theta - h)
    j_rt = (ro_hi - ro_lo) / (2 * h)
    j_tt = angdiff(to_hi, to_lo) / (2 * h)
    return j_rr, j_rt, j_tr, j_tt


def _grid_partials(field, dr, dtheta):
    """4th-order partials of a nodal field; theta is periodic."""
    f = np.asarray(field, dtype=float)
    d_t = (8.0 * (np.roll(f, -1, 1) - np.roll(f, 1, 1))
           - (np.roll(f, -2, 1) - np.roll(f, 2, 1))) / (12.0 * dtheta)
    d_r = np.empty_like(f)
    d_r[2:-2] = (8.0 * (f[3:-1] - f[1:-3]) - (f[4:] - f[:-4])) / (12.0 * dr)
    d_r[0] = (f[1] - f[0]) / dr
    d_r[1] = (f[2] - f[0]) / (2 * dr)
    d_r[-2] = (f[-1] - f[-3]) / (2 * dr)
    d_r[-1] = (f[-1] - f[-2]) / dr
    return d_r, d_t


class SampledMap(SphereMap):
    """Map given by displacement fields on a grid.

    Stores (r_out - r) and the wrapped (theta_out - theta); both are smooth
    and small for the diffeomorphisms produced by the transport flow, which
    keeps cubic interpolation of the samples accurate.
    """

    def __init__(self, grid: Grid, disp_r, disp_theta):
        self.grid = grid
        self.disp_r = np.asarray(disp_r, dtype=float)
        self.disp_theta = np.asarray(disp_theta, dtype=float)
        for a in (self.disp_r, self.disp_theta):
            if a.shape != (grid.n_r, grid.n_theta):
                raise ValueError("displacement shape does not match grid")
            a.flags.writeable = False
        jrr, jrt = _grid_partials(self.disp_r, grid.dr, grid.dtheta)
        jtr, jtt = _grid_partials(self.disp_theta, grid.dr, grid.dtheta)
        self._jac_fields = (1.0 + jrr, jrt, jtr, 1.0 + jtt)

    @classmethod
    def identity(cls, grid: Grid):
        z = np.zeros((grid.n_r, grid.n_theta))
        return cls(grid, z, z.copy())

    def _indices(self, r, theta):
        return self.grid.r_index(r), self.grid.theta_index(theta)

    def _on_nodes(self, r, theta):
        r = np.asarray(r)
        if r.shape != (self.grid.n_r, self.grid.n_theta):
            return False
        ri, ti = self._indices(r, theta)
        return (np.abs(ri - np.rint(ri)).max() < 1e-9
                and np.abs(ti - np.rint(ti)).max() < 1e-9)

    def eval(self, r, theta):
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if self._on_nodes(r, theta):
            return _clipwrap(r + self.disp_r, theta + self.disp_theta)
        ri, ti = self._indices(r, theta)
        dr = interp_grid(self.disp_r, ri, ti, order=3)
        dt = interp_grid(self.disp_theta, ri, ti, order=3)
        return _clipwrap(r + dr, theta + dt)

    def jacobian(self, r, theta, step=None):
        if self._on_nodes(r, theta):
            return self._jac_fields
        ri, ti = self._indices(r, theta)
        return tuple(interp_grid(f, ri, ti, order=1) for f in self._jac_fields)


class ComposedMap(SphereMap):
    """Lazy composition g after f with chain-rule Jacobian."""

    def __init__(self, g, f):
        self.g = g
        self.f = f
        self.analytic = g.analytic and f.analytic

    def eval(self, r, theta):
        fr, ft = self.f.eval(r, theta)
        return self.g.eval(fr, ft)

    def jacobian(self, r, theta, step=None):
        fr, ft = self.f.eval(r, theta)
        g_rr, g_rt, g_tr, g_tt = self.g.jacobian(fr, ft, step=step)
        f_rr, f_rt, f_tr, f_tt = self.f.jacobian(r, theta, step=step)
        return (g_rr * f_rr + g_rt * f_tr,
                g_rr * f_rt + g_rt * f_tt,
                g_tr * f_rr + g_tt * f_tr,
                g_tr * f_rt + g_tt * f_tt)


def compose(g, f) -> SphereMap:
    return ComposedMap(g, f)


def identity_map() -> SphereMap:
    ones = lambda r: np.ones_like(np.asarray(r, dtype=float))
    zeros = lambda r: np.zeros_like(np.asarray(r, dtype=float))
    return AnalyticMap(lambda r, t: (r, t),
                       lambda r, t: (ones(r), zeros(r), zeros(r), ones(r)),
                       name="identity")


@dataclass(frozen=True)
class CollapseParams:
    """Smoothness exponent q and the compression shutoff profile.

    eta is monotone decreasing on [1, 2], identically 1 on [1, 1.25] and 0
    on [1.75, 2]; the default is the quintic window.  eta_prime must match
    eta (finite differences are used when a custom eta omits it).
    """

    q: int = 1
    eta: object = None
    eta_prime: object = None

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be a positive integer")
        if self.eta is None:
            object.__setattr__(self, "eta", lambda r: window(r, 1.25, 1.75))
            object.__setattr__(
                self, "eta_prime",
                lambda r: _window_prime(r, 1.25, 1.75))
        elif self.eta_prime is None:
            e = self.eta
            object.__setattr__(
                self, "eta_prime",
                lambda r, _e=e: (_e(r + 1e-6) - _e(r - 1e-6)) / 2e-6)


def _window_prime(r, lo, hi):
    s = (np.asarray(r, dtype=float) - lo) / (hi - lo)
    inside = (s > 0.0) & (s < 1.0)
    s = np.clip(s, 0.0, 1.0)
    return np.where(inside, -30.0 * s * s * (s - 1.0) ** 2 / (hi - lo), 0.0)


def fold_map(params: CollapseParams) -> SphereMap:
    """The equator fold (r, theta) -> (1 + (1-r)^(2q+2), theta).

    Sends both poles to r' = 2 and the equator to itself; each open
    hemisphere maps diffeomorphically onto the upper cap, preserving
    orientation on r > 1 and reversing it on r < 1.
    """
    m = 2 * params.q + 2

    def fn(r, t):
        return 1.0 + (1.0 - r) ** m, t

    def jac(r, t):
        z = np.zeros_like(r)
        return -m * (1.0 - r) ** (m - 1), z, z, np.ones_like(r)

    return AnalyticMap(fn, jac, name=f"fold(q={params.q})")


def vertical_compress(t: float, params: CollapseParams) -> SphereMap:
    """Radial compression r -> sqrt(r^2 - eta(r) t^2) of the upper cap.

    Identity at t = 0; at t = 1 it collapses the equator level to the
    r = 0 pole.  Where eta = 1 the map preserves the planar density r dr,
    which is what makes the collapse family's pullback stationary near the
    equator.  Below the cap, eta is frozen at 1 and the argument of the
    square root clamps at zero.
    """
    if not (0.0 <= t <= 1.0):
        raise ValueError("t must lie in [0, 1]")
    eta, eta_p = params.eta, params.eta_prime
    tsq = t * t

    def _eta_ext(r):
        return np.where(r >= 1.0, eta(np.maximum(r, 1.0)), 1.0)

    def _eta_p_ext(r):
        return np.where(r >= 1.0, eta_p(np.maximum(r, 1.0)), 0.0)

    def fn(r, th):
        arg = np.maximum(r * r - _eta_ext(r) * tsq, 0.0)
        return np.sqrt(arg), th

    def jac(r, th):
        arg = r * r - _eta_ext(r) * tsq
        root = np.sqrt(np.maximum(arg, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            d = (2.0 * r - _eta_p_ext(r) * tsq) / (2.0 * root)
        d = np.where(arg > 0.0, d, np.inf)
        z = np.zeros_like(r)
        return d, z, z, np.ones_like(r)

    return AnalyticMap(fn, jac, name=f"compress(t={t:g})")


def collapse_family(t: float, params: CollapseParams) -> SphereMap:
    """The collapsing path: compress after fold.

    Carries the equator to the circle r' = sqrt(1 - t^2) (the pole at
    t = 1) while the pullback of the reference form stays equal to the
    fold pullback on a collar around the equator, for every t.
    """
    return compose(vertical_compress(t, params), fold_map(params))


def rotation(alpha: float) -> SphereMap:
    """Rotation about the polar axis: (r, theta) -> (r, theta + alpha)."""
    def fn(r, t):
        return r, t + alpha

    def jac(r, t):
        o, z = np.ones_like(r), np.zeros_like(r)
        return o, z, z, o

    return AnalyticMap(fn, jac, name=f"rotation({alpha:g})")


def twist_angle(t: float) -> float:
    """Rotation angle applied to the upper-hemisphere branch at loop time t."""
    t = t % 1.0
    if t <= 1.0 / 3.0 or t >= 2.0 / 3.0:
        return 0.0
    return 6.0 * np.pi * (t - 1.0 / 3.0)


def twist_loop(t: float, params: CollapseParams) -> SphereMap:
    """Loop of maps: collapse, rotate one hemisphere's image a full turn, uncollapse.

    On [0, 1/3] it is the collapse path at speed 3; on [1/3, 2/3] the fully
    collapsed map with the image of the open upper hemisphere rotated by
    6pi(t - 1/3); on [2/3, 1] the collapse path run backwards.  Continuous
    in t because the rotation only switches on when the equator image is a
    pole, and closes up since 6pi * 1/3 is a full turn.
    """
    t = t % 1.0
    if t <= 1.0 / 3.0:
        return collapse_family(3.0 * t, params)
    if t >= 2.0 / 3.0:
        return collapse_family(3.0 - 3.0 * t, params)
    alpha = twist_angle(t)
    base = collapse_family(1.0, params)

    def fn(r, th):
        ro, to = base.eval(r, th)
        return ro, to + np.where(r > 1.0, alpha, 0.0)

    def jac(r, th):
        # the branch rotation is an isometry of the chart: same partials
        return base.jacobian(r, th)

    return AnalyticMap(fn, jac, name=f"twist(t={t:g})")


def jet_vanishes(f: SphereMap, order: int, tol: float,
                 step: float = 1e-2, n_samples: int = 64) -> bool:
    """Do the radial derivatives of f's r-component vanish along the equator?

    Central divided differences of (r-component) - (its value on the
    equator), orders 1..order, sampled at n_samples angles; true when every
    estimate stays below tol.
    """
    thetas = np.arange(n_samples) * (TWO_PI / n_samples)
    base, _ = f.eval(np.ones(n_samples), thetas)
    for k in range(1, order + 1):
        offsets = (np.arange(k + 1) - k / 2.0) * step
        vals = np.empty((k + 1, n_samples))
        for i, off in enumerate(offsets):
            ro, _ = f.eval(np.full(n_samples, 1.0 + off), thetas)
            vals[i] = ro - base
        est = vals
        for _ in range(k):
            est = np.diff(est, axis=0)
        if np.max(np.abs(est)) / step ** k > tol:
            return False
    return True


def pullback(f: SphereMap, form: AreaForm, grid: Grid = None,
             jacobian: str = "auto", step: float = None) -> AreaForm:
    """Pull an area form back through a map: density(f(x)) * det Df(x).

    jacobian="auto" uses the map's best Jacobian (analytic when it has
    one); "fd" forces centered differences with the given step, which ties
    the discretization error to the grid when step is the grid spacing.
    Singular Jacobian values yield zero density, not failures.
    """
    grid = grid or form.grid
    rr, tt = grid.mesh()
    ro, to = f.eval(rr, tt)
    dens = form.density_at(ro, to)
    if jacobian == "fd":
        j = fd_jacobian(f, rr, tt, step or grid.dr)
    elif jacobian == "auto":
        j = f.jacobian(rr, tt, step=step)
    else:
        raise ValueError(f"unknown jacobian mode {jacobian!r}")
    det = j[0] * j[3] - j[1] * j[2]
    out = dens * det
    out[~np.isfinite(out)] = 0.0

    fn = None
    if form.density_fn is not None and f.analytic and jacobian == "auto":
        def fn(r, theta, _f=f, _d=form.density_fn):
            ro_, to_ = _f.eval(np.asarray(r, dtype=float),
                               np.asarray(theta, dtype=float))
            jj = _f.jacobian(np.asarray(r, dtype=float),
                             np.asarray(theta, dtype=float))
            val = _d(ro_, to_) * (jj[0] * jj[3] - jj[1] * jj[2])
            return np.where(np.isfinite(val), val, 0.0)
    return AreaForm(grid, out, density_fn=fn)
