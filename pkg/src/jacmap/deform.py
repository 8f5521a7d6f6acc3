"""Deformation pipelines between the constrained map classes.

Four constructions: scaling a reference form inside / off the image of a
map with monotone root-finds on the exponent, the Moser retraction that
moves a map to a prescribed hemisphere mass, the band-push deformation
that makes a non-surjective map overlap itself, and the Alexander
contraction of disc homeomorphisms fixing a boundary arc.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ._util import (TWO_PI, angdiff, chart_dist, embed3, interp_grid,
                    smoothstep, window, wrap_angle)
from .sphere_geom import AreaForm, Grid, integrate, quadrature_mass, region_weights
from .maps import (AnalyticMap, ComposedMap, SphereMap, compose, fd_jacobian,
                   pullback)
from .functionals import (ArcInterval, image_mask, immerses, mask_boundary_mass,
                          missed_area, overlap)
from .moser import moser_flow, DiffeoPath
from .homeo import DiscHomeo


class BracketingError(RuntimeError):
    pass


class BandError(RuntimeError):
    pass


@dataclass
class ScalingField:
    """Nonnegative scaling exponent field and its exact zero set."""

    phi: np.ndarray
    zero_mask: np.ndarray
    lam: float

    def __post_init__(self):
        if np.min(self.phi) < 0:
            raise ValueError("scaling field must be nonnegative")


def _wrap_distance(grid: Grid, seed_mask) -> np.ndarray:
    """Chart distance from each cell to the seed cells, periodic in theta."""
    seed = np.asarray(seed_mask, dtype=bool)
    tiled = np.concatenate([seed, seed, seed], axis=1)
    dist = ndimage.distance_transform_edt(~tiled, sampling=(grid.dr, grid.dtheta))
    n = grid.n_theta
    return dist[:, n:2 * n]


def _mollify(grid: Grid, field, radius) -> np.ndarray:
    """Convolve with a C^2 radial bump of the given chart radius."""
    kr = max(1, int(np.ceil(radius / grid.dr)))
    kt = max(1, int(np.ceil(radius / grid.dtheta)))
    ir = np.arange(-kr, kr + 1) * grid.dr
    it = np.arange(-kt, kt + 1) * grid.dtheta
    s2 = (ir[:, None] ** 2 + it[None, :] ** 2) / radius ** 2
    kernel = np.maximum(1.0 - s2, 0.0) ** 3
    kernel /= kernel.sum()
    padded = np.pad(field, ((kr, kr), (0, 0)), mode="edge")
    padded = np.pad(padded, ((0, 0), (kt, kt)), mode="wrap")
    out = ndimage.convolve(padded, kernel, mode="nearest")
    return out[kr:-kr, kt:-kt]


def build_scaling_field(grid: Grid, seed_mask, budget_fn, lam_max=1.0,
                        n_sweep=18, refine=0) -> ScalingField:
    """Scaling field vanishing on a neighborhood of the seed cells.

    Sweeps lam over a geometric ladder and keeps the largest value whose
    lam-neighborhood of the seed passes budget_fn; optional bisection
    refinement pushes lam toward the budget boundary.  The field is the
    mollified distance excess, so it is smooth, nonnegative and exactly
    zero on a closed neighborhood of the seed.
    """
    dist = _wrap_distance(grid, seed_mask)

    def neighborhood(lam):
        return dist <= lam

    lam = None
    for k in range(n_sweep):
        cand = lam_max * 2.0 ** (-k)
        if budget_fn(neighborhood(cand)):
            lam = cand
            break
    if lam is None:
        raise BracketingError("no neighborhood scale passes the mass budget")
    if refine and lam < lam_max:
        lo, hi = lam, 2.0 * lam
        for _ in range(refine):
            mid = 0.5 * (lo + hi)
            if budget_fn(neighborhood(mid)):
                lo = mid
            else:
                hi = mid
        lam = lo
    phi_cont = np.maximum(dist - lam, 0.0)
    phi = _mollify(grid, phi_cont, 0.25 * lam)
    return ScalingField(phi=phi, zero_mask=(phi == 0.0), lam=lam)


def _monotone_exponent_root(mass_fn, target, s_lo=-1.0, s_hi=1.0,
                            max_expand=60, width_tol=1e-10):
    """Root of the increasing map s -> mass_fn(s) = target, by bisection."""
    f_lo = mass_fn(s_lo)
    f_hi = mass_fn(s_hi)
    expand = 0
    while f_lo > target:
        s_lo *= 2.0
        f_lo = mass_fn(s_lo)
        expand += 1
        if expand > max_expand:
            raise BracketingError("exponent bracket expansion failed (low side)")
    expand = 0
    while f_hi < target:
        s_hi *= 2.0
        f_hi = mass_fn(s_hi)
        expand += 1
        if expand > max_expand or not np.isfinite(f_hi):
            raise BracketingError("exponent bracket expansion failed (high side)")
    while s_hi - s_lo > width_tol:
        mid = 0.5 * (s_lo + s_hi)
        if mass_fn(mid) < target:
            s_lo = mid
        else:
            s_hi = mid
    return 0.5 * (s_lo + s_hi)


@dataclass
class ImageScaling:
    nu_prime: AreaForm
    s: float
    field: ScalingField
    hemi_mass_fn: object


def scale_in_image_detailed(rho: SphereMap, delta: float, kappa_target: float,
                            sigma: AreaForm, supersample: int = 4) -> ImageScaling:
    grid = sigma.grid
    if not (0.0 < delta < kappa_target):
        raise ValueError("need 0 < delta < kappa_target")
    mask = image_mask(rho, grid, supersample)
    if mask.all():
        raise BracketingError("map is surjective; cannot scale toward a "
                              "hemisphere mass below 1")

    pb = pullback(rho, sigma).density           # rho* sigma on the domain grid
    w_up = region_weights(grid, "H+")
    rr, tt = grid.mesh()
    ro, to = rho.eval(rr, tt)
    ri = grid.r_index(ro)
    ti = grid.theta_index(to)

    def budget(nbhd):
        member = interp_grid(nbhd.astype(float), ri, ti, order=1) > 0.01
        return float(np.sum(pb * w_up * member)) < delta

    field = build_scaling_field(grid, ~mask, budget)
    phi_at = np.maximum(interp_grid(field.phi, ri, ti, order=1), 0.0)
    log1p = np.log1p(phi_at)

    def hemi_mass(s):
        return float(np.sum(pb * np.exp(s * log1p) * w_up))

    base = hemi_mass(0.0)
    if abs(base - kappa_target) < 1e-12:
        return ImageScaling(sigma, 0.0, field, hemi_mass)
    s = _monotone_exponent_root(hemi_mass, kappa_target)
    dens = np.exp(s * np.log1p(field.phi)) * sigma.density
    nu_prime = AreaForm(grid, dens)
    return ImageScaling(nu_prime, s, field, hemi_mass)


def scale_in_image(rho: SphereMap, delta: float, kappa_target: float,
                   sigma: AreaForm, supersample: int = 4):
    """Rescale the reference form on the image so the hemisphere pullback
    mass hits kappa_target; returns (form, exponent)."""
    res = scale_in_image_detailed(rho, delta, kappa_target, sigma, supersample)
    return res.nu_prime, res.s


@dataclass
class MassScaling:
    nu: AreaForm
    s_prime: float
    field: ScalingField
    gap: float
    eps: float
    total_fn: object


def scale_off_image_detailed(rho: SphereMap, nu_prime: AreaForm, eps: float,
                             supersample: int = 4, refine: int = 20) -> MassScaling:
    grid = nu_prime.grid
    mask = image_mask(rho, grid, supersample)
    if mask.all():
        # surjective: the scaling field vanishes identically and the form
        # must already carry unit mass (up to the grid quadrature error)
        if abs(nu_prime.total - 1.0) > 5e-5:
            raise BracketingError("surjective map with non-unit form mass")
        field = ScalingField(np.zeros_like(nu_prime.density),
                             np.ones_like(mask), 0.0)
        return MassScaling(nu_prime, 0.0, field, 0.0, eps, lambda s: nu_prime.total)
    if eps <= 0.0:
        raise ValueError("eps must be positive for a non-surjective map")

    inside = quadrature_mass(grid, nu_prime.density, mask)

    def budget(nbhd):
        return quadrature_mass(grid, nu_prime.density, nbhd | mask) - inside <= eps

    field = build_scaling_field(grid, mask, budget, refine=refine)
    v_mass = quadrature_mass(grid, nu_prime.density, field.zero_mask)
    gap = quadrature_mass(grid, nu_prime.density, field.zero_mask | mask) - inside
    if v_mass >= 1.0:
        raise BracketingError(f"zero-set mass {v_mass:.6f} is not below 1; "
                              "the exponent root is not bracketed")
    w_all = region_weights(grid, "sphere")
    log1p = np.log1p(field.phi)

    def total(s):
        return float(np.sum(nu_prime.density * np.exp(s * log1p) * w_all))

    s = _monotone_exponent_root(total, 1.0)
    nu = AreaForm(grid, nu_prime.density * np.exp(s * log1p))
    return MassScaling(nu, s, field, gap, eps, total)


def scale_off_image(rho: SphereMap, nu_prime: AreaForm, eps: float,
                    supersample: int = 4) -> AreaForm:
    """Rescale off the image so the total mass returns to 1, leaving the
    form untouched on a neighborhood of the image."""
    return scale_off_image_detailed(rho, nu_prime, eps, supersample).nu


def retract_to_prescribed(rho: SphereMap, kappa: float, steps: int,
                          sigma: AreaForm, supersample: int = 4,
                          delta: float = None):
    """Move a map to hemisphere mass kappa by transport of the range form.

    Builds the intermediate unit-mass form nu with the two scalings, flows
    the reference form to nu (so the endpoint diffeomorphism pulls the
    reference form back to nu), and postcomposes.  Returns (path, endpoint
    map); the endpoint has sigma-hemisphere mass kappa up to the transport
    residual.
    """
    if not (0.0 < kappa <= 1.0):
        raise ValueError("kappa must lie in (0, 1]")
    grid = sigma.grid
    if delta is None:
        delta = 0.5 * kappa
    img = scale_in_image_detailed(rho, delta, kappa, sigma, supersample)
    if kappa < 1.0:
        eps = 0.5 * (1.0 - kappa)
    else:
        eps = 0.5 * max(overlap(rho, img.nu_prime, grid), 1e-6)
    ms = scale_off_image_detailed(rho, img.nu_prime, eps, supersample)
    path = moser_flow(sigma, ms.nu, steps=steps)
    endpoint = compose(path.endpoint, rho)
    return path, endpoint


# ---------------------------------------------------------------------------
# band-push overlap deformation


def _trap_cumulative(s, shoulder):
    """C^2 ramp from 0 to 1: cumulative of a trapezoid speed profile with
    smoothstep shoulders, so the interior slope stays near 1/(1-shoulder)."""
    s = np.asarray(s, dtype=float)
    a = shoulder
    total = 1.0 - a  # integral of the trapezoid speed profile
    out = np.zeros_like(s)
    s0 = np.clip(s, 0.0, a)
    out += a * _smoothstep_integral(s0 / a)
    out += np.clip(s - a, 0.0, 1.0 - 2 * a)
    s2 = np.clip(s - (1.0 - a), 0.0, a)
    out += a * (s2 / a - _smoothstep_integral(s2 / a))
    return np.clip(out / total, 0.0, 1.0)


def _smoothstep_integral(x):
    x = np.clip(x, 0.0, 1.0)
    return x ** 4 * (2.5 + x * (-3.0 + x))


@dataclass
class BandEmbedding:
    """Arch-shaped band across a fold circle, vertically thickened.

    The rectangle [-1,1] x [-half_width, half_width] maps by
    (u, v) -> (theta_c + span*u, r_fold + arch(u) + v); the arch dips below
    the fold circle (uncovered side) in the middle and rises into the
    covered tube at the legs.  The fold circle's preimage splits the
    rectangle into the two legs (covered side) and the middle.
    """

    theta_c: float
    r_fold: float
    span: float
    amp: float
    half_width: float
    crossing: float

    def arch(self, u):
        return -self.amp * np.cos(np.pi * np.asarray(u) / (2.0 * self.crossing))

    def embed(self, u, v):
        r = self.r_fold + self.arch(u) + np.asarray(v)
        t = np.broadcast_to(self.theta_c + self.span * np.asarray(u), r.shape)
        return r, wrap_angle(t)

    def coords(self, r, theta):
        """(u, v) band coordinates plus the in-band mask."""
        u = angdiff(theta, self.theta_c) / self.span
        w = np.asarray(r, dtype=float) - self.r_fold
        v = w - self.arch(u)
        inside = (np.abs(u) <= 1.0) & (np.abs(v) <= self.half_width)
        return u, v, inside

    def region(self, u, v):
        """+1 right leg, -1 left leg, 0 middle (by the fold-circle sign)."""
        w = self.arch(u) + v
        return np.where(w > 0.0, np.where(u > 0.0, 1, -1), 0)


PUSH_TMAX = 0.95
RAMP_LO = -0.93
RAMP_HI = 0.38
FALL_LO = 0.66
FALL_HI = 0.90
PUSH_DROP = 1.04


def _push_displacement(u):
    """Leftward slide: zero outside (-0.93, 0.9), slope above -1.

    The full-drop plateau [0.38, 0.66] lands past the left fold-circle
    crossing at full push, and the rise spreads the compression evenly so
    the slid rectangle map stays monotone.
    """
    u = np.asarray(u, dtype=float)
    rise = _trap_cumulative((u - RAMP_LO) / (RAMP_HI - RAMP_LO), 0.12)
    fall = _trap_cumulative((u - FALL_LO) / (FALL_HI - FALL_LO), 0.25)
    return -PUSH_DROP * rise * (1.0 - fall)


def _push_tau(t):
    # full push from t = 1/2 on, per the rectangle-diffeo contract
    return PUSH_TMAX * smoothstep(2.0 * np.asarray(t, dtype=float))


class BandPushMap(SphereMap):
    """The image-side band push applied on the right-leg preimage patch.

    Outside the patch the underlying map is returned unchanged; the two
    fold-circle crossing arcs are the (measure-zero) seam of the piecewise
    definition.
    """

    def __init__(self, rho: SphereMap, band: BandEmbedding, t: float,
                 collar_halfwidth: float, tau=None, theta_halfwidth=None):
        self.rho = rho
        self.band = band
        self.t = t
        self.tau = _push_tau(t) if tau is None else tau
        self.collar = collar_halfwidth
        if theta_halfwidth is None:
            theta_halfwidth = band.span / 0.75 + 0.2
        self.theta_halfwidth = theta_halfwidth

    def _push_uv(self, u, v):
        sv = window(np.abs(v) / self.band.half_width, 0.7, 0.95)
        return u + self.tau * sv * _push_displacement(u), v

    def push_image_point(self, r, theta):
        """The band diffeomorphism of the range sphere."""
        u, v, inside = self.band.coords(r, theta)
        u2, v2 = self._push_uv(u, v)
        r2, t2 = self.band.embed(u2, v2)
        return np.where(inside, r2, r), np.where(inside, t2, wrap_angle(theta))

    def in_patch(self, r, theta):
        """Membership of domain points in the pushed (right-leg) patch."""
        ro, to = self.rho.eval(r, theta)
        u, v, inside = self.band.coords(ro, to)
        right_leg = inside & (self.band.region(u, v) == 1)
        collar = np.abs(np.asarray(r, dtype=float) - 1.0) <= self.collar
        near_arc = np.abs(angdiff(theta, self.band.theta_c)) <= self.theta_halfwidth
        return right_leg & collar & near_arc

    def eval(self, r, theta):
        ro, to = self.rho.eval(r, theta)
        member = self.in_patch(r, theta)
        pr, pt = self.push_image_point(ro, to)
        return np.where(member, pr, ro), wrap_angle(np.where(member, pt, to))


def _band_for(rho: SphereMap, gamma_em: ArcInterval, sigma: AreaForm,
              collar_halfwidth: float, amp=None, half_width=None) -> BandEmbedding:
    thetas = gamma_em.samples(128)
    cr, ct = rho.eval(np.ones_like(thetas), thetas)
    if np.max(cr) - np.min(cr) > 1e-9:
        raise BandError("image of the equator arc is not a parallel circle; "
                        "the band construction supports fold-type maps only")
    r_fold = float(np.mean(cr))
    span = 0.75 * gamma_em.radius
    # height of the one-sided tube the collar covers: the legs must fit in it
    ys = np.linspace(0.0, collar_halfwidth, 64)
    ir, _ = rho.eval(1.0 + ys, np.full_like(ys, gamma_em.center))
    tube_h = float(np.max(ir)) - r_fold
    chart_lim = min(r_fold, 2.0 - r_fold)
    budget = min(0.95 * tube_h, 0.9 * chart_lim)
    if amp is None:
        amp = min(0.18, 0.55 * budget)
    if half_width is None:
        half_width = min(0.16, budget - amp, 0.9 * amp)
    if half_width <= 0 or amp <= 0:
        raise BandError("no room for the band inside the collar tube")
    return BandEmbedding(theta_c=float(gamma_em.center), r_fold=r_fold,
                         span=span, amp=amp, half_width=half_width,
                         crossing=0.35)


def _correction_profile(push: BandPushMap, sigma: AreaForm, q: int,
                        n_dense: int = 4096):
    """K on the fold circle and the radial rescale exponent profile.

    K is the density ratio of the pushed reference form to the reference
    form at the fold circle, taken only over the pushed patch; the
    corrective rescale factor is K^(-1/(2q+2)), which restores the leading
    y^(2q+1) term of the near-equator pullback.
    """
    band = push.band
    thetas = np.arange(n_dense) * (TWO_PI / n_dense)
    ones = np.ones_like(thetas)
    wrapper = AnalyticMap(lambda r, t: push.push_image_point(r, t))
    j = fd_jacobian(wrapper, band.r_fold * ones, thetas, 2e-6)
    det = j[0] * j[3] - j[1] * j[2]
    ro, to = push.push_image_point(band.r_fold * ones, thetas)
    ratio = sigma.density_at(ro, to) * det / sigma.density_at(band.r_fold * ones,
                                                              thetas)
    # the correction follows the pushed patch: the right-leg crossing zone
    u, v, inside = band.coords(band.r_fold * ones, thetas)
    active = inside & (u > 0.0)
    K = np.where(active, ratio, 1.0)
    if np.min(K) < 0.15 or np.max(K) > 6.0:
        raise BandError(f"band Jacobian ratio out of range "
                        f"[{np.min(K):.3f}, {np.max(K):.3f}]")
    m = K ** (-1.0 / (2.0 * q + 2.0))
    return thetas, K, m


def _radial_rescale_map(thetas, m_profile, inner=0.04, outer=0.14) -> SphereMap:
    n = thetas.size
    dt = TWO_PI / n
    log_m = np.log(m_profile)

    def m_at(theta):
        idx = wrap_angle(theta) / dt
        pad = 4
        vals = np.concatenate([log_m[-pad:], log_m, log_m[:pad]])
        out = ndimage.map_coordinates(vals, [np.asarray(idx).ravel() + pad],
                                      order=3, mode="nearest")
        return np.exp(out).reshape(np.shape(theta))

    def fn(r, t):
        y = r - 1.0
        s = window(np.abs(y), inner, outer)
        fac = m_at(t) ** s
        return 1.0 + y * fac, t

    g = AnalyticMap(fn, name="collar-rescale")
    # the blended rescale must stay a radial diffeomorphism
    ys = np.linspace(-outer - 0.02, outer + 0.02, 161)
    worst = np.argmax(np.abs(log_m))
    probe, _ = g.eval(1.0 + ys, np.full_like(ys, thetas[worst]))
    if np.min(np.diff(probe)) <= 0.0:
        raise BandError("collar rescale is not monotone; the band Jacobian "
                        "ratio is too far from 1")
    return g


@dataclass
class BandPushResult:
    maps: list
    times: np.ndarray
    band: BandEmbedding
    pushes: list
    corrections: list
    reserved_cells: int


def band_push_overlap_detailed(rho: SphereMap, gamma_em: ArcInterval,
                               steps: int, sigma: AreaForm, q: int = 1,
                               supersample: int = 4,
                               collar_halfwidth: float = 0.75) -> BandPushResult:
    grid = sigma.grid
    if not immerses(rho, gamma_em, tol=1e-3):
        raise BandError("map does not immerse the chosen equator arc")
    ths = gamma_em.samples(96)
    pts = embed3(*rho.eval(np.ones_like(ths), ths))
    gaps = np.linalg.norm(np.diff(pts, axis=0), axis=-1)
    if np.min(gaps) <= 0.0:
        raise BandError("map does not embed the chosen equator arc")

    mask_rho = image_mask(rho, grid, supersample)
    if mask_rho.all():
        raise BandError("map is surjective; the band has no uncovered side")

    band = _band_for(rho, gamma_em, sigma, collar_halfwidth)

    # non-surjectivity must survive: the band image together with the map
    # image has to leave cells uncovered
    uu = np.linspace(-1.0, 1.0, 160)
    vv = np.linspace(-band.half_width, band.half_width, 24)
    br, bt = band.embed(uu[:, None], vv[None, :])
    bi, bj = grid.cell_index(br, bt)
    mask_band = np.zeros_like(mask_rho)
    mask_band[bi.ravel(), bj.ravel()] = True
    mask_band = ndimage.binary_dilation(mask_band, iterations=1)
    reserved = int(np.sum(~(mask_band | mask_rho)))
    if reserved == 0:
        raise BandError("band leaves no uncovered cell to reserve")

    times = np.linspace(0.0, 1.0, steps)
    maps = []
    pushes = []
    corrections = []
    for t in times:
        push = BandPushMap(rho, band, float(t), collar_halfwidth)
        thetas, K, m = _correction_profile(push, sigma, q)
        g = _radial_rescale_map(thetas, m)
        maps.append(CollarComposed(push, g))
        pushes.append(push)
        corrections.append((K, m))
    return BandPushResult(maps, times, band, pushes, corrections, reserved)


class CollarComposed(SphereMap):
    """Band push precomposed with the collar rescale of the domain."""

    def __init__(self, push: BandPushMap, g: SphereMap):
        self.push = push
        self.g = g

    def eval(self, r, theta):
        gr, gt = self.g.eval(r, theta)
        return self.push.eval(gr, gt)


def band_push_overlap(rho: SphereMap, gamma_em: ArcInterval, steps: int,
                      sigma: AreaForm, q: int = 1, supersample: int = 4):
    """Deform a non-surjective map so it overlaps, along an embedded band.

    Returns the sampled deformation; the first map is the input (up to the
    trivial correction) and the last one overlaps.
    """
    return band_push_overlap_detailed(rho, gamma_em, steps, sigma, q,
                                      supersample).maps


def family_cutoff(d):
    """Boundary bump for one-parameter families on [-1, 1]: full strength
    through the middle, off at the ends."""
    return window(np.abs(np.asarray(d, dtype=float)), 0.6, 1.0)


def band_push_family(rhos, params, gamma_em: ArcInterval, steps: int,
                     sigma: AreaForm, q: int = 1):
    """Parametrized band push with the endpoint cutoff tau = cutoff(d) * t."""
    out = []
    for rho, d in zip(rhos, params):
        res = band_push_overlap_detailed(rho, gamma_em, steps, sigma, q)
        cut = float(family_cutoff(d))
        stages = []
        for t, push in zip(res.times, res.pushes):
            p = BandPushMap(rho, res.band, float(t) * cut,
                            push.collar, tau=_push_tau(float(t) * cut))
            thetas, K, m = _correction_profile(p, sigma, q)
            stages.append(CollarComposed(p, _radial_rescale_map(thetas, m)))
        out.append(stages)
    return out


# ---------------------------------------------------------------------------
# Alexander contraction


def _boundary_param(arc: ArcInterval):
    """Piecewise-linear map from the circle to the unit-square boundary.

    The arc covers the top edge; the complementary arc covers the other
    three edges by arclength.
    """
    a0 = arc.center - arc.radius
    arc_len = 2.0 * arc.radius
    rest = TWO_PI - arc_len

    def beta(theta):
        s = np.mod(np.asarray(theta, dtype=float) - a0, TWO_PI)
        on_arc = s <= arc_len
        x = np.where(on_arc, 1.0 - s / arc_len, 0.0)  # top edge, right to left
        y = np.ones_like(x)
        s2 = np.where(on_arc, 0.0, s - arc_len) / rest  # 0..1 along the rest
        # left edge down, bottom left-to-right, right edge up
        leg = np.clip(s2 * 3.0, 0.0, 3.0)
        lx = np.where(leg <= 1.0, 0.0, np.where(leg <= 2.0, leg - 1.0, 1.0))
        ly = np.where(leg <= 1.0, 1.0 - leg, np.where(leg <= 2.0, 0.0, leg - 2.0))
        return (np.where(on_arc, x, lx), np.where(on_arc, y, ly))

    def beta_inv(x, y, tol=1e-12):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        on_top = y >= 1.0 - tol
        s_top = (1.0 - x) * arc_len
        on_left = x <= tol
        on_bottom = ~on_top & ~on_left & (y <= tol)
        leg = np.where(on_left, 1.0 - y,
                       np.where(on_bottom, 1.0 + x, 2.0 + y))
        s_rest = arc_len + leg / 3.0 * rest
        return wrap_angle(a0 + np.where(on_top, s_top, s_rest))

    return beta, beta_inv


def _square_chart(arc: ArcInterval, center_height: float):
    """Star-shaped homeomorphism between the polar disc and the unit square."""
    beta, beta_inv = _boundary_param(arc)
    cx, cy = 0.5, center_height

    def to_square(rho, theta):
        bx, by = beta(theta)
        return cx + rho * (bx - cx), cy + rho * (by - cy)

    def to_disc(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        dx = x - cx
        dy = y - cy
        # ray-box scaling factors to each of the four edges
        with np.errstate(divide="ignore", invalid="ignore"):
            tx = np.where(dx > 0, (1.0 - cx) / dx,
                          np.where(dx < 0, (0.0 - cx) / dx, np.inf))
            ty = np.where(dy > 0, (1.0 - cy) / dy,
                          np.where(dy < 0, (0.0 - cy) / dy, np.inf))
        tstar = np.minimum(tx, ty)
        qx = cx + tstar * dx
        qy = cy + tstar * dy
        rho = np.sqrt(dx ** 2 + dy ** 2) / np.sqrt((qx - cx) ** 2 + (qy - cy) ** 2)
        both_zero = (np.abs(dx) < 1e-300) & (np.abs(dy) < 1e-300)
        rho = np.where(both_zero, 0.0, rho)
        theta = np.where(both_zero, 0.0, beta_inv(qx, qy))
        return np.clip(rho, 0.0, 1.0), theta

    return to_square, to_disc


def _squeeze(t):
    """The doubled-square stretch and its inverse (piecewise linear in y)."""
    def fwd(x, y):
        y = np.asarray(y, dtype=float)
        lo = y / (1.0 - t)
        hi = (y + 6.0 * t) / (1.0 + 3.0 * t)
        return x, np.where(y < 1.5 * (1.0 - t), lo, hi)

    def inv(x, y):
        y = np.asarray(y, dtype=float)
        lo = (1.0 - t) * y
        hi = (1.0 + 3.0 * t) * y - 6.0 * t
        return x, np.where(y < 1.5, lo, hi)

    return fwd, inv


def alexander_contract(psi: DiscHomeo, arc: ArcInterval, t: float,
                       center_height: float = 0.016,
                       fix_tol: float = 0.05) -> DiscHomeo:
    """Conjugate a disc homeomorphism by the squeeze toward a fixed arc.

    The disc is identified with the unit square (the arc on the top edge),
    the homeomorphism is doubled across the arc by the identity, and the
    conjugation by the piecewise-linear vertical stretch pushes every
    compact set into the identity region as t -> 1.  Rejects t = 1, which
    is only defined as the limit.
    """
    if not (0.0 <= t < 1.0):
        raise ValueError("t must lie in [0, 1); the contraction endpoint is "
                         "a limit, not a map")
    ro, to = psi.eval(np.full(32, 0.99), arc.samples(32))
    if np.max(chart_dist(ro, to, np.full(32, 0.99), arc.samples(32))) > fix_tol:
        raise ValueError("homeomorphism does not fix the arc within tolerance")
    if t == 0.0:
        return psi

    to_square, to_disc = _square_chart(arc, center_height)
    fwd, inv = _squeeze(t)

    rows = psi.rows
    thetas = psi.thetas
    rr = np.broadcast_to(rows[:, None], (rows.size, thetas.size))
    tt = np.broadcast_to(thetas[None, :], rr.shape)
    x, y = to_square(rr, tt)
    x1, y1 = fwd(x, y)
    absorbed = y1 >= 1.0
    # evaluate the extended homeomorphism: identity above the arc
    xs = np.where(absorbed, 0.5, x1)
    ys = np.where(absorbed, 0.5, np.minimum(y1, 1.0 - 1e-12))
    dr_in, dt_in = to_disc(xs, ys)
    pr, pt = psi.eval(dr_in, dt_in)
    px, py = to_square(pr, pt)
    px = np.where(absorbed, x1, px)
    py = np.where(absorbed, y1, py)
    x2, y2 = inv(px, py)
    out_r, out_t = to_disc(x2, np.clip(y2, 0.0, 1.0 - 1e-12))
    out_r = np.where(absorbed, rr, out_r)
    out_t = np.where(absorbed, tt, out_t)
    return DiscHomeo(rows.copy(), thetas.copy(), out_r, wrap_angle(out_t))
