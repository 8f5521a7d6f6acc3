"""Quantitative predicates on sphere maps.

Degree, hemisphere mass, overlap and missed-area estimators built on a
rasterized image mask, plus the interval nets on the equator and the
immersion tests used by the deformation pipelines.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from ._util import TWO_PI, angdiff, chart_dist, embed3
from .sphere_geom import AreaForm, Grid, integrate, quadrature_mass, region_weights
from .maps import SphereMap, pullback


@dataclass(frozen=True)
class ArcInterval:
    """Closed arc on the equator circle, compared modulo 2pi."""

    center: float
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    def contains(self, theta):
        return np.abs(angdiff(theta, self.center)) <= self.radius + 1e-15

    def contains_arc(self, other) -> bool:
        d = abs(float(angdiff(other.center, self.center)))
        return d + other.radius <= self.radius + 1e-12

    def samples(self, n=64):
        return self.center + np.linspace(-self.radius, self.radius, n)


@dataclass(frozen=True)
class IntervalNet:
    """2^i disjoint arcs of radius 2pi/(10 * 2^i) centered at 2pi j/2^i."""

    level: int
    intervals: tuple

    @property
    def total_length(self):
        return sum(2 * a.radius for a in self.intervals)


def net_intervals(i: int) -> IntervalNet:
    if i < 1:
        raise ValueError("net level must be >= 1")
    n = 2 ** i
    radius = TWO_PI / (10.0 * n)
    arcs = tuple(ArcInterval(TWO_PI * j / n, radius) for j in range(1, n + 1))
    return IntervalNet(i, arcs)


def image_mask(f: SphereMap, grid: Grid, supersample: int = 4) -> np.ndarray:
    """Boolean field of grid cells hit by the map.

    Each domain cell is sampled at supersample^2 interior points; a range
    cell is marked when any sample point lands in it.  supersample must
    exceed the map's maximum radial stretch or interior cells get skipped;
    4 covers the fold family through t = 0.75, the fully collapsed maps
    need 8.
    """
    if supersample < 1:
        raise ValueError("supersample must be >= 1")
    ss = int(supersample)
    edges = grid.cell_edges_r()
    mask = np.zeros((grid.n_r, grid.n_theta), dtype=bool)
    frac = (np.arange(ss) + 0.5) / ss
    # radial sample coordinates per cell row: edges[i] + frac*(width)
    widths = np.diff(edges)
    for a in range(ss):
        r_samp = edges[:-1] + frac[a] * widths            # (n_r,)
        for b in range(ss):
            t_off = (frac[b] - 0.5) * grid.dtheta
            rr = np.broadcast_to(r_samp[:, None], (grid.n_r, grid.n_theta))
            tt = grid.theta[None, :] + t_off
            ro, to = f.eval(rr, np.broadcast_to(tt, rr.shape))
            i, j = grid.cell_index(ro, to)
            mask[i.ravel(), j.ravel()] = True
    return mask


def mask_seam(mask) -> np.ndarray:
    """Cells adjacent to the mask's boundary (on either side)."""
    m = np.asarray(mask, dtype=bool)
    up = np.roll(m, 1, 0); up[0] = m[0]
    dn = np.roll(m, -1, 0); dn[-1] = m[-1]
    return (m != up) | (m != dn) | (m != np.roll(m, 1, 1)) | (m != np.roll(m, -1, 1))


def mask_boundary_mass(grid: Grid, mask, form: AreaForm) -> float:
    """Form mass of the cells on the mask's boundary: the rasterization bound."""
    w = region_weights(grid, mask_seam(mask))
    return float(np.sum(np.abs(form.density) * w))


def mask_mass(grid: Grid, density, mask) -> float:
    """Mass of a rasterized region, with covered boundary cells at half weight.

    A covered cell on the mask boundary straddles the true region edge, so
    half-weighting it cuts the systematic raster bias to about half a
    boundary row.  Complement masses are taken as total minus this value,
    which keeps the overlap/missed-area algebra exact.
    """
    m = np.asarray(mask, dtype=bool)
    seam = mask_seam(m) & m
    w = region_weights(grid, "sphere")
    weight = np.where(seam, 0.5, np.where(m, 1.0, 0.0))
    return float(np.sum(np.asarray(density) * w * weight))


def hemisphere_mass(f: SphereMap, form: AreaForm, grid: Grid = None, **kw) -> float:
    """Mass of the pullback over the upper hemisphere."""
    return integrate(pullback(f, form, grid=grid, **kw), "H+")


def overlap(f: SphereMap, form: AreaForm, grid: Grid = None,
            supersample: int = 4, mask=None) -> float:
    """Upper-hemisphere pullback mass minus the mass of the image.

    Nonnegative (up to discretization) for the orientation-respecting maps
    of this artifact, and positive exactly when the upper hemisphere covers
    part of the image twice.
    """
    grid = grid or form.grid
    if mask is None:
        mask = image_mask(f, grid, supersample)
    return hemisphere_mass(f, form, grid) - mask_mass(grid, form.density, mask)


def missed_area(f: SphereMap, sigma: AreaForm, grid: Grid = None,
                supersample: int = 4, mask=None) -> float:
    """Reference mass of the complement of the image."""
    grid = grid or sigma.grid
    if mask is None:
        mask = image_mask(f, grid, supersample)
    return quadrature_mass(grid, sigma.density, "sphere") \
        - mask_mass(grid, sigma.density, mask)


class DegreeMismatchError(RuntimeError):
    pass


def degree(f: SphereMap, sigma: AreaForm, grid: Grid = None,
           cross_check: bool = False, regular_value=(1.5, 0.73)) -> int:
    """Degree as the rounded total pullback mass of the unit form.

    With cross_check, also counts signed preimages of a regular value by
    walking the mapped grid quads; disagreement raises.
    """
    total = pullback(f, sigma, grid=grid).total
    deg = int(np.rint(total))
    if abs(total - deg) > 0.2:
        raise DegreeMismatchError(f"pullback degree estimate {total:.3f} is not "
                                  "close to an integer")
    if cross_check:
        counted = _signed_preimage_count(f, grid or sigma.grid, regular_value)
        if counted != deg:
            raise DegreeMismatchError(
                f"degree estimates disagree: integral {deg}, preimage count {counted}")
    return deg


def _signed_preimage_count(f, grid, point):
    """Sum of quad orientations over mapped grid cells containing the point."""
    pr, pt = point
    rr, tt = grid.mesh()
    ro, to = f.eval(rr, tt)
    # recenter angles around the target so quads near it are wrap-free
    to = pt + angdiff(to, pt)
    x00, y00 = ro[:-1, :], to[:-1, :]
    x10, y10 = ro[1:, :], to[1:, :]
    x01 = np.roll(ro, -1, 1)[:-1, :]
    y01 = np.roll(to, -1, 1)[:-1, :]
    x11 = np.roll(ro, -1, 1)[1:, :]
    y11 = np.roll(to, -1, 1)[1:, :]
    # quads that straddle the angular cut of the recentering are artifacts
    ymin = np.minimum(np.minimum(y00, y10), np.minimum(y01, y11))
    ymax = np.maximum(np.maximum(y00, y10), np.maximum(y01, y11))
    sane = (ymax - ymin) < 0.5 * np.pi
    total = 0
    for (ax, ay, bx, by, cx, cy) in (
        (x00, y00, x10, y10, x11, y11),
        (x00, y00, x11, y11, x01, y01),
    ):
        d1 = (bx - ax) * (pt - ay) - (by - ay) * (pr - ax)
        d2 = (cx - bx) * (pt - by) - (cy - by) * (pr - bx)
        d3 = (ax - cx) * (pt - cy) - (ay - cy) * (pr - cx)
        pos = (d1 > 0) & (d2 > 0) & (d3 > 0) & sane
        neg = (d1 < 0) & (d2 < 0) & (d3 < 0) & sane
        total += int(np.sum(pos)) - int(np.sum(neg))
    return total


def boundary_speed(f: SphereMap, thetas, step=1e-5):
    """Speed of the equator image curve theta -> f(1, theta), embedded in R^3."""
    thetas = np.asarray(thetas, dtype=float)
    r1 = np.ones_like(thetas)
    hi = embed3(*f.eval(r1, thetas + step))
    lo = embed3(*f.eval(r1, thetas - step))
    return np.linalg.norm(hi - lo, axis=-1) / (2 * step)


def immerses(f: SphereMap, arc: ArcInterval, tol: float, n_samples: int = 96) -> bool:
    """True when the equator image curve has speed above tol on the arc."""
    speeds = boundary_speed(f, arc.samples(n_samples))
    return bool(np.all(speeds > tol))


def transversely_immerses(f: SphereMap, arc: ArcInterval, tol: float,
                          detection_radius: float = None,
                          n_samples: int = 96, n_global: int = 512,
                          max_run_frac: float = 0.25) -> bool:
    """Immersed with a nowhere-dense double-point set, at sample resolution.

    A sample x on the arc is a double point when some equator point y,
    angularly separated from x, has image within the detection radius of
    f's image of x (default: a couple of scan cells).  The sampled
    double-point flags must not fill any run longer than max_run_frac of
    the arc.
    """
    if not immerses(f, arc, tol):
        return False
    if detection_radius is None:
        detection_radius = 3.0 * TWO_PI / n_global
    xs = arc.samples(n_samples)
    ys = np.arange(n_global) * (TWO_PI / n_global)
    fx = embed3(*f.eval(np.ones_like(xs), xs))
    fy = embed3(*f.eval(np.ones_like(ys), ys))
    d_img = np.linalg.norm(fx[:, None, :] - fy[None, :, :], axis=-1)
    sep = np.abs(angdiff(xs[:, None], ys[None, :]))
    # ignore the trivial near-diagonal: points within a few sample spacings
    min_sep = 5.0 * TWO_PI / n_global
    double = np.any((d_img < detection_radius) & (sep > min_sep), axis=1)
    max_run = 0
    run = 0
    for flag in double:
        run = run + 1 if flag else 0
        max_run = max(max_run, run)
    return max_run <= max_run_frac * n_samples


@dataclass
class OverlapReport:
    """Bundled estimators for one map, with the rasterization error bound."""

    overlap: float
    missed_area: float
    degree: int
    hemisphere_mass: float
    surjective: bool
    overlaps: bool
    error_bound: float

    def to_json(self, path=None):
        text = json.dumps(asdict(self), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def overlap_report(f: SphereMap, sigma: AreaForm, grid: Grid = None,
                   supersample: int = 4) -> OverlapReport:
    grid = grid or sigma.grid
    mask = image_mask(f, grid, supersample)
    bound = mask_boundary_mass(grid, mask, sigma)
    ov = overlap(f, sigma, grid, mask=mask)
    ma = missed_area(f, sigma, grid, mask=mask)
    deg = degree(f, sigma, grid)
    hemi = hemisphere_mass(f, sigma, grid)
    return OverlapReport(
        overlap=ov,
        missed_area=ma,
        degree=deg,
        hemisphere_mass=hemi,
        surjective=bool(ma < bound),
        overlaps=bool(ov > bound),
        error_bound=bound,
    )
