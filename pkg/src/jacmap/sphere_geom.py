"""Chart grid, quadrature, and the two concrete area-form families.

Area forms are stored as chart densities d(r, theta), meaning the form is
d * dr ^ dtheta.  Densities carry the chart Jacobian factor, so they vanish
at the pole rows.  Quadrature is the midpoint rule with the grid nodes as
cell centers (half cells at the pole rows) and periodic wrap in theta.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from ._util import TWO_PI, window

# sigma is the planar density lambda*r up to here, then blends to zero at
# the r = 2 pole; the blend window is fixed once for the whole artifact.
CAP_START = 1.8


def radial_profile(r):
    """Radial density profile of the reference form, before normalization.

    Equals r below CAP_START; above it the same linear profile is shut off
    by a quintic window, which keeps the profile C^2, positive on (0, 2),
    and flat to second order at the r = 2 pole.
    """
    r = np.asarray(r, dtype=float)
    return r * window(r, CAP_START, 2.0)


def _profile_mass():
    val, _ = quad(lambda r: float(radial_profile(r)), 0.0, 2.0, limit=200)
    return val


_PROFILE_MASS = _profile_mass()
# total mass 1 fixes the planar slope
SIGMA_SLOPE = 1.0 / (TWO_PI * _PROFILE_MASS)


@dataclass(frozen=True)
class Grid:
    """Uniform chart grid, nodes at r_i = 2i/(n_r-1), theta_j = 2pi j/n_theta."""

    n_r: int
    n_theta: int

    def __post_init__(self):
        if self.n_r < 16 or self.n_theta < 16:
            raise ValueError("grid too coarse")

    @property
    def dr(self):
        return 2.0 / (self.n_r - 1)

    @property
    def dtheta(self):
        return TWO_PI / self.n_theta

    @property
    def r(self):
        return np.linspace(0.0, 2.0, self.n_r)

    @property
    def theta(self):
        return np.arange(self.n_theta) * self.dtheta

    def mesh(self):
        return np.meshgrid(self.r, self.theta, indexing="ij")

    def radial_weights(self):
        """Cell widths: full dr cells, halved at the two pole rows."""
        w = np.full(self.n_r, self.dr)
        w[0] = w[-1] = 0.5 * self.dr
        return w

    def cell_edges_r(self):
        """Radial cell boundaries; node i owns [edges[i], edges[i+1]]."""
        e = np.empty(self.n_r + 1)
        e[0] = 0.0
        e[-1] = 2.0
        e[1:-1] = 0.5 * (self.r[:-1] + self.r[1:])
        return e

    def clipped_weights(self, a, b):
        """Radial coverage of each node cell by the interval [a, b]."""
        e = self.cell_edges_r()
        lo = np.clip(e[:-1], a, b)
        hi = np.clip(e[1:], a, b)
        return np.maximum(hi - lo, 0.0)

    def cell_index(self, r, theta):
        """Indices of the cells containing the given chart points."""
        i = np.clip(np.rint(np.asarray(r) / self.dr).astype(int), 0, self.n_r - 1)
        j = np.mod(np.rint(np.asarray(theta) / self.dtheta).astype(int), self.n_theta)
        return i, j

    def r_index(self, r):
        """Fractional radial index for interpolation."""
        return np.asarray(r, dtype=float) / self.dr

    def theta_index(self, theta):
        return np.mod(np.asarray(theta, dtype=float), TWO_PI) / self.dtheta


@dataclass
class AreaForm:
    """A 2-form given by its chart density on a grid.

    density_fn, when present, is the exact analytic density; grid code uses
    it to avoid interpolation error in pullbacks.
    """

    grid: Grid
    density: np.ndarray
    density_fn: object = None
    total: float = field(default=None)

    def __post_init__(self):
        self.density = np.asarray(self.density, dtype=float)
        if self.density.shape != (self.grid.n_r, self.grid.n_theta):
            raise ValueError("density shape does not match grid")
        if not np.all(np.isfinite(self.density)):
            raise ValueError("density must be finite everywhere")
        self.density.flags.writeable = False
        if self.total is None:
            self.total = integrate(self, "sphere")

    def density_at(self, r, theta):
        """Density at arbitrary chart points (analytic if available)."""
        if self.density_fn is not None:
            return np.asarray(self.density_fn(r, theta), dtype=float)
        from ._util import interp_grid
        g = self.grid
        return interp_grid(self.density, g.r_index(r), g.theta_index(theta), order=1)

    def to_csv(self, path):
        g = self.grid
        rr, tt = g.mesh()
        rows = np.column_stack([rr.ravel(), tt.ravel(), self.density.ravel()])
        np.savetxt(path, rows, delimiter=",", header="r,theta,density", comments="")


@dataclass(frozen=True)
class FormFamilyParams:
    """Parameters of the equator-degenerate family.

    q is the smoothness parameter of the fold maps, kappa the hemisphere
    mass, p the nominal vanishing exponent at the equator.  The density on
    the inner collar is the exact fold pullback, whose leading exponent is
    2q+1 with a y^(4q+3) correction; p is kept as metadata for callers that
    probe the family.
    """

    q: int = 1
    kappa: float = 1.0
    p: int = None

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be a positive integer")
        if not (0.0 < self.kappa <= 1.0):
            raise ValueError("kappa must lie in (0, 1]")
        if self.p is None:
            object.__setattr__(self, "p", 4 * self.q + 3)
        if self.p % 2 == 0:
            raise ValueError("p must be odd")


def make_grid(n_r: int, n_theta: int) -> Grid:
    """Uniform grid over [0,2] x [0,2pi); rejects sizes below 16."""
    return Grid(int(n_r), int(n_theta))


def sigma_density(r):
    """Analytic density of the unit-mass reference form."""
    return SIGMA_SLOPE * radial_profile(r)


def sigma_standard(grid: Grid) -> AreaForm:
    """The reference area form: planar lambda*r density, capped near r=2, mass 1."""
    rr, _ = grid.mesh()
    d = sigma_density(rr)
    return AreaForm(grid, d, density_fn=lambda r, t: sigma_density(r))


def fold_pullback_density(r, q):
    """Exact density of the fold map's sigma-pullback.

    The fold (r, theta) -> (1 + (1-r)^(2q+2), theta) lands in the planar
    zone for |r-1| <= 0.95, where the pullback density has the closed form
    slope*(2q+2) * y^(2q+1) * (1 + y^(2q+2)), y = r - 1.  Odd in y, so the
    hemispheres carry opposite mass.
    """
    y = np.asarray(r, dtype=float) - 1.0
    rim = 1.0 + y ** (2 * q + 2)
    return sigma_density(rim) * (2 * q + 2) * y ** (2 * q + 1)


# mu profile geometry: exact fold density on the inner collar, a mirrored
# amplitude zone outside, tapered to a small floor at the pole caps.
MU_INNER = 0.15
MU_BLEND = 0.25
MU_TAPER_LO = 0.85
MU_TAPER_HI = 0.95
MU_FLOOR = 0.05


def _mu_windows(abs_y):
    w_inner = window(abs_y, MU_INNER, MU_BLEND)
    taper = MU_FLOOR + (1.0 - MU_FLOOR) * window(abs_y, MU_TAPER_LO, MU_TAPER_HI)
    return w_inner, taper


def mu_family(grid: Grid, params: FormFamilyParams) -> AreaForm:
    """Equator-degenerate form with hemisphere masses +/-kappa.

    Vanishes exactly on r = 1 and agrees with the fold pullback of the
    reference form on the collar |r-1| <= MU_INNER, independent of kappa.
    Outside the collar the same odd density is rescaled by a mirrored
    smooth profile whose amplitude is solved (linearly, on this grid's
    quadrature) so the upper-hemisphere mass is exactly kappa.
    """
    q = params.q
    rr, _ = grid.mesh()
    base = fold_pullback_density(rr, q)
    w_inner, taper = _mu_windows(np.abs(rr - 1.0))

    wr = grid.clipped_weights(1.0, 2.0)[:, None] * grid.dtheta
    inner_mass = float(np.sum(base * w_inner * wr))
    outer_mass = float(np.sum(base * (1.0 - w_inner) * taper * wr))
    amp = (params.kappa - inner_mass) / outer_mass
    if amp <= 0.0:
        raise ValueError("kappa below the collar mass; cannot keep the form "
                         "nonzero off the equator")

    def density_fn(r, theta, _amp=amp, _q=q):
        ay = np.abs(np.asarray(r, dtype=float) - 1.0)
        wi, tp = _mu_windows(ay)
        return fold_pullback_density(r, _q) * (wi + _amp * (1.0 - wi) * tp)

    d = base * (w_inner + amp * (1.0 - w_inner) * taper)
    return AreaForm(grid, d, density_fn=density_fn)


def region_weights(grid: Grid, region):
    """Quadrature weight field for a region spec.

    Regions: "sphere", "H+" (r > 1), "H-" (r < 1), ("annulus", a, b), or a
    boolean cell mask.  Radial interval regions clip boundary cells, so a
    hemisphere split mid-cell is weighted by the covered fraction.
    """
    if isinstance(region, str):
        key = region.lower()
        if key in ("sphere", "s2", "all"):
            wr = grid.radial_weights()
        elif key in ("h+", "upper"):
            wr = grid.clipped_weights(1.0, 2.0)
        elif key in ("h-", "lower"):
            wr = grid.clipped_weights(0.0, 1.0)
        else:
            raise ValueError(f"unknown region {region!r}")
        return wr[:, None] * np.full(grid.n_theta, grid.dtheta)[None, :]
    if isinstance(region, tuple) and region and region[0] == "annulus":
        _, a, b = region
        wr = grid.clipped_weights(float(a), float(b))
        return wr[:, None] * np.full(grid.n_theta, grid.dtheta)[None, :]
    mask = np.asarray(region)
    if mask.shape != (grid.n_r, grid.n_theta):
        raise ValueError("mask shape does not match grid")
    w = grid.radial_weights()[:, None] * grid.dtheta
    return np.where(mask, w, 0.0)


def integrate(form: AreaForm, region="sphere") -> float:
    """Composite midpoint quadrature of the density over a region."""
    w = region_weights(form.grid, region)
    return float(np.sum(form.density * w))


def quadrature_mass(grid: Grid, density, region="sphere") -> float:
    """Same rule applied to a bare density array."""
    w = region_weights(grid, region)
    return float(np.sum(np.asarray(density) * w))
