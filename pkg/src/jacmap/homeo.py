"""Disc homeomorphisms induced by hemisphere-matching, and their winding.

A fold-type map sends each lower-hemisphere point to the same image as a
unique upper-hemisphere point; matching the two and normalizing by the
matching of the loop's base map yields a homeomorphism of the open lower
disc.  Tracking a base point's angle around a loop of such homeomorphisms
gives the integer winding invariant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import TWO_PI, angdiff, chart_dist, embed3, interp_grid, wrap_angle
from .maps import SphereMap
from .functionals import ArcInterval

# the disc angle is -theta: with that chart the matching loop built from a
# positively rotated upper-hemisphere branch winds positively
DISC_ANGLE_SIGN = -1.0


class MatchingError(RuntimeError):
    pass


class LiftError(RuntimeError):
    pass


@dataclass
class DiscHomeo:
    """Homeomorphism of the open lower disc, sampled on polar rows.

    rows are radii in [0, 1); r_out/theta_out give the image in the same
    polar chart.  boundary_trace is the continuous lift of the angular
    image on the outermost sampled ring.  eval interpolates the samples
    unless an exact evaluator eval_fn was attached at construction.
    """

    rows: np.ndarray
    thetas: np.ndarray
    r_out: np.ndarray
    theta_out: np.ndarray
    eval_fn: object = None

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float)
        self.thetas = np.asarray(self.thetas, dtype=float)
        self.r_out = np.asarray(self.r_out, dtype=float)
        self.theta_out = np.asarray(self.theta_out, dtype=float)
        shape = (self.rows.size, self.thetas.size)
        if self.r_out.shape != shape or self.theta_out.shape != shape:
            raise ValueError("sample shape mismatch")

    @classmethod
    def from_callable(cls, fn, rows=None, n_theta=96):
        rows = default_rows() if rows is None else np.asarray(rows, dtype=float)
        thetas = np.arange(n_theta) * (TWO_PI / n_theta)
        rr = np.broadcast_to(rows[:, None], (rows.size, n_theta))
        tt = np.broadcast_to(thetas[None, :], rr.shape)
        ro, to = fn(rr, tt)
        return cls(rows, thetas, np.asarray(ro, dtype=float),
                   wrap_angle(np.asarray(to, dtype=float)), eval_fn=fn)

    @property
    def boundary_trace(self):
        lift = np.unwrap(self.theta_out[-1])
        return lift

    def eval(self, r, theta):
        """Image of arbitrary disc points (exact when eval_fn is present)."""
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if self.eval_fn is not None:
            ro, to = self.eval_fn(r, theta)
            return np.clip(ro, 0.0, 1.0), wrap_angle(to)
        ri = np.interp(r, self.rows, np.arange(self.rows.size))
        ti = wrap_angle(theta) / (TWO_PI / self.thetas.size)
        dr = interp_grid(self.r_out - self.rows[:, None], ri, ti, order=1)
        dt = interp_grid(wrap_theta_disp(self.theta_out, self.thetas), ri, ti, order=1)
        return np.clip(r + dr, 0.0, 1.0), wrap_angle(theta + dt)

    def max_displacement(self, r_max=1.0):
        sel = self.rows <= r_max + 1e-12
        rr = np.broadcast_to(self.rows[sel, None], (sel.sum(), self.thetas.size))
        tt = np.broadcast_to(self.thetas[None, :], rr.shape)
        return float(np.max(chart_dist(self.r_out[sel], self.theta_out[sel], rr, tt)))

    def to_csv(self, path):
        rr = np.broadcast_to(self.rows[:, None], self.r_out.shape)
        tt = np.broadcast_to(self.thetas[None, :], self.r_out.shape)
        rows = np.column_stack([rr.ravel(), tt.ravel(),
                                self.r_out.ravel(), self.theta_out.ravel()])
        np.savetxt(path, rows, delimiter=",",
                   header="r,theta,r_out,theta_out", comments="")


def wrap_theta_disp(theta_out, thetas):
    return angdiff(theta_out, thetas[None, :])


def default_rows():
    """Polar sample radii; includes the rings probed by fixes_interval.

    The exact center is excluded: it is the collapsed pole row of the
    chart, where the matching is angularly degenerate.
    """
    return np.concatenate([np.linspace(0.05, 0.85, 17), [0.9, 0.95, 0.99]])


def identity_homeo(rows=None, n_theta=96) -> DiscHomeo:
    rows = default_rows() if rows is None else np.asarray(rows, dtype=float)
    thetas = np.arange(n_theta) * (TWO_PI / n_theta)
    r_out = np.broadcast_to(rows[:, None], (rows.size, n_theta)).copy()
    t_out = np.broadcast_to(thetas[None, :], (rows.size, n_theta)).copy()
    return DiscHomeo(rows, thetas, r_out, t_out)


GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def _match_rows(h: SphereMap, r_lows, thetas, tol, n_scan=256,
                iters=(30, 46, 28)):
    """Match lower-hemisphere rings to upper-hemisphere partners, in lockstep.

    Coarse scan over candidate angles on each mirror ring, then a
    golden-section refinement of the angle with a radial solve nested
    inside: bisection on the image height (monotone along upper rays for
    fold-type maps) followed by a short distance polish.  Raises when a
    scan finds two well-separated angular clusters within tolerance, or
    the refined match misses entirely.

    iters = (angle iterations, radial bisections, radial polish); the
    defaults resolve analytic maps to ~1e-8, winding loops get by with
    much less.
    """
    outer_iters, bisect_iters, polish_iters = iters
    n, m = r_lows.size, thetas.size
    rr = np.broadcast_to(r_lows[:, None], (n, m))
    tt = np.broadcast_to(thetas[None, :], (n, m))
    target = embed3(*h.eval(rr, tt))                       # (n, m, 3)

    scan_t = np.arange(n_scan) * (TWO_PI / n_scan)
    cand = embed3(*h.eval(
        np.broadcast_to(2.0 - r_lows[:, None], (n, n_scan)),
        np.broadcast_to(scan_t[None, :], (n, n_scan))))    # (n, n_scan, 3)
    d = np.linalg.norm(target[:, :, None, :] - cand[:, None, :, :], axis=-1)
    best = np.argmin(d, axis=2)                            # (n, m)
    d_best = np.take_along_axis(d, best[..., None], axis=2)[..., 0]

    hits = d < (d_best + tol)[..., None]
    spread = np.abs(angdiff(scan_t[None, None, :], scan_t[best][..., None]))
    if np.any(hits & (spread > 0.5)):
        raise MatchingError("matching is not unique: distant candidates "
                            "within tolerance of the best match")

    def image_dist(theta_y, r_y):
        return np.linalg.norm(embed3(*h.eval(r_y, theta_y)) - target, axis=-1)

    t_height = target[..., 2]

    def best_radius(theta_y):
        lo = np.full((n, m), 1.0 + 1e-9)
        hi = np.full((n, m), 2.0 - 1e-12)
        for _ in range(bisect_iters):
            mid = 0.5 * (lo + hi)
            hm, _ = h.eval(mid, theta_y)
            take_hi = hm < t_height
            lo = np.where(take_hi, mid, lo)
            hi = np.where(take_hi, hi, mid)
        r_y = 0.5 * (lo + hi)
        a = np.maximum(r_y - 0.02, 1.0 + 1e-9)
        b = np.minimum(r_y + 0.02, 2.0)
        c = b - GOLDEN * (b - a)
        e = a + GOLDEN * (b - a)
        fc = image_dist(theta_y, c)
        fe = image_dist(theta_y, e)
        for _ in range(polish_iters):
            swap = fc < fe
            b = np.where(swap, e, b)
            a = np.where(swap, a, c)
            c, e = np.where(swap, b - GOLDEN * (b - a), e), \
                np.where(swap, c, a + GOLDEN * (b - a))
            fc = image_dist(theta_y, c)
            fe = image_dist(theta_y, e)
        return 0.5 * (a + b)

    width = 1.5 * TWO_PI / n_scan
    a = scan_t[best] - width
    b = scan_t[best] + width
    c = b - GOLDEN * (b - a)
    e = a + GOLDEN * (b - a)
    fc = image_dist(c, best_radius(c))
    fe = image_dist(e, best_radius(e))
    for _ in range(outer_iters):
        swap = fc < fe
        b = np.where(swap, e, b)
        a = np.where(swap, a, c)
        c, e = np.where(swap, b - GOLDEN * (b - a), e), \
            np.where(swap, c, a + GOLDEN * (b - a))
        fc = image_dist(c, best_radius(c))
        fe = image_dist(e, best_radius(e))
    theta_y = 0.5 * (a + b)
    r_y = best_radius(theta_y)
    final = image_dist(theta_y, r_y)
    if np.any(final > max(10 * tol, 1e-6)):
        raise MatchingError(f"no matching partner within tolerance "
                            f"(worst {final.max():.2e})")
    return r_y, theta_y


def hemisphere_matching(h: SphereMap, tol=1e-8, rows=None, n_theta=96,
                        iters=(30, 46, 28)):
    """The raw lower-to-upper matching (before base-map normalization)."""
    rows = default_rows() if rows is None else np.asarray(rows, dtype=float)
    thetas = np.arange(n_theta) * (TWO_PI / n_theta)
    # the lower disc is charted by its own chart radius: rho = r on H-
    return _match_rows(h, rows, thetas, tol, iters=iters)


def induced_matching(h: SphereMap, tol: float = 1e-8,
                     rows=None, n_theta: int = 96,
                     iters=(30, 46, 28)) -> DiscHomeo:
    """Disc homeomorphism from hemisphere matching, mirror-normalized.

    For each lower-disc sample the unique upper-hemisphere point with the
    same image is found; composing with the inverse of the base fold's
    matching (the exact mirror r -> 2 - r) brings it back to the lower
    disc, which is charted by its own chart radius.
    """
    rows = default_rows() if rows is None else np.asarray(rows, dtype=float)
    r_up, t_up = hemisphere_matching(h, tol=tol, rows=rows, n_theta=n_theta,
                                     iters=iters)
    thetas = np.arange(n_theta) * (TWO_PI / n_theta)
    # mirror normalization sends the matched point back down: r -> 2 - r
    rho_out = np.clip(2.0 - r_up, 0.0, 1.0)
    return DiscHomeo(rows, thetas, rho_out, wrap_angle(t_up))


def disc_angle(theta):
    return DISC_ANGLE_SIGN * np.asarray(theta, dtype=float)


def winding_number(homeos, base_point=(0.5, 0.0), closure_tol=1e-6) -> int:
    """Integer winding of the tracked base-point angle around a closed loop.

    The loop must close (first and last homeomorphisms agree at the base
    point) and be sampled densely enough that consecutive angle steps stay
    below pi; otherwise a LiftError asks for finer sampling.
    """
    r0, t0 = base_point
    angles = []
    radii = []
    for psi in homeos:
        ro, to = psi.eval(np.array([r0]), np.array([t0]))
        radii.append(float(ro[0]))
        angles.append(disc_angle(float(to[0])))
    angles = np.asarray(angles)
    steps = angdiff(angles[1:], angles[:-1])
    if np.any(np.abs(steps) > np.pi - 1e-9):
        raise LiftError("angle lift is ambiguous; sample the loop more finely")
    gap = chart_dist(np.array(radii[0]), np.array(angles[0] * DISC_ANGLE_SIGN),
                     np.array(radii[-1]), np.array(angles[-1] * DISC_ANGLE_SIGN))
    if gap > closure_tol + 1e-12:
        raise LiftError(f"loop does not close at the base point (gap {gap:.2e})")
    total = float(np.sum(steps))
    return int(np.rint(total / TWO_PI))


def fixes_interval(psi: DiscHomeo, arc: ArcInterval, tol: float,
                   rings=(0.9, 0.95, 0.99), n_samples: int = 64) -> bool:
    """Does the homeomorphism extend to the identity on the boundary arc?

    Checks that the displacement over the arc decreases along rings
    approaching the boundary and falls below tol on the outermost ring.
    """
    sup = []
    for ring in rings:
        th = arc.samples(n_samples)
        rr = np.full(n_samples, ring)
        ro, to = psi.eval(rr, th)
        sup.append(float(np.max(chart_dist(ro, to, rr, th))))
    decreasing = all(sup[i + 1] <= sup[i] + tol for i in range(len(sup) - 1))
    return decreasing and sup[-1] < tol
