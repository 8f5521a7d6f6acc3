import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jacmap import sphere_geom as sg
from jacmap import maps as mp
from jacmap import functionals as fn
from jacmap._util import TWO_PI, angdiff


def constant_map(r0=1.3, t0=0.7):
    return mp.AnalyticMap(
        lambda r, t: (np.full_like(np.asarray(r, dtype=float), r0),
                      np.full_like(np.asarray(t, dtype=float), t0)),
        name="constant")


def theta_fold_map():
    """Folds the circle across theta = 0: every arc is doubly covered."""
    def fun(r, t):
        return r, np.abs(angdiff(t, 0.0))
    return mp.AnalyticMap(fun, name="theta-fold")


def test_image_mask_identity(grid128):
    mask = fn.image_mask(mp.identity_map(), grid128, 2)
    assert mask.all()


def test_image_mask_constant(grid128):
    mask = fn.image_mask(constant_map(), grid128, 2)
    assert 1 <= mask.sum() <= 4


def test_image_mask_fold(params_q1, grid128):
    mask = fn.image_mask(mp.fold_map(params_q1), grid128, 4)
    rr, _ = grid128.mesh()
    covered_r = rr[mask]
    assert covered_r.min() > 1.0 - 2 * grid128.dr
    assert np.all(mask[rr >= 1.0 + grid128.dr])


def test_overlap_near_zero_for_injective(params_q1, sigma256, grid256):
    for t in (0.0, 0.5, 1.0):
        f = mp.collapse_family(t, params_q1)
        mask = fn.image_mask(f, grid256, 4)
        bound = fn.mask_boundary_mass(grid256, mask, sigma256)
        o = fn.overlap(f, sigma256, grid256, mask=mask)
        assert abs(o) < bound


def test_missed_area_values(params_q1, sigma256, grid256):
    lam = sg.SIGMA_SLOPE
    f0 = mp.fold_map(params_q1)
    mask = fn.image_mask(f0, grid256, 4)
    bound = fn.mask_boundary_mass(grid256, mask, sigma256)
    ma0 = fn.missed_area(f0, sigma256, grid256, mask=mask)
    assert ma0 == pytest.approx(np.pi * lam, abs=bound)
    ma1 = fn.missed_area(mp.collapse_family(1.0, params_q1), sigma256,
                         grid256, supersample=8)
    assert abs(ma1) < 2e-3
    mac = fn.missed_area(constant_map(), sigma256, grid256)
    assert mac == pytest.approx(1.0, abs=1e-3)


def test_missed_area_decreasing(params_q1, sigma256, grid256):
    mas = [fn.missed_area(mp.collapse_family(t, params_q1), sigma256, grid256,
                          supersample=8)
           for t in (0.0, 0.25, 0.5, 0.75, 1.0)]
    assert all(b < a for a, b in zip(mas, mas[1:]))
    # the exact value is known from the radial profile: pi*slope*(1-t^2)
    lam = sg.SIGMA_SLOPE
    for t, ma in zip((0.0, 0.25, 0.5, 0.75), mas):
        assert ma == pytest.approx(np.pi * lam * (1 - t * t), abs=3e-3)


def test_degree_values(params_q1, sigma256, grid256):
    assert fn.degree(mp.identity_map(), sigma256, grid256, cross_check=True) == 1
    assert fn.degree(mp.rotation(0.8), sigma256, grid256, cross_check=True) == 1
    for t in (0.0, 0.5, 1.0):
        assert fn.degree(mp.collapse_family(t, params_q1), sigma256, grid256) == 0
    assert fn.degree(mp.collapse_family(0.5, params_q1), sigma256, grid256,
                     cross_check=True) == 0


def test_estimator_identity_exact(params_q1, sigma256, grid256):
    total = sg.integrate(sigma256, "sphere")
    for f in (mp.fold_map(params_q1), mp.collapse_family(0.5, params_q1)):
        mask = fn.image_mask(f, grid256, 4)
        o = fn.overlap(f, sigma256, grid256, mask=mask)
        ma = fn.missed_area(f, sigma256, grid256, mask=mask)
        hemi = fn.hemisphere_mass(f, sigma256, grid256)
        im = fn.mask_mass(grid256, sigma256.density, mask)
        assert o + ma == pytest.approx(hemi - 2 * im + total, abs=1e-12)


def test_net_counts_and_radius():
    net = fn.net_intervals(3)
    assert len(net.intervals) == 8
    assert all(a.radius == pytest.approx(TWO_PI / 80) for a in net.intervals)
    net1 = fn.net_intervals(1)
    centers = sorted(a.center % TWO_PI for a in net1.intervals)
    assert centers[0] == pytest.approx(0.0) or centers[0] == pytest.approx(TWO_PI)
    assert np.pi in [pytest.approx(c) for c in centers]


def test_net_disjoint():
    net = fn.net_intervals(4)
    arcs = net.intervals
    for i in range(len(arcs)):
        for j in range(i + 1, len(arcs)):
            gap = abs(angdiff(arcs[i].center, arcs[j].center))
            assert gap > arcs[i].radius + arcs[j].radius


def test_net_nesting():
    coarse = fn.net_intervals(2)
    fine = fn.net_intervals(5)
    for big in coarse.intervals:
        assert any(big.contains_arc(small) for small in fine.intervals)


def test_net_total_length():
    for i in (1, 3, 6):
        assert fn.net_intervals(i).total_length == pytest.approx(TWO_PI / 5)


def test_net_scattered_and_small():
    # every arc of length 1 on the circle contains a full level-6 interval,
    # checked over all starting points on a fine sample grid
    net = fn.net_intervals(6)
    starts = np.linspace(0, TWO_PI, 1024, endpoint=False)
    r = 1.0
    for s in starts:
        lo, hi = s, s + r
        ok = any(angdiff(a.center - a.radius, lo) >= 0
                 and angdiff(a.center + a.radius, lo) <= r
                 for a in net.intervals
                 if 0 <= float(angdiff(a.center, lo)) <= r)
        assert ok


def test_immerses(params_q1):
    arc = fn.net_intervals(3).intervals[0]
    assert fn.immerses(mp.fold_map(params_q1), arc, 1e-3)
    assert not fn.immerses(mp.collapse_family(1.0, params_q1), arc, 1e-3)
    assert not fn.immerses(constant_map(), arc, 1e-3)


def test_transverse_immersion(params_q1):
    arc = fn.net_intervals(3).intervals[0]
    assert fn.transversely_immerses(mp.fold_map(params_q1), arc, 1e-3)
    # the theta-fold doubles every arc onto itself pointwise
    assert fn.immerses(theta_fold_map(), arc, 1e-3)
    assert not fn.transversely_immerses(theta_fold_map(), arc, 1e-3)
    assert not fn.transversely_immerses(mp.collapse_family(1.0, params_q1),
                                        arc, 1e-3)


def test_overlap_report_json(tmp_path, params_q1, sigma128, grid128):
    rep = fn.overlap_report(mp.collapse_family(0.5, params_q1), sigma128,
                            grid128)
    path = tmp_path / "report.json"
    rep.to_json(path)
    import json
    data = json.loads(path.read_text())
    for key in ("overlap", "missed_area", "degree", "hemisphere_mass",
                "surjective", "overlaps", "error_bound"):
        assert key in data
    assert data["degree"] == 0
    assert data["surjective"] is False
    assert data["overlaps"] is False


def test_overlap_report_consistency(params_q1, sigma128, grid128):
    rep = fn.overlap_report(mp.collapse_family(0.25, params_q1), sigma128,
                            grid128)
    assert rep.overlap >= -rep.error_bound
    assert rep.missed_area >= -rep.error_bound
    assert rep.surjective == (rep.missed_area < rep.error_bound)
    assert rep.overlaps == (rep.overlap > rep.error_bound)


@settings(max_examples=10, deadline=None)
@given(i=st.integers(min_value=1, max_value=7))
def test_net_geometry_properties(i):
    net = fn.net_intervals(i)
    assert len(net.intervals) == 2 ** i
    assert net.total_length == pytest.approx(TWO_PI / 5)
