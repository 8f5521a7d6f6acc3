import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jacmap import sphere_geom as sg
from jacmap import maps as mp
from jacmap import functionals as fn
from jacmap._util import angdiff, chart_dist


def test_fold_fixes_equator(params_q1):
    f = mp.fold_map(params_q1)
    thetas = np.linspace(0, 2 * np.pi, 9)
    ro, to = f.eval(np.ones_like(thetas), thetas)
    assert np.allclose(ro, 1.0)
    assert np.allclose(angdiff(to, thetas), 0.0)


def test_fold_sends_poles_up(params_q1):
    f = mp.fold_map(params_q1)
    for r in (0.0, 2.0):
        ro, _ = f.eval(np.array([r]), np.array([0.3]))
        assert ro[0] == pytest.approx(2.0)


def test_fold_orientation(params_q1, grid256):
    f = mp.fold_map(params_q1)
    rr, tt = grid256.mesh()
    j = f.jacobian(rr, tt)
    det = j[0] * j[3] - j[1] * j[2]
    interior = slice(1, -1)
    assert np.all(det[rr > 1.0] > 0)
    assert np.all(det[(rr < 1.0) & (rr > 0.0)] < 0)


def test_fold_degree_zero(params_q1, sigma256, grid256):
    f = mp.fold_map(params_q1)
    assert fn.degree(f, sigma256, grid256, cross_check=True) == 0


def test_fold_pullback_near_equator(params_q1, sigma256, grid256):
    # closed form from differentiating the fold: slope*(2q+2)*y^(2q+1)*(1+y^(2q+2))
    q = params_q1.q
    f = mp.fold_map(params_q1)
    pb = mp.pullback(f, sigma256, grid256)
    rr, _ = grid256.mesh()
    y = rr - 1.0
    c = sg.SIGMA_SLOPE * (2 * q + 2)
    closed = c * y ** (2 * q + 1) * (1 + y ** (2 * q + 2))
    sel = np.abs(y) < 0.2
    assert np.max(np.abs(pb.density - closed)[sel]) < 1e-12


def test_pullback_identity(sigma256, grid256):
    pb = mp.pullback(mp.identity_map(), sigma256, grid256)
    assert np.max(np.abs(pb.density - sigma256.density)) < 1e-12


def test_pullback_rotation(sigma256, grid256):
    pb = mp.pullback(mp.rotation(0.731), sigma256, grid256)
    assert np.max(np.abs(pb.density - sigma256.density)) < 1e-12


def test_compress_validation(params_q1):
    with pytest.raises(ValueError):
        mp.vertical_compress(1.2, params_q1)


def test_compress_identity_at_zero(params_q1):
    c = mp.vertical_compress(0.0, params_q1)
    r = np.linspace(1.0, 2.0, 33)
    ro, _ = c.eval(r, np.zeros_like(r))
    assert np.allclose(ro, r, atol=1e-14)


def test_compress_fold_level(params_q1):
    for t in (0.25, 0.6, 1.0):
        c = mp.vertical_compress(t, params_q1)
        ro, _ = c.eval(np.array([1.0]), np.array([0.0]))
        assert ro[0] == pytest.approx(np.sqrt(1 - t * t), abs=1e-14)


def test_compress_preserves_reference_form(params_q1, sigma256, grid256):
    rr, _ = grid256.mesh()
    band = (rr >= 1.0) & (rr <= 1.25)
    for t in (0.3, 0.7, 0.95):
        c = mp.vertical_compress(t, params_q1)
        analytic = mp.pullback(c, sigma256, grid256)
        assert np.max(np.abs(analytic.density - sigma256.density)[band]) < 1e-12
        numeric = mp.pullback(c, sigma256, grid256, jacobian="fd", step=1e-4)
        assert np.max(np.abs(numeric.density - sigma256.density)[band]) < 1e-6


def test_collapse_levels(params_q1):
    for t in (0.0, 0.5, 1.0):
        f = mp.collapse_family(t, params_q1)
        ro, _ = f.eval(np.array([1.0]), np.array([1.0]))
        assert ro[0] == pytest.approx(np.sqrt(1 - t * t), abs=1e-13)


def test_collapse_pullback_stationary(params_q1, sigma256, grid256):
    rr, _ = grid256.mesh()
    collar = np.abs(rr - 1.0) < 0.1
    base = mp.pullback(mp.fold_map(params_q1), sigma256, grid256).density
    for t in (0.25, 0.5, 1.0):
        pb = mp.pullback(mp.collapse_family(t, params_q1), sigma256, grid256)
        assert np.max(np.abs(pb.density - base)[collar]) < 1e-10


def test_collapse_hemisphere_diffeo(params_q1):
    # restricted to the open upper hemisphere the map is monotone onto the
    # cap above the fold level
    f = mp.collapse_family(0.5, params_q1)
    r = np.linspace(1.0 + 1e-6, 2.0, 500)
    ro, _ = f.eval(r, np.zeros_like(r))
    assert np.all(np.diff(ro) > 0)
    assert ro[0] == pytest.approx(np.sqrt(0.75), abs=1e-5)
    assert ro[-1] == pytest.approx(2.0)


def test_rotation_group_laws():
    r = np.linspace(0, 2, 17)
    t = np.linspace(0, 2 * np.pi, 17, endpoint=False)
    for alpha in (0.0, 2 * np.pi):
        m = mp.rotation(alpha)
        ro, to = m.eval(r, t)
        assert np.allclose(ro, r)
        assert np.max(np.abs(angdiff(to, t))) < 1e-12
    comp = mp.compose(mp.rotation(np.pi), mp.rotation(np.pi))
    ro, to = comp.eval(r, t)
    assert np.max(np.abs(angdiff(to, t))) < 1e-12


@settings(max_examples=25, deadline=None)
@given(alpha=st.floats(min_value=-10, max_value=10))
def test_rotation_inverse(alpha):
    t = np.linspace(0, 2 * np.pi, 13, endpoint=False)
    comp = mp.compose(mp.rotation(-alpha), mp.rotation(alpha))
    _, to = comp.eval(np.ones_like(t), t)
    assert np.max(np.abs(angdiff(to, t))) < 1e-10


def test_fd_jacobian_second_order(params_q1):
    maps_to_try = [mp.fold_map(params_q1), mp.vertical_compress(0.6, params_q1),
                   mp.rotation(1.1)]
    r = np.linspace(1.05, 1.6, 40)
    t = np.linspace(0, 2 * np.pi, 40, endpoint=False)
    for m in maps_to_try:
        exact = m.jacobian(r, t)[0]
        errs = []
        for h in (2e-3, 1e-3):
            approx = mp.fd_jacobian(m, r, t, h)[0]
            errs.append(np.max(np.abs(approx - exact)))
        if errs[1] < 1e-14:
            continue  # exactly linear maps have no truncation error
        assert 3.0 < errs[0] / errs[1] < 5.0


def test_pullback_functorial(params_q1, sigma256, grid256):
    g = mp.rotation(0.9)
    f = mp.fold_map(params_q1)
    lhs = mp.pullback(mp.compose(g, f), sigma256, grid256)
    rhs = mp.pullback(f, mp.pullback(g, sigma256, grid256), grid256)
    assert np.max(np.abs(lhs.density - rhs.density)) < 1e-6


def test_twist_loop_closure(params_q1, grid128):
    rr, tt = grid128.mesh()
    h0 = mp.twist_loop(0.0, params_q1)
    h1 = mp.twist_loop(1.0, params_q1)
    f0 = mp.fold_map(params_q1)
    for h in (h0, h1):
        d = chart_dist(*h.eval(rr, tt), *f0.eval(rr, tt))
        assert np.max(d) < 1e-12


def test_twist_half_is_rotated_collapse(params_q1, grid128):
    rr, tt = grid128.mesh()
    upper = rr > 1.0
    h = mp.twist_loop(0.5, params_q1)
    ref = mp.compose(mp.rotation(np.pi), mp.collapse_family(1.0, params_q1))
    d = chart_dist(*h.eval(rr, tt), *ref.eval(rr, tt))
    assert np.max(d[upper]) < 1e-12


def test_twist_loop_continuity(params_q1, grid128):
    rr, tt = grid128.mesh()
    sups = []
    for delta in (1e-2, 1e-3):
        worst = 0.0
        for t in (0.2, 0.45, 0.8):
            a = mp.twist_loop(t, params_q1)
            b = mp.twist_loop(t + delta, params_q1)
            worst = max(worst, float(np.max(chart_dist(*a.eval(rr, tt),
                                                       *b.eval(rr, tt)))))
        sups.append(worst)
    assert sups[1] < 0.2 * sups[0]


def test_twist_local_diffeo(params_q1, grid128):
    rr, tt = grid128.mesh()
    interior = (np.abs(rr - 1.0) > 2 * grid128.dr) & (rr > 0.05) & (rr < 1.95)
    for t in (0.1, 0.35, 0.5, 0.9):
        h = mp.twist_loop(t, params_q1)
        j = h.jacobian(rr, tt)
        det = j[0] * j[3] - j[1] * j[2]
        assert np.all(np.abs(det[interior]) > 0)


def test_jet_vanishes_examples(params_q1):
    q = params_q1.q
    f1 = mp.collapse_family(1.0, params_q1)
    assert mp.jet_vanishes(f1, q, 1e-4)
    assert not mp.jet_vanishes(mp.identity_map(), 1, 1e-4)
    assert mp.jet_vanishes(mp.fold_map(params_q1), q, 1e-4)


def test_map_csv(tmp_path, params_q1, grid128):
    path = tmp_path / "map.csv"
    mp.fold_map(params_q1).to_csv(path, grid128)
    header = path.read_text().splitlines()[0]
    assert header == "r,theta,r_out,theta_out"


def test_pullback_zeroes_singular_jacobian(params_q1, sigma256, grid256):
    # the fully collapsed map has a singular compression at the equator
    # image; the pullback must produce zeros there, not failures
    f = mp.collapse_family(1.0, params_q1)
    pb = mp.pullback(f, sigma256, grid256)
    assert np.all(np.isfinite(pb.density))
