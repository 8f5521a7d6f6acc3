import numpy as np
import pytest

from jacmap import sphere_geom as sg
from jacmap import maps as mp
from jacmap import moser as ms
from jacmap._util import window


def azimuthal_shift_fn(eps=0.1):
    def fun(r, t):
        bump = window(np.abs(np.asarray(r, dtype=float) - 1.0), 0.35, 0.6)
        return sg.sigma_density(r) * (1.0 + eps * np.cos(t) * bump)
    return fun


def azimuthal_form(grid, eps=0.1):
    fun = azimuthal_shift_fn(eps)
    rr, tt = grid.mesh()
    return sg.AreaForm(grid, fun(rr, tt), density_fn=fun)


@pytest.fixture(scope="module")
def flow256(grid256, sigma256):
    nu1 = azimuthal_form(grid256)
    path = ms.moser_flow(sigma256, nu1, steps=64)
    return path, nu1


def test_primitive_zero(grid256):
    diff = sg.AreaForm(grid256, np.zeros((grid256.n_r, grid256.n_theta)))
    alpha = ms.solve_primitive(diff)
    assert np.max(np.abs(alpha.a)) < 1e-14
    assert np.max(np.abs(alpha.b_rad)) < 1e-14


def test_primitive_rejects_nonexact(grid256, sigma256):
    bad = sg.AreaForm(grid256, 0.1 * sigma256.density)
    with pytest.raises(ValueError, match="not exact"):
        ms.solve_primitive(bad)


def test_primitive_manufactured_residual(grid256):
    rr, tt = grid256.mesh()
    chi = np.sin(np.pi * np.clip((rr - 0.5), 0, 1)) ** 4
    dens = 0.01 * np.cos(tt) * chi
    diff = sg.AreaForm(grid256, dens)
    alpha = ms.solve_primitive(diff)
    resid = np.max(np.abs(ms.discrete_curl(alpha) - dens))
    assert resid < 1e-6
    # pole rows of the angular component vanish after the collar correction
    assert np.max(np.abs(alpha.b_rad[0])) < 1e-13
    assert np.max(np.abs(alpha.b_rad[-1])) < 1e-13


def test_primitive_matches_known_potential():
    # potential chi(r) cos(theta) with chi supported away from the poles:
    # b = u_r = chi'(r) cos(theta) away from the collar correction zone
    g = sg.make_grid(256, 256)
    rr, tt = g.mesh()
    s = np.clip((rr - 0.6) / 0.8, 0.0, 1.0)
    chi = np.sin(np.pi * s) ** 2 * 0.01
    dchi = np.gradient(chi[:, 0], g.r)
    d2chi = np.gradient(dchi, g.r)
    dens = (d2chi[:, None] - chi / 1.0) * np.cos(tt)
    diff = sg.AreaForm(g, dens - 0.0)
    alpha = ms.solve_primitive(diff)
    b_nodes = alpha.b_nodes()
    expected = dchi[:, None] * np.cos(tt)
    mid = (rr > 0.7) & (rr < 1.3)
    assert np.max(np.abs(b_nodes - expected)[mid]) < 5e-3


def test_identity_flow(grid128, sigma128):
    path = ms.moser_flow(sigma128, sigma128, steps=8)
    assert np.max(path.residuals) < 1e-10
    assert np.max(path.inverse_residual) < 1e-12


def test_flow_starts_at_identity(flow256):
    path, _ = flow256
    assert path.times[0] == 0.0
    assert path.residuals[0] < 1e-10


def test_manufactured_endpoint(flow256):
    path, _ = flow256
    assert path.residuals[-1] < 1e-3


def test_mass_conservation(flow256, sigma256):
    path, _ = flow256
    for m in path.maps:
        pb = mp.pullback(m, sigma256)
        assert abs(pb.total - sigma256.total) < 1e-5


def test_refinement_ratio(grid128, sigma128, flow256):
    path256, _ = flow256
    nu1 = azimuthal_form(grid128)
    path128 = ms.moser_flow(sigma128, nu1, steps=64)
    assert path128.residuals[-1] / path256.residuals[-1] >= 3.0


def test_step_halving(grid256, sigma256, flow256):
    path64, nu1 = flow256
    path32 = ms.moser_flow(sigma256, nu1, steps=32)
    rel = abs(path32.residuals[-1] - path64.residuals[-1]) / path64.residuals[-1]
    assert rel < 0.1


def test_swap_composes_to_identity(grid256, sigma256, flow256):
    path_fwd, nu1 = flow256
    path_back = ms.moser_flow(nu1, sigma256, steps=64)
    composed = mp.compose(path_back.endpoint, path_fwd.endpoint)
    pb = mp.pullback(composed, sigma256)
    resid = sg.quadrature_mass(grid256, np.abs(pb.density - sigma256.density))
    assert resid < 2.0 * (path_fwd.residuals[-1] + path_back.residuals[-1])


def test_truncated_transport_is_worse(grid256, sigma256, flow256):
    # a path that only transported halfway reads as a large residual
    # against the full target pair
    path_full, nu1 = flow256
    rr, tt = grid256.mesh()
    half_fn = lambda r, t: 0.5 * sg.sigma_density(r) + 0.5 * azimuthal_shift_fn()(r, t)
    nu_half = sg.AreaForm(grid256, half_fn(rr, tt), density_fn=half_fn)
    path_half = ms.moser_flow(sigma256, nu_half, steps=32)
    full = ms.verify_transport(path_full, sigma256, nu1)
    trunc = ms.verify_transport(path_half, sigma256, nu1)
    assert trunc > 10 * full


def test_verify_matches_reported(flow256, sigma256):
    path, nu1 = flow256
    worst = ms.verify_transport(path, sigma256, nu1)
    assert worst == pytest.approx(np.max(path.residuals), rel=1e-2)


def test_mass_precondition(grid128, sigma128):
    bad = sg.AreaForm(grid128, sigma128.density * 1.01)
    with pytest.raises(ms.TransportError, match="mass"):
        ms.moser_flow(sigma128, bad, steps=4)


def test_conditioning_guard(grid128, sigma128):
    nu1 = azimuthal_form(grid128, eps=0.5)
    with pytest.raises(ms.TransportError, match="conditioning"):
        ms.moser_flow(sigma128, nu1, steps=4, cond_bound=1.0)


def test_one_form_validation(grid128):
    with pytest.raises(ValueError):
        ms.OneForm(grid128, np.zeros((3, 3)), np.zeros((4, 3)))


def test_path_export(tmp_path, grid128, sigma128):
    path = ms.moser_flow(sigma128, azimuthal_form(grid128), steps=8)
    out = path.export(tmp_path, prefix="t")
    import json
    data = json.loads(open(out).read())
    assert len(data["times"]) == len(data["residuals"])
    csvs = list(tmp_path.glob("t_t*.csv"))
    assert len(csvs) == len(data["times"])