"""Finite-volume core: limiter, reconstruction, central-upwind fluxes,
well-balanced source, friction, positivity."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boussim import _kernels as k
from boussim.grid import GHOST, FieldState, Grid, PhysParams, build_bathymetry, still_state
from boussim.hydro import (
    NumericsParams,
    Workspace,
    central_upwind_flux,
    friction,
    minmod_slope,
    nlsw_divergence_and_source,
    reconstruct,
    speed_extrema,
)

G = 9.81


def extend_edges(state: FieldState) -> None:
    """Fill the ghost frame by copying the outermost interior values."""
    g = GHOST
    for arr in (state.w, state.p, state.q):
        arr[:, :g] = arr[:, g:g + 1]
        arr[:, -g:] = arr[:, -g - 1:-g]
        arr[:g, :] = arr[g:g + 1, :]
        arr[-g:, :] = arr[-g - 1:-g, :]


def mirror_walls(state: FieldState) -> None:
    """Reflective-wall ghosts on all four sides (w, tangential flux even;
    normal flux odd)."""
    g = GHOST
    w, p, q = state.w, state.p, state.q
    # south / north rows first, then west / east columns own the corners
    for arr, sign in ((w, 1.0), (p, 1.0), (q, -1.0)):
        arr[g - 1, :] = sign * arr[g, :]
        arr[g - 2, :] = sign * arr[g + 1, :]
        arr[-g, :] = sign * arr[-g - 1, :]
        arr[-g + 1, :] = sign * arr[-g - 2, :]
    for arr, sign in ((w, 1.0), (p, -1.0), (q, 1.0)):
        arr[:, g - 1] = sign * arr[:, g]
        arr[:, g - 2] = sign * arr[:, g + 1]
        arr[:, -g] = sign * arr[:, -g - 1]
        arr[:, -g + 1] = sign * arr[:, -g - 2]


def make_setup(nx=24, ny=12, dx=0.5, dy=0.5, bed_fn=None, ws=1.0):
    grid = Grid(nx=nx, ny=ny, dx=dx, dy=dy)
    if bed_fn is None:
        bed = np.zeros((ny, nx))
    else:
        xc, yc = np.meshgrid(grid.x_centers(), grid.y_centers())
        bed = bed_fn(xc, yc)
    bathy = build_bathymetry(grid, bed, ws=ws)
    return grid, bathy


# ---------------------------------------------------------------------------
# limiter


def test_minmod_frozen_cases():
    assert minmod_slope(0.0, 1.0, 2.0, theta=1.5) == 1.0
    assert minmod_slope(0.0, 1.0, 0.0, theta=1.5) == 0.0
    assert minmod_slope(3.0, 3.0, 3.0, theta=2.0) == 0.0
    assert minmod_slope(1.0, 2.0, 4.0, theta=1.5) == 1.5
    assert minmod_slope(4.0, 2.0, 1.0, theta=1.5) == -1.5


@given(
    a=st.floats(-50, 50), b=st.floats(-50, 50), c=st.floats(-50, 50),
    theta=st.floats(1.0, 2.0),
)
def test_minmod_properties(a, b, c, theta):
    s = minmod_slope(a, b, c, theta)
    cands = [theta * (b - a), 0.5 * (c - a), theta * (c - b)]
    if all(x > 0 for x in cands):
        assert s == min(cands)
    elif all(x < 0 for x in cands):
        assert s == max(cands)
    else:
        assert s == 0.0


def test_kernel_minmod_matches_reference():
    rng = np.random.default_rng(7)
    grid, bathy = make_setup(bed_fn=lambda x, y: 0.0 * x, ws=5.0)
    state = still_state(bathy)
    state.w += rng.normal(0, 0.3, size=state.w.shape)
    num = NumericsParams(theta=1.3)
    faces = reconstruct(state, bathy, num)
    # centered columns: left side of interface ii+1 is cell ii's east face
    w = state.w[GHOST:-GHOST, :]
    exp_slope = minmod_slope(w[:, GHOST - 1:-GHOST - 1], w[:, GHOST:-GHOST],
                             w[:, GHOST + 1:-GHOST + 1], theta=1.3)
    expected_east = w[:, GHOST:-GHOST] + 0.5 * exp_slope
    np.testing.assert_allclose(faces.x_left.w[:, 1:], expected_east, rtol=0, atol=1e-14)


# ---------------------------------------------------------------------------
# reconstruction


def test_reconstruct_linear_field_matches_interpolant():
    grid, bathy = make_setup(bed_fn=lambda x, y: 0.0 * x, ws=4.0)
    state = still_state(bathy)
    xp, yp = np.meshgrid(grid.x_centers_padded(), grid.y_centers_padded())
    state.w[:] = 4.0 + 0.25 * xp
    state.p[:] = 0.1 * xp
    faces = reconstruct(state, bathy, NumericsParams())
    x_iface = grid.x0 + np.arange(grid.nx + 1) * grid.dx
    expected_w = 4.0 + 0.25 * x_iface
    for side in (faces.x_left, faces.x_right):
        np.testing.assert_allclose(
            side.w, np.broadcast_to(expected_w, side.w.shape), rtol=1e-13)
        np.testing.assert_allclose(
            side.p, np.broadcast_to(0.1 * x_iface, side.p.shape), rtol=0, atol=1e-13)


def test_reconstruct_constant_state_over_bed():
    grid, bathy = make_setup(
        bed_fn=lambda x, y: 0.3 * np.sin(x) * np.cos(y), ws=3.0)
    state = still_state(bathy)
    faces = reconstruct(state, bathy, NumericsParams())
    np.testing.assert_array_equal(faces.x_left.w, np.full_like(faces.x_left.w, 3.0))
    np.testing.assert_array_equal(faces.x_left.h, faces.x_right.h)
    assert float(np.max(np.abs(faces.x_left.u))) == 0.0


def test_positivity_correction_frozen_example():
    # constant w = 0.5 with a face bed of 0.7: east face pinned at the bed,
    # west face pushed to 0.3 so the cell average is preserved
    w = np.full((5, 7), 0.5)
    p = np.zeros_like(w)
    q = np.zeros_like(w)
    bfx = np.zeros((5, 6))
    bfx[2, 3] = 0.7  # east face of cell (2, 3)
    out = [np.zeros_like(w) for _ in range(6)]
    k.faces_x(w, p, q, bfx, 1.5, *out)
    wE, wW = out[0], out[1]
    assert wE[2, 3] == 0.7
    assert wW[2, 3] == pytest.approx(0.3)
    # the neighbouring cell is untouched
    assert wE[2, 2] == 0.5 and wW[2, 2] == 0.5


def test_interface_depths_never_negative_on_steep_bed():
    rng = np.random.default_rng(42)
    grid, bathy = make_setup(
        nx=30, ny=10, bed_fn=lambda x, y: 2.0 * np.maximum(0, x - 6.0), ws=1.0)
    state = still_state(bathy)
    state.w[:] = np.maximum(state.w + rng.normal(0, 0.05, state.w.shape), bathy.bed)
    faces = reconstruct(state, bathy, NumericsParams())
    for side in (faces.x_left, faces.x_right, faces.y_left, faces.y_right):
        assert float(side.h.min()) >= 0.0


# ---------------------------------------------------------------------------
# central-upwind flux


def _uniform_sides(w, p, q, b, n=8):
    from boussim.hydro import SideValues
    h = np.full(n, max(w - b, 0.0))
    hstar = np.maximum(h, 1e-6)
    return SideValues(w=np.full(n, w), p=np.full(n, p), q=np.full(n, q),
                      h=h, u=np.full(n, p) / hstar, v=np.full(n, q) / hstar)


def test_flux_consistency_identical_states():
    left = _uniform_sides(1.0, 0.3, 0.1, 0.0)
    h1, h2, h3 = central_upwind_flux(left, left, G, axis="x")
    np.testing.assert_allclose(h1, 0.3, rtol=1e-15)
    np.testing.assert_allclose(h2, 0.3 ** 2 / 1.0 + 0.5 * G, rtol=1e-15)
    np.testing.assert_allclose(h3, 0.3 * 0.1, rtol=1e-15)


def test_flux_still_water_momentum():
    left = _uniform_sides(1.0, 0.0, 0.0, 0.0)
    h1, h2, h3 = central_upwind_flux(left, left, G, axis="x")
    assert float(np.max(np.abs(h1))) == 0.0
    np.testing.assert_allclose(h2, 4.905, rtol=1e-15)
    assert float(np.max(np.abs(h3))) == 0.0


def test_flux_dry_states_zero():
    left = _uniform_sides(0.0, 0.0, 0.0, 0.0)
    for axis in ("x", "y"):
        parts = central_upwind_flux(left, left, G, axis=axis)
        for comp in parts:
            np.testing.assert_array_equal(comp, np.zeros_like(comp))


def test_kernel_flux_matches_reference():
    rng = np.random.default_rng(3)
    grid, bathy = make_setup(
        nx=20, ny=9, bed_fn=lambda x, y: 0.4 * np.sin(0.7 * x) * np.cos(0.5 * y),
        ws=2.0)
    state = still_state(bathy)
    state.w += rng.normal(0, 0.2, state.w.shape)
    state.w[:] = np.maximum(state.w, bathy.bed)
    state.p[:] = rng.normal(0, 0.5, state.p.shape)
    state.q[:] = rng.normal(0, 0.5, state.q.shape)
    num = NumericsParams()
    phys = PhysParams()
    ws_ = Workspace.for_grid(grid)
    nlsw_divergence_and_source(state, bathy, num, phys, workspace=ws_)
    faces = reconstruct(state, bathy, num)
    ref_x = central_upwind_flux(faces.x_left, faces.x_right, phys.g, axis="x")
    ref_y = central_upwind_flux(faces.y_left, faces.y_right, phys.g, axis="y")
    for got, want in zip((ws_.fx1, ws_.fx2, ws_.fx3), ref_x):
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-13)
    for got, want in zip((ws_.fy1, ws_.fy2, ws_.fy3), ref_y):
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-13)


# ---------------------------------------------------------------------------
# divergence + source: balance, conservation, symmetry


def test_lake_at_rest_over_submerged_hump():
    def hump(x, y):
        return 0.6 * np.exp(-((x - 6.0) ** 2 + (y - 3.0) ** 2) / 4.0)

    grid, bathy = make_setup(bed_fn=hump, ws=1.0)
    state = still_state(bathy)
    rates = nlsw_divergence_and_source(state, bathy, NumericsParams(), PhysParams())
    for r in rates:
        assert float(np.max(np.abs(r))) <= 1e-13


def test_uniform_flow_flat_bed_zero_rates():
    grid, bathy = make_setup()
    state = still_state(bathy)
    state.w[:] = 2.0
    state.p[:] = 0.6
    rates = nlsw_divergence_and_source(state, bathy, NumericsParams(), PhysParams())
    for r in rates:
        assert float(np.max(np.abs(r))) == 0.0


def test_dam_break_rates_telescope_to_boundary_fluxes():
    grid, bathy = make_setup(nx=100, ny=5, dx=0.1, dy=0.1, ws=1.0)
    state = still_state(bathy)
    xp, _ = np.meshgrid(grid.x_centers_padded(), grid.y_centers_padded())
    state.w[:] = np.where(xp < 5.0, 1.0, 0.4)
    extend_edges(state)
    ws_ = Workspace.for_grid(grid)
    rw, _, _ = nlsw_divergence_and_source(
        state, bathy, NumericsParams(), PhysParams(), workspace=ws_)
    row_sums = rw.sum(axis=1) * grid.dx
    boundary = ws_.fx1[:, 0] - ws_.fx1[:, -1]
    np.testing.assert_allclose(row_sums, boundary, rtol=0, atol=1e-12)


def test_wall_mirror_gives_exactly_zero_continuity_flux():
    rng = np.random.default_rng(11)
    grid, bathy = make_setup(nx=16, ny=8, ws=2.0)
    state = still_state(bathy)
    state.w[:] += rng.normal(0, 0.1, state.w.shape)
    state.p[:] = rng.normal(0, 0.4, state.p.shape)
    state.q[:] = rng.normal(0, 0.4, state.q.shape)
    mirror_walls(state)
    ws_ = Workspace.for_grid(grid)
    nlsw_divergence_and_source(state, bathy, NumericsParams(), PhysParams(),
                               workspace=ws_)
    np.testing.assert_array_equal(ws_.fx1[:, 0], np.zeros(grid.ny))
    np.testing.assert_array_equal(ws_.fx1[:, -1], np.zeros(grid.ny))
    np.testing.assert_array_equal(ws_.fy1[0, :], np.zeros(grid.nx))
    np.testing.assert_array_equal(ws_.fy1[-1, :], np.zeros(grid.nx))


def test_x_mirror_symmetry_is_exact():
    rng = np.random.default_rng(5)
    grid, bathy = make_setup(
        nx=20, ny=7, bed_fn=lambda x, y: 0.2 * np.cos(0.4 * x), ws=1.5)
    state = still_state(bathy)
    state.w[:] = np.maximum(state.w + rng.normal(0, 0.1, state.w.shape), bathy.bed)
    state.p[:] = rng.normal(0, 0.3, state.p.shape)
    state.q[:] = rng.normal(0, 0.3, state.q.shape)

    bed_m = bathy.bed[GHOST:-GHOST, GHOST:-GHOST][:, ::-1].copy()
    bathy_m = build_bathymetry(grid, bed_m, ws=1.5)
    state_m = FieldState(w=state.w[:, ::-1].copy(),
                         p=-state.p[:, ::-1].copy(),
                         q=state.q[:, ::-1].copy())
    num, phys = NumericsParams(), PhysParams(c_f=0.01)
    rw, rp, rq = nlsw_divergence_and_source(state, bathy, num, phys)
    rw_m, rp_m, rq_m = nlsw_divergence_and_source(state_m, bathy_m, num, phys)
    np.testing.assert_array_equal(rw_m[:, ::-1], rw)
    np.testing.assert_array_equal(rp_m[:, ::-1], -rp)
    np.testing.assert_array_equal(rq_m[:, ::-1], rq)


def test_forward_euler_positivity_on_dry_dam_break():
    grid, bathy = make_setup(nx=120, ny=5, dx=0.1, dy=0.1, ws=0.0)
    state = still_state(bathy)
    xp, _ = np.meshgrid(grid.x_centers_padded(), grid.y_centers_padded())
    state.w[:] = np.where(xp < 4.0, 1.0, 0.0)
    num, phys = NumericsParams(), PhysParams()
    ii = grid.interior
    for _ in range(150):
        mirror_walls(state)
        rate, _, _ = speed_extrema(state, bathy, phys)
        dt = 0.25 / rate
        rw, rp, rq = nlsw_divergence_and_source(state, bathy, num, phys)
        state.w[ii] += dt * rw
        state.p[ii] += dt * rp
        state.q[ii] += dt * rq
        h_min = float((state.w[ii] - bathy.bed[ii]).min())
        assert h_min >= 0.0
        assert np.isfinite(state.w[ii]).all()


# ---------------------------------------------------------------------------
# friction and speed extrema


def test_friction_frozen_example():
    f1, f2 = friction(0.1, 0.0, 0.5, c_f=0.0025, h_eps=1e-6)
    assert f1 == pytest.approx(0.0025 * 0.1 * 0.1 / 0.25, rel=1e-15)
    assert f2 == 0.0


def test_friction_trivial_zeroes():
    assert friction(0.0, 0.0, 1.0, c_f=0.0025, h_eps=1e-6) == (0.0, 0.0)
    f1, f2 = friction(0.3, -0.2, 1.0, c_f=0.0, h_eps=1e-6)
    assert f1 == 0.0 and f2 == 0.0


def test_speed_extrema_still_water():
    grid, bathy = make_setup(dx=0.05, dy=0.05, ws=0.32, bed_fn=lambda x, y: 0.0 * x)
    state = still_state(bathy)
    rate, speed, depth = speed_extrema(state, bathy, PhysParams())
    c = np.sqrt(G * 0.32)
    assert rate == pytest.approx(c / 0.05, rel=1e-14)
    assert speed == pytest.approx(c, rel=1e-14)
    assert depth == pytest.approx(0.32, rel=1e-15)


def test_speed_extrema_picks_fastest_cell():
    grid, bathy = make_setup(ws=1.0)
    state = still_state(bathy)
    state.p[GHOST + 3, GHOST + 5] = 2.0  # u = 2 m/s in one cell
    rate, speed, _ = speed_extrema(state, bathy, PhysParams())
    expected = 2.0 / 1.0 + np.sqrt(G)
    assert speed == pytest.approx(expected, rel=1e-14)
    assert rate == pytest.approx(expected / grid.dx, rel=1e-14)


@settings(deadline=None, max_examples=25)
@given(seed=st.integers(0, 2 ** 31 - 1))
def test_rates_finite_on_random_wet_states(seed):
    rng = np.random.default_rng(seed)
    grid, bathy = make_setup(nx=12, ny=8, ws=1.0)
    state = still_state(bathy)
    state.w[:] = np.maximum(1.0 + rng.normal(0, 0.2, state.w.shape), bathy.bed)
    state.p[:] = rng.normal(0, 0.5, state.p.shape)
    state.q[:] = rng.normal(0, 0.5, state.q.shape)
    rates = nlsw_divergence_and_source(state, bathy, NumericsParams(),
                                       PhysParams(c_f=0.0025))
    for r in rates:
        assert np.isfinite(r).all()
