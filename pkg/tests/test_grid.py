"""Tests for grid geometry, bathymetry preprocessing and ASCII raster I/O."""

from __future__ import annotations

import numpy as np
import pytest

from boussim.grid import (
    GHOST,
    Bathymetry,
    FieldState,
    Grid,
    PhysParams,
    build_bathymetry,
    load_ascii_grid,
    still_state,
    write_ascii_grid,
)


def make_grid(nx=8, ny=6, dx=0.5, dy=0.25):
    return Grid(nx=nx, ny=ny, dx=dx, dy=dy)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(nx=4, ny=8, dx=0.1, dy=0.1)
    with pytest.raises(ValueError):
        Grid(nx=8, ny=4, dx=0.1, dy=0.1)
    with pytest.raises(ValueError):
        Grid(nx=8, ny=8, dx=0.0, dy=0.1)
    g = make_grid()
    assert g.shape_padded == (6 + 2 * GHOST, 8 + 2 * GHOST)
    assert g.interior == (slice(GHOST, GHOST + 6), slice(GHOST, GHOST + 8))


def test_cell_centers():
    g = Grid(nx=5, ny=5, dx=2.0, dy=1.0, x0=10.0, y0=-5.0)
    assert np.allclose(g.x_centers(), [11.0, 13.0, 15.0, 17.0, 19.0])
    assert g.y_centers()[0] == pytest.approx(-4.5)
    xp = g.x_centers_padded()
    assert xp.shape == (5 + 2 * GHOST,)
    assert xp[GHOST] == pytest.approx(11.0)
    assert xp[0] == pytest.approx(11.0 - GHOST * 2.0)


def test_flat_bed_bathymetry():
    g = make_grid()
    bed = np.full((g.ny, g.nx), -2.0)
    bathy = build_bathymetry(g, bed, ws=0.0)
    assert np.all(bathy.depth[g.interior] == 2.0)
    assert np.all(bathy.depth_dx == 0.0)
    assert np.all(bathy.depth_dy == 0.0)
    # interface values equal the flat value everywhere
    assert np.all(bathy.bed_face_x == -2.0)
    assert np.all(bathy.bed_face_y == -2.0)


def test_dry_plateau_depth_clamped():
    g = make_grid()
    bed = np.full((g.ny, g.nx), -1.0)
    bed[:, 4:] = 1.0  # plateau above the waterline
    bathy = build_bathymetry(g, bed, ws=0.0)
    ii = g.interior
    assert np.all(bathy.depth[ii][:, 4:] == 0.0)
    # the corner-averaged bed smooths the cliff across the adjoining wet
    # cell; everything further out keeps the flat depth exactly
    assert np.all(bathy.depth[ii][:, :3] == 1.0)
    assert np.all(bathy.depth[ii][:, 3] == 0.5)


def test_linear_ramp_depth_slope():
    # bed rising eastward at 0.25 per metre means depth falling at -0.25
    g = Grid(nx=16, ny=6, dx=0.5, dy=0.5)
    x = g.x_centers()
    bed = np.tile(-3.0 + 0.25 * x, (g.ny, 1))
    bathy = build_bathymetry(g, bed, ws=0.0)
    ii = g.interior
    # the mirrored ghost frame kinks the ramp at the domain edge and the
    # corner averaging widens that halo by one cell, so test well inside
    interior_slope = bathy.depth_dx[ii][:, 2:-2]
    assert np.allclose(interior_slope, -0.25, atol=1e-12)
    assert np.allclose(bathy.depth_dy[ii], 0.0, atol=1e-12)


def test_ghost_bed_even_reflection():
    g = make_grid()
    rng = np.random.default_rng(0)
    bed = rng.uniform(-2.0, -1.0, size=(g.ny, g.nx))
    bathy = build_bathymetry(g, bed, ws=0.0)
    b = bathy.bed
    # west ghosts mirror the first interior columns
    assert np.allclose(b[:, GHOST - 1], b[:, GHOST])
    assert np.allclose(b[:, GHOST - 2], b[:, GHOST + 1])
    assert np.allclose(b[:, -GHOST], b[:, -GHOST - 1])
    assert np.allclose(b[:, -GHOST + 1], b[:, -GHOST - 2])
    # and the south ghosts mirror the first interior rows
    assert np.allclose(b[GHOST - 1, :], b[GHOST, :])
    assert np.allclose(b[0, :], b[GHOST + 1, :])


def test_effective_bed_is_mean_of_opposing_faces():
    # the property that keeps dry cells inert: every cell's solver bed is
    # the average of its two interface values, in both directions (exact
    # along x by construction, within a couple of ulps along y)
    g = make_grid()
    rng = np.random.default_rng(11)
    bed = rng.uniform(-2.0, 1.0, size=(g.ny, g.nx))
    bathy = build_bathymetry(g, bed, ws=0.0)
    two_bx = bathy.bed_face_x[:, :-1] + bathy.bed_face_x[:, 1:]
    assert np.array_equal(2.0 * bathy.bed_eff[:, 1:-1], two_bx)
    two_by = bathy.bed_face_y[:-1, :] + bathy.bed_face_y[1:, :]
    assert np.max(np.abs(2.0 * bathy.bed_eff[1:-1, :] - two_by)) < 1e-14


def test_effective_bed_equals_samples_on_planar_bed():
    g = make_grid()
    x = g.x_centers()[None, :]
    y = g.y_centers()[:, None]
    bed = -1.5 + 0.2 * x - 0.05 * y
    bathy = build_bathymetry(g, bed, ws=0.0)
    ii = g.interior
    # the mirrored ghost frame kinks the plane at the domain edge, so the
    # identity holds one cell in from the boundary
    assert np.allclose(bathy.bed_eff[ii][1:-1, 1:-1], bed[1:-1, 1:-1],
                       atol=1e-14)
    # raw samples are preserved bit for bit
    assert np.array_equal(bathy.bed[ii], bed)


def test_h_eps_default_scales_with_depth():
    g = make_grid()
    shallow = build_bathymetry(g, np.full((g.ny, g.nx), -0.5), ws=0.0)
    deep = build_bathymetry(g, np.full((g.ny, g.nx), -80.0), ws=0.0)
    assert shallow.h_eps == pytest.approx(1e-6)
    assert deep.h_eps == pytest.approx(80.0 * 1e-6)


def test_still_state_and_validation():
    g = make_grid()
    bed = np.full((g.ny, g.nx), -1.0)
    bed[:, -2:] = 0.5
    bathy = build_bathymetry(g, bed, ws=0.0)
    state = still_state(bathy)
    ii = g.interior
    assert np.all(state.w[ii][:, :-2] == 0.0)
    # dry land carries w = the solver's bed, which near the cliff is the
    # corner-averaged elevation rather than the raw sample
    assert np.all(state.w[ii][:, -2:] == bathy.bed_eff[ii][:, -2:])
    assert np.all(state.w[ii][:, -1] == 0.5)
    assert np.all(state.p == 0.0)
    state.validate(bathy)  # does not raise
    state.w[ii][0][0] = bed[0, 0] - 1e-6
    with pytest.raises(ValueError):
        state.validate(bathy)


def test_phys_params_defaults_and_validation():
    p = PhysParams()
    assert p.g == pytest.approx(9.81)
    assert p.b_disp == pytest.approx(1.0 / 15.0)
    assert p.c_f == 0.0
    with pytest.raises(ValueError):
        PhysParams(g=-1.0)
    with pytest.raises(ValueError):
        PhysParams(c_f=-0.1)


# ---------------------------------------------------------------------------
# ASCII raster I/O


def test_ascii_round_trip(tmp_path):
    rng = np.random.default_rng(42)
    field = rng.standard_normal((6, 9)) * 1e3
    path = tmp_path / "bed.asc"
    write_ascii_grid(path, field, cellsize=0.5, xll=10.0, yll=-3.0)
    loaded = load_ascii_grid(path)
    assert loaded.values.shape == (6, 9)
    assert np.array_equal(loaded.values, field)
    assert loaded.cellsize == 0.5
    assert loaded.xll == 10.0 and loaded.yll == -3.0
    # a second write of the loaded data is byte-identical
    path2 = tmp_path / "bed2.asc"
    write_ascii_grid(path2, loaded.values, cellsize=loaded.cellsize,
                     xll=loaded.xll, yll=loaded.yll)
    assert path.read_bytes() == path2.read_bytes()


def test_ascii_orientation_first_row_is_north(tmp_path):
    # values[j, i] with j increasing northward; the file stores the top
    # (northernmost) row first per the raster convention
    field = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    path = tmp_path / "tiny.asc"
    write_ascii_grid(path, field, cellsize=1.0)
    first_data_line = path.read_text().splitlines()[6]
    assert [float(v) for v in first_data_line.split()] == [5.0, 6.0]
    assert np.array_equal(load_ascii_grid(path).values, field)


def test_ascii_header_mismatch_rejected(tmp_path):
    path = tmp_path / "bad.asc"
    path.write_text(
        "ncols 3\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1.0\n"
        "NODATA_value -9999\n1 2 3\n4 5\n"
    )
    with pytest.raises(ValueError):
        load_ascii_grid(path)


def test_ascii_missing_header_key_rejected(tmp_path):
    path = tmp_path / "bad2.asc"
    path.write_text("ncols 2\nnrows 1\ncellsize 1.0\n1 2\n")
    with pytest.raises(ValueError):
        load_ascii_grid(path)


def test_ascii_nodata_values_rejected(tmp_path):
    path = tmp_path / "bad3.asc"
    path.write_text(
        "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1.0\n"
        "NODATA_value -9999\n1 -9999\n"
    )
    with pytest.raises(ValueError):
        load_ascii_grid(path)


def test_state_mass(tmp_path):
    g = make_grid()
    bed = np.full((g.ny, g.nx), -2.0)
    bathy = build_bathymetry(g, bed, ws=0.0)
    state = still_state(bathy)
    expect = 2.0 * g.nx * g.ny * g.dx * g.dy
    assert state.mass(bathy) == pytest.approx(expect, rel=1e-13)
