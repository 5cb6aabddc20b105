"""Grid geometry, bathymetry preprocessing and raster I/O.

All field arrays are dense 2-D float64 in row-major order with shape
``(ny + 2*GHOST, nx + 2*GHOST)``; index ``[j, i]`` maps to (y, x) with j
increasing northward and i eastward.  The two-cell ghost frame is wide
enough for the five-point third-derivative stencils used by the
dispersive terms.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

#: width of the ghost frame on every side
GHOST = 2


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular grid of cell-centred values."""

    nx: int
    ny: int
    dx: float
    dy: float
    x0: float = 0.0  # west edge of the interior domain
    y0: float = 0.0  # south edge of the interior domain

    def __post_init__(self):
        if self.nx < 5 or self.ny < 5:
            raise ValueError(f"grid needs at least 5x5 interior cells, got {self.nx}x{self.ny}")
        if not (self.dx > 0.0 and self.dy > 0.0):
            raise ValueError("cell sizes must be positive")

    @property
    def shape_padded(self) -> tuple[int, int]:
        return (self.ny + 2 * GHOST, self.nx + 2 * GHOST)

    @property
    def interior(self) -> tuple[slice, slice]:
        return (slice(GHOST, GHOST + self.ny), slice(GHOST, GHOST + self.nx))

    def x_centers(self) -> np.ndarray:
        return self.x0 + (np.arange(self.nx) + 0.5) * self.dx

    def y_centers(self) -> np.ndarray:
        return self.y0 + (np.arange(self.ny) + 0.5) * self.dy

    def x_centers_padded(self) -> np.ndarray:
        return self.x0 + (np.arange(-GHOST, self.nx + GHOST) + 0.5) * self.dx

    def y_centers_padded(self) -> np.ndarray:
        return self.y0 + (np.arange(-GHOST, self.ny + GHOST) + 0.5) * self.dy

    def zeros_padded(self) -> np.ndarray:
        return np.zeros(self.shape_padded)


@dataclass(frozen=True)
class PhysParams:
    """Physical constants of a run."""

    g: float = 9.81
    b_disp: float = 1.0 / 15.0  # dispersion-optimising depth-profile coefficient
    c_f: float = 0.0  # quadratic bottom-friction coefficient

    def __post_init__(self):
        if not (self.g > 0.0 and math.isfinite(self.g)):
            raise ValueError("g must be positive")
        if self.c_f < 0.0:
            raise ValueError("friction coefficient must be non-negative")
        if not math.isfinite(self.b_disp):
            raise ValueError("dispersion coefficient must be finite")


def _pad_even(interior: np.ndarray) -> np.ndarray:
    """Pad with the ghost frame filled by even reflection about each edge."""
    return np.pad(interior, GHOST, mode="symmetric")


@dataclass(frozen=True)
class Bathymetry:
    """Bed elevation and every derived geometric field a step needs.

    ``bed`` is the cell-centred elevation exactly as supplied (positive up),
    kept for analysis and raster round-trips.  The solver sees the bed only
    through corner points: two-point averages of adjacent cell values give
    the elevation at each cell corner, each interface value is the mean of
    its two corners (``bed_face_x``/``bed_face_y``), and ``bed_eff`` is the
    four-corner cell mean.  That construction pins every cell value to the
    mean of its opposing interface values in both directions, which is what
    lets the mean-preserving positivity clip land a dry cell on exactly
    zero water column at all four faces -- dry land stays inert instead of
    leaking phantom fluxes wherever the bed curves.  ``bed_eff`` equals
    ``bed`` wherever the bed is locally planar.

    ``ws`` is the still-water elevation.  ``depth`` is the still-water
    depth over ``bed_eff`` clamped at zero for land; the slopes are centred
    differences of the clamped depth.  Face array index ``i`` addresses the
    interface between padded cells ``i`` and ``i+1``.
    """

    grid: Grid
    ws: float
    bed: np.ndarray
    bed_eff: np.ndarray
    depth: np.ndarray
    depth_dx: np.ndarray
    depth_dy: np.ndarray
    bed_face_x: np.ndarray
    bed_face_y: np.ndarray
    h_eps: float


def build_bathymetry(grid: Grid, bed_interior: np.ndarray, ws: float,
                     h_eps: float | None = None) -> Bathymetry:
    """Preprocess a bed-elevation field into the padded derived arrays."""
    bed_interior = np.asarray(bed_interior, dtype=np.float64)
    if bed_interior.shape != (grid.ny, grid.nx):
        raise ValueError(
            f"bed shape {bed_interior.shape} does not match grid ({grid.ny}, {grid.nx})"
        )
    if not np.all(np.isfinite(bed_interior)):
        raise ValueError("bed contains non-finite values")
    # One extra ring of even padding so every corner of the padded cells is
    # an interior average; the usual ghost frame is the inner slice.
    wide = np.pad(bed_interior, GHOST + 1, mode="symmetric")
    bed = wide[1:-1, 1:-1].copy()
    # corner[j, i] is the elevation at the north-east corner of padded cell
    # (j, i); the grouping below is reused verbatim for bed_eff so that the
    # x-direction identity 2*bed_eff == face_west + face_east is bitwise
    # (the y-direction one holds to a couple of ulps).
    corner = 0.25 * ((wide[:-1, :-1] + wide[1:, :-1])
                     + (wide[:-1, 1:] + wide[1:, 1:]))
    bed_face_x = 0.5 * (corner[:-1, 1:-1] + corner[1:, 1:-1])
    bed_face_y = 0.5 * (corner[1:-1, :-1] + corner[1:-1, 1:])
    bed_eff = 0.25 * ((corner[:-1, :-1] + corner[1:, :-1])
                      + (corner[:-1, 1:] + corner[1:, 1:]))
    depth = np.maximum(ws - bed_eff, 0.0)
    depth_dy, depth_dx = np.gradient(depth, grid.dy, grid.dx)
    if h_eps is None:
        h_eps = 1e-6 * max(1.0, float(depth.max()))
    if h_eps <= 0.0:
        raise ValueError("h_eps must be positive")
    return Bathymetry(
        grid=grid, ws=float(ws), bed=bed, bed_eff=bed_eff, depth=depth,
        depth_dx=depth_dx, depth_dy=depth_dy,
        bed_face_x=bed_face_x, bed_face_y=bed_face_y, h_eps=float(h_eps),
    )


@dataclass
class FieldState:
    """Prognostic fields: surface elevation w and depth-integrated fluxes."""

    w: np.ndarray
    p: np.ndarray  # x-directed volume flux (m^2/s)
    q: np.ndarray  # y-directed volume flux (m^2/s)

    def copy(self) -> "FieldState":
        return FieldState(self.w.copy(), self.p.copy(), self.q.copy())

    def validate(self, bathy: Bathymetry) -> None:
        ii = bathy.grid.interior
        for name, arr in (("w", self.w), ("p", self.p), ("q", self.q)):
            if arr.shape != bathy.grid.shape_padded:
                raise ValueError(f"{name} has shape {arr.shape}, expected {bathy.grid.shape_padded}")
            if not np.all(np.isfinite(arr[ii])):
                raise ValueError(f"{name} contains non-finite values")
        deficit = self.w[ii] - bathy.bed_eff[ii]
        if deficit.min() < -1e-10:
            j, i = np.unravel_index(np.argmin(deficit), deficit.shape)
            raise ValueError(
                f"negative water column at interior cell ({j}, {i}): "
                f"w - bed = {deficit[j, i]:.3e}"
            )

    def mass(self, bathy: Bathymetry) -> float:
        """Total water volume over the interior."""
        ii = bathy.grid.interior
        h = self.w[ii] - bathy.bed_eff[ii]
        return float(np.sum(h)) * bathy.grid.dx * bathy.grid.dy


def still_state(bathy: Bathymetry) -> FieldState:
    """Lake at rest: flat surface at ws, bed elevation where land is dry."""
    w = np.maximum(bathy.ws, bathy.bed_eff)
    zeros = np.zeros_like(w)
    return FieldState(w=w, p=zeros.copy(), q=zeros.copy())


# ---------------------------------------------------------------------------
# ASCII raster (Arc-style) I/O


@dataclass(frozen=True)
class AsciiGrid:
    values: np.ndarray  # [j, i], j increasing northward
    xll: float
    yll: float
    cellsize: float


_REQUIRED_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize")


def load_ascii_grid(path) -> AsciiGrid:
    """Read an ASCII raster; any appearance of the NODATA value is an error."""
    with open(path, "r") as fh:
        lines = fh.read().split("\n")
    header: dict[str, float] = {}
    row = 0
    while row < len(lines):
        parts = lines[row].split()
        if len(parts) == 2 and parts[0].lower() in (*_REQUIRED_KEYS, "nodata_value"):
            header[parts[0].lower()] = float(parts[1])
            row += 1
        else:
            break
    for key in _REQUIRED_KEYS:
        if key not in header:
            raise ValueError(f"{path}: missing required header key {key!r}")
    ncols = int(header["ncols"])
    nrows = int(header["nrows"])
    data = []
    for line in lines[row:]:
        if line.strip():
            data.append([float(v) for v in line.split()])
    if len(data) != nrows or any(len(r) != ncols for r in data):
        raise ValueError(
            f"{path}: data block does not match declared {nrows} rows x {ncols} cols"
        )
    values = np.array(data, dtype=np.float64)
    nodata = header.get("nodata_value")
    if nodata is not None and np.any(values == nodata):
        raise ValueError(f"{path}: NODATA cells present; gaps are not supported")
    return AsciiGrid(
        values=values[::-1].copy(),  # file stores the north row first
        xll=header["xllcorner"],
        yll=header["yllcorner"],
        cellsize=header["cellsize"],
    )


def write_ascii_grid(path, values: np.ndarray, cellsize: float,
                     xll: float = 0.0, yll: float = 0.0,
                     nodata: float = -9999.0) -> None:
    """Write an ASCII raster with full float64 precision, atomically."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError("raster values must be 2-D")
    ny, nx = values.shape
    out = [
        f"ncols {nx}",
        f"nrows {ny}",
        f"xllcorner {xll:.17g}",
        f"yllcorner {yll:.17g}",
        f"cellsize {cellsize:.17g}",
        f"NODATA_value {nodata:.17g}",
    ]
    for j in range(ny - 1, -1, -1):
        out.append(" ".join(f"{v:.17g}" for v in values[j]))
    atomic_write_text(path, "\n".join(out) + "\n")


def atomic_write_text(path, text: str) -> None:
    """Write text via a sibling temp file and rename, so readers never see
    a partial file."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
