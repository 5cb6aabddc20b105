"""Benchmark bathymetries, initial conditions, gauges and run analytics.

Everything here works on interior-coordinate positions (metres in the
grid's frame) and plain numpy arrays; the generators are pure and the
recorders accumulate into python lists until asked for arrays/CSV.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass

import numpy as np

from .grid import (GHOST, Bathymetry, FieldState, Grid, atomic_write_text,
                   build_bathymetry, still_state)

GAUGE_CSV_HEADER = "t,eta,P,Q,u,v"
RUNUP_CSV_HEADER = "azimuth_deg,radius_m,normalized"


# ---------------------------------------------------------------------------
# benchmark bathymetries


def conical_island_bathymetry(grid: Grid, depth: float = 0.32,
                              base_diameter: float = 7.2,
                              slope: float = 0.25,
                              crest_height: float = 0.625,
                              center: tuple[float, float] | None = None,
                              h_eps: float | None = None) -> Bathymetry:
    """Truncated cone on a flat floor, submerged to ``depth``.

    The bed is slope·(base_radius − r) capped at ``crest_height`` inside
    the base circle and zero outside.  The crest cap sits above still
    water, so only the band below the maximum runup influences results.
    """
    if center is None:
        center = (grid.x0 + 0.5 * grid.nx * grid.dx,
                  grid.y0 + 0.5 * grid.ny * grid.dy)
    xc, yc = np.meshgrid(grid.x_centers(), grid.y_centers())
    r = np.hypot(xc - center[0], yc - center[1])
    base_radius = 0.5 * base_diameter
    cone = np.minimum(crest_height, slope * (base_radius - r))
    bed = np.where(r < base_radius, cone, 0.0)
    return build_bathymetry(grid, bed, ws=depth, h_eps=h_eps)


def island_shoreline_radius(depth: float = 0.32, base_diameter: float = 7.2,
                            slope: float = 0.25) -> float:
    """Radius where the cone surface pierces still water."""
    return 0.5 * base_diameter - depth / slope


def rip_channel_bathymetry(grid: Grid,
                           h_eps: float | None = None) -> Bathymetry:
    """Plane beach with a rip channel carved along the y = 0 line.

    bed(x, y) = 0.1 − ((18−x)/30)·(1 + 3·exp(−(18−x)/3)·cos¹⁰(πy/30))
    with y measured from the channel centerline and still water at zero,
    so the shoreline sits where the bed crosses zero: near x ≈ 13 m on
    the plane-beach profile and pushed shoreward inside the channel.  A
    half domain (y ≥ 0) with a wall along y = 0 is the symmetric
    reduction of the full flume.
    """
    xc, yc = np.meshgrid(grid.x_centers(), grid.y_centers())
    reach = (18.0 - xc) / 30.0
    bump = 3.0 * np.exp(-(18.0 - xc) / 3.0) * np.cos(np.pi * yc / 30.0) ** 10
    bed = 0.1 - reach * (1.0 + bump)
    return build_bathymetry(grid, bed, ws=0.0, h_eps=h_eps)


# ---------------------------------------------------------------------------
# initial conditions


@dataclass(frozen=True)
class SolitaryWaveSpec:
    """Solitary wave parameters over a uniform ambient depth."""

    height: float
    depth: float
    crest_x: float
    direction: str = "+x"
    breaking_ratio: float = 0.78

    def __post_init__(self):
        if self.depth <= 0.0:
            raise ValueError("ambient depth must be positive")
        if not 0.0 < self.height < self.breaking_ratio * self.depth:
            raise ValueError(
                f"waveheight {self.height} outside (0, "
                f"{self.breaking_ratio}*depth) breaking guard")
        if self.direction not in ("+x", "-x"):
            raise ValueError("direction must be '+x' or '-x'")

    @property
    def decay_rate(self) -> float:
        """Spatial decay rate of the sech^2 profile."""
        return math.sqrt(3.0 * self.height / (4.0 * self.depth ** 3))


def solitary_wave_ic(spec: SolitaryWaveSpec, bathy: Bathymetry,
                     g: float = 9.81) -> FieldState:
    """Place a right/left-running solitary wave on the still state.

    The surface is w = ws + H·sech²(κ(x − x0)) wherever that clears the
    bed, with flux P = η·√(g·d0)·(1 + η/d0) in the travel direction and
    Q = 0; dry cells keep zero momentum.  Warns when a tail is not
    contained in the domain (η at either x-boundary above 1e-6·H).
    """
    state = still_state(bathy)
    grid = bathy.grid
    x = grid.x_centers_padded()
    eta = spec.height / np.cosh(spec.decay_rate * (x - spec.crest_x)) ** 2

    edge = max(eta[GHOST], eta[GHOST + grid.nx - 1])
    if edge > 1e-6 * spec.height:
        warnings.warn(
            f"solitary wave tail not contained: boundary elevation "
            f"{edge:.3g} m exceeds {1e-6 * spec.height:.3g} m",
            stacklevel=2)

    eta2d = np.broadcast_to(eta, state.w.shape)
    flux = eta2d * np.sqrt(g * spec.depth) * (1.0 + eta2d / spec.depth)
    if spec.direction == "-x":
        flux = -flux
    state.w[:] = np.maximum(bathy.bed_eff, bathy.ws + eta2d)
    wet = state.w - bathy.bed_eff > 0.0
    state.p[:] = np.where(wet, flux, 0.0)
    state.q[:] = 0.0
    return state


# ---------------------------------------------------------------------------
# gauges


@dataclass(frozen=True)
class GaugeSpec:
    """A surface/flux sampling point; interval 0 records every call."""

    gauge_id: str
    x: float
    y: float
    record_interval: float = 0.0

    def __post_init__(self):
        if self.record_interval < 0.0:
            raise ValueError("record interval must be >= 0")


def gauge_cell(grid: Grid, x: float, y: float) -> tuple[int, int]:
    """Padded-array (row, col) of the cell whose center is nearest (x, y)."""
    i = int(np.rint((x - grid.x0) / grid.dx - 0.5))
    j = int(np.rint((y - grid.y0) / grid.dy - 0.5))
    if not (0 <= i < grid.nx and 0 <= j < grid.ny):
        raise ValueError(f"gauge position ({x}, {y}) outside the domain")
    return j + GHOST, i + GHOST


class GaugeRecorder:
    """Accumulates per-gauge time series of (t, eta, P, Q, u, v).

    Velocities are fluxes over the local water column, floored at
    ``h_eps`` so dry gauges report zeros instead of dividing by zero.
    """

    def __init__(self, bathy: Bathymetry, gauges: list[GaugeSpec],
                 h_eps: float | None = None):
        self.bathy = bathy
        self.gauges = list(gauges)
        self.h_eps = bathy.h_eps if h_eps is None else h_eps
        self._cells = [gauge_cell(bathy.grid, g.x, g.y) for g in self.gauges]
        self._due = [-math.inf] * len(self.gauges)
        self.samples: dict[str, list[tuple]] = {
            g.gauge_id: [] for g in self.gauges}

    def record(self, state: FieldState, t: float) -> int:
        """Sample every gauge whose interval has elapsed; returns how
        many gauges were sampled."""
        hit = 0
        for k, gauge in enumerate(self.gauges):
            if t + 1e-12 < self._due[k]:
                continue
            j, i = self._cells[k]
            w = state.w[j, i]
            p = state.p[j, i]
            q = state.q[j, i]
            h = max(w - self.bathy.bed_eff[j, i], self.h_eps)
            self.samples[gauge.gauge_id].append(
                (t, w - self.bathy.ws, p, q, p / h, q / h))
            self._due[k] = t + gauge.record_interval
            hit += 1
        return hit

    def series(self, gauge_id: str) -> np.ndarray:
        """(n, 6) float array of one gauge's samples."""
        return np.array(self.samples[gauge_id], dtype=float).reshape(-1, 6)

    def write_csv(self, directory, prefix: str = "gauge_") -> list[str]:
        """One CSV per gauge under ``directory``; returns the paths."""
        written = []
        for gauge in self.gauges:
            rows = [GAUGE_CSV_HEADER]
            for rec in self.samples[gauge.gauge_id]:
                rows.append(",".join(f"{v:.12g}" for v in rec))
            path = os.path.join(str(directory),
                                f"{prefix}{gauge.gauge_id}.csv")
            atomic_write_text(path, "\n".join(rows) + "\n")
            written.append(path)
        return written


def record_gauges(state: FieldState, recorder: GaugeRecorder,
                  t: float) -> int:
    """Functional alias for GaugeRecorder.record."""
    return recorder.record(state, t)


# ---------------------------------------------------------------------------
# windowed statistics


@dataclass(frozen=True)
class WindowStats:
    mwl: float
    u_avg: float
    v_avg: float
    hs: float
    n_samples: int


def time_averages(samples: np.ndarray,
                  window: tuple[float, float]) -> WindowStats:
    """Mean water level, mean velocities and 4-sigma waveheight.

    ``samples`` is an (n, 6) array with columns t, eta, P, Q, u, v as
    produced by GaugeRecorder.series; rows inside ``window`` (inclusive)
    are used and their order does not matter.
    """
    t0, t1 = window
    arr = np.asarray(samples, dtype=float).reshape(-1, 6)
    picked = arr[(arr[:, 0] >= t0) & (arr[:, 0] <= t1)]
    if picked.shape[0] == 0:
        raise ValueError(f"no samples in averaging window [{t0}, {t1}]")
    if picked.shape[0] < 100:
        warnings.warn(
            f"averaging window holds only {picked.shape[0]} samples; "
            "statistics will be noisy", stacklevel=2)
    eta = picked[:, 1]
    return WindowStats(mwl=float(eta.mean()),
                       u_avg=float(picked[:, 4].mean()),
                       v_avg=float(picked[:, 5].mean()),
                       hs=float(4.0 * eta.std()),
                       n_samples=int(picked.shape[0]))


# ---------------------------------------------------------------------------
# runup extraction


@dataclass(frozen=True)
class RunupSpec:
    """Inundation threshold and polar-extraction origin.

    ``delta`` defaults to slope·dx/3 when left None (resolved against
    the grid at extraction time).
    """

    slope: float
    center: tuple[float, float]
    delta: float | None = None

    def __post_init__(self):
        if self.delta is not None and self.delta <= 0.0:
            raise ValueError("inundation threshold must be positive")
        if self.delta is None and self.slope <= 0.0:
            raise ValueError("side slope must be positive to derive the "
                             "inundation threshold")

    def resolve_delta(self, grid: Grid) -> float:
        return self.delta if self.delta is not None \
            else self.slope * grid.dx / 3.0


class MaxSurfaceTracker:
    """Per-cell running maximum of the interior water surface."""

    def __init__(self, bathy: Bathymetry):
        self.grid = bathy.grid
        self.max_w = np.full((bathy.grid.ny, bathy.grid.nx), -np.inf)

    def update(self, state: FieldState) -> "MaxSurfaceTracker":
        np.maximum(self.max_w, state.w[self.grid.interior], out=self.max_w)
        return self


def _bilinear(field: np.ndarray, grid: Grid, x: float, y: float) -> float:
    """Sample an interior-shaped field at (x, y), clamped to the cell-
    center footprint."""
    fx = (x - grid.x0) / grid.dx - 0.5
    fy = (y - grid.y0) / grid.dy - 0.5
    fx = min(max(fx, 0.0), grid.nx - 1.0)
    fy = min(max(fy, 0.0), grid.ny - 1.0)
    i0 = min(int(fx), grid.nx - 2)
    j0 = min(int(fy), grid.ny - 2)
    tx = fx - i0
    ty = fy - j0
    return ((1 - ty) * ((1 - tx) * field[j0, i0] + tx * field[j0, i0 + 1])
            + ty * ((1 - tx) * field[j0 + 1, i0]
                    + tx * field[j0 + 1, i0 + 1]))


def runup_profile(max_w: np.ndarray, bathy: Bathymetry, spec: RunupSpec,
                  n_azimuths: int = 72,
                  normalize_by: float | None = None) -> np.ndarray:
    """Inundation-limit radius per azimuth around ``spec.center``.

    Each ray starts on the (dry) center and marches outward in
    quarter-cell steps; the reported radius is the first crossing into
    max_w − bed ≥ delta, refined by bisection between the last dry and
    first wet sample.  That crossing is where the water reached highest
    on the flank; with the default delta it reduces to the still-water
    shoreline for a run with no waves.  Columns of the result are
    (azimuth_deg, radius_m, normalized); the last column repeats the
    radius when no normalization length is given.
    """
    grid = bathy.grid
    delta = spec.resolve_delta(grid)
    bed = bathy.bed[grid.interior]
    cx, cy = spec.center
    x_max = grid.x0 + grid.nx * grid.dx
    y_max = grid.y0 + grid.ny * grid.dy
    step = 0.25 * min(grid.dx, grid.dy)

    def excess(r: float, ux: float, uy: float) -> float:
        x, y = cx + r * ux, cy + r * uy
        return (_bilinear(max_w, grid, x, y)
                - _bilinear(bed, grid, x, y) - delta)

    out = np.empty((n_azimuths, 3))
    for k in range(n_azimuths):
        theta = 2.0 * math.pi * k / n_azimuths
        ux, uy = math.cos(theta), math.sin(theta)
        r_dry, radius = 0.0, math.nan
        r = step
        while True:
            x, y = cx + r * ux, cy + r * uy
            if not (grid.x0 <= x <= x_max and grid.y0 <= y <= y_max):
                break
            if excess(r, ux, uy) >= 0.0:
                radius = r
                break
            r_dry = r
            r += step
        if math.isnan(radius):
            raise ValueError(
                f"no inundated point along azimuth "
                f"{math.degrees(theta):.1f} deg; is the profile center on "
                "a dry crest with a shoreline around it?")
        if r_dry > 0.0:
            lo, hi = r_dry, radius
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                if excess(mid, ux, uy) >= 0.0:
                    hi = mid
                else:
                    lo = mid
            radius = hi
        norm = radius / normalize_by if normalize_by else radius
        out[k] = (math.degrees(theta), radius, norm)
    return out


def write_runup_csv(path, profile: np.ndarray) -> None:
    rows = [RUNUP_CSV_HEADER]
    for az, r, norm in profile:
        rows.append(f"{az:.6g},{r:.12g},{norm:.12g}")
    atomic_write_text(path, "\n".join(rows) + "\n")
