"""Shallow-water finite-volume core: limited reconstruction, central-upwind
interface fluxes, well-balanced bed-slope source, and bottom friction.

The cell update assembled here is the hyperbolic part of the model; the
dispersive corrections live in :mod:`boussim.dispersion`.  Production calls
run through the compiled kernels in :mod:`boussim._kernels`; this module
provides the typed wrappers plus small reference helpers used by tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .grid import GHOST, Bathymetry, FieldState, Grid, PhysParams


@dataclass(frozen=True)
class NumericsParams:
    """Spatial-scheme knobs: limiter sharpness and the CFL target used by
    the adaptive step controller."""

    theta: float = 1.5
    cfl_target: float = 0.125

    def __post_init__(self):
        if not 1.0 <= self.theta <= 2.0:
            raise ValueError(f"theta must be in [1, 2], got {self.theta}")
        if not 0.0 < self.cfl_target < 0.25:
            raise ValueError(
                f"cfl_target must be in (0, 0.25), got {self.cfl_target}")


@dataclass
class Workspace:
    """Scratch arrays reused across steps so the hot loop never allocates.

    Face arrays are padded like the state; flux arrays are sized per
    interface ring around the interior.
    """

    wE: np.ndarray
    wW: np.ndarray
    pE: np.ndarray
    pW: np.ndarray
    qE: np.ndarray
    qW: np.ndarray
    wN: np.ndarray
    wS: np.ndarray
    pN: np.ndarray
    pS: np.ndarray
    qN: np.ndarray
    qS: np.ndarray
    fx1: np.ndarray
    fx2: np.ndarray
    fx3: np.ndarray
    fy1: np.ndarray
    fy2: np.ndarray
    fy3: np.ndarray

    @classmethod
    def for_grid(cls, grid: Grid) -> "Workspace":
        padded = grid.shape_padded
        face = {name: np.zeros(padded) for name in
                ("wE", "wW", "pE", "pW", "qE", "qW",
                 "wN", "wS", "pN", "pS", "qN", "qS")}
        fx = {name: np.zeros((grid.ny, grid.nx + 1)) for name in ("fx1", "fx2", "fx3")}
        fy = {name: np.zeros((grid.ny + 1, grid.nx)) for name in ("fy1", "fy2", "fy3")}
        return cls(**face, **fx, **fy)


@dataclass
class SideValues:
    """One side of every interface: reconstructed w, P, Q and the derived
    non-negative water column h and desingularized velocities."""

    w: np.ndarray
    p: np.ndarray
    q: np.ndarray
    h: np.ndarray
    u: np.ndarray
    v: np.ndarray


@dataclass
class InterfaceStates:
    """Left/right states at x interfaces and south/north states at y
    interfaces, shaped (ny, nx+1) and (ny+1, nx)."""

    x_left: SideValues
    x_right: SideValues
    y_left: SideValues
    y_right: SideValues


def minmod_slope(a_left, a_center, a_right, theta: float = 1.5):
    """Generalized minmod of the three one-sided slope candidates.

    Vectorized reference for the limiter inlined in the kernels: the
    smallest-magnitude candidate when all three agree in sign, else zero.
    """
    a_left = np.asarray(a_left, dtype=float)
    a_center = np.asarray(a_center, dtype=float)
    a_right = np.asarray(a_right, dtype=float)
    c1 = theta * (a_center - a_left)
    c2 = 0.5 * (a_right - a_left)
    c3 = theta * (a_right - a_center)
    pos = (c1 > 0) & (c2 > 0) & (c3 > 0)
    neg = (c1 < 0) & (c2 < 0) & (c3 < 0)
    out = np.where(pos, np.minimum(c1, np.minimum(c2, c3)), 0.0)
    out = np.where(neg, np.maximum(c1, np.maximum(c2, c3)), out)
    if out.ndim == 0:
        return float(out)
    return out


def _side(w, p, q, bface, h_eps):
    h = np.maximum(w - bface, 0.0)
    # no water on this side of the interface -> it transports no momentum
    wet = h > 0.0
    p = np.where(wet, p, 0.0)
    q = np.where(wet, q, 0.0)
    hstar = np.maximum(h, h_eps)
    return SideValues(w=w, p=p, q=q, h=h, u=p / hstar, v=q / hstar)


def reconstruct(state: FieldState, bathy: Bathymetry, numerics: NumericsParams,
                workspace: Workspace | None = None) -> InterfaceStates:
    """Limited piecewise-linear face values for every interface that
    borders an interior cell, positivity-corrected against the face bed."""
    grid = bathy.grid
    ws_ = workspace if workspace is not None else Workspace.for_grid(grid)
    _k.faces_x(state.w, state.p, state.q, bathy.bed_face_x, numerics.theta,
               ws_.wE, ws_.wW, ws_.pE, ws_.pW, ws_.qE, ws_.qW)
    _k.faces_y(state.w, state.p, state.q, bathy.bed_face_y, numerics.theta,
               ws_.wN, ws_.wS, ws_.pN, ws_.pS, ws_.qN, ws_.qS)
    g = GHOST
    nx, ny = grid.nx, grid.ny
    rows = slice(g, g + ny)
    lcols = slice(g - 1, g + nx)      # left cell of each x interface
    rcols = slice(g, g + nx + 1)
    bfx = bathy.bed_face_x[rows, lcols]
    x_left = _side(ws_.wE[rows, lcols], ws_.pE[rows, lcols], ws_.qE[rows, lcols],
                   bfx, bathy.h_eps)
    x_right = _side(ws_.wW[rows, rcols], ws_.pW[rows, rcols], ws_.qW[rows, rcols],
                    bfx, bathy.h_eps)
    cols = slice(g, g + nx)
    lrows = slice(g - 1, g + ny)      # south cell of each y interface
    rrows = slice(g, g + ny + 1)
    bfy = bathy.bed_face_y[lrows, cols]
    y_left = _side(ws_.wN[lrows, cols], ws_.pN[lrows, cols], ws_.qN[lrows, cols],
                   bfy, bathy.h_eps)
    y_right = _side(ws_.wS[rrows, cols], ws_.pS[rrows, cols], ws_.qS[rrows, cols],
                    bfy, bathy.h_eps)
    return InterfaceStates(x_left=x_left, x_right=x_right,
                           y_left=y_left, y_right=y_right)


def central_upwind_flux(left: SideValues, right: SideValues, g: float,
                        axis: str = "x"):
    """Reference elementwise central-upwind flux between two interface
    sides; returns the three flux components.

    ``axis`` selects which velocity carries the one-sided speeds (u for x
    interfaces, v for y interfaces).
    """
    if axis not in ("x", "y"):
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    cl = np.sqrt(g * left.h)
    cr = np.sqrt(g * right.h)
    al = left.u if axis == "x" else left.v
    ar = right.u if axis == "x" else right.v
    ap = np.maximum(np.maximum(al + cl, ar + cr), 0.0)
    am = np.minimum(np.minimum(al - cl, ar - cr), 0.0)
    if axis == "x":
        f1l, f1r = left.p, right.p
        f2l = left.p * left.u + 0.5 * g * left.h ** 2
        f2r = right.p * right.u + 0.5 * g * right.h ** 2
        f3l, f3r = left.p * left.v, right.p * right.v
    else:
        f1l, f1r = left.q, right.q
        f2l, f2r = left.q * left.u, right.q * right.u
        f3l = left.q * left.v + 0.5 * g * left.h ** 2
        f3r = right.q * right.v + 0.5 * g * right.h ** 2
    span = ap - am
    safe = np.where(span > 0.0, span, 1.0)
    inv = np.where(span > 0.0, 1.0 / safe, 0.0)
    diff = ap * am * inv
    h1 = (ap * f1l - am * f1r) * inv + diff * (right.w - left.w)
    h2 = (ap * f2l - am * f2r) * inv + diff * (right.p - left.p)
    h3 = (ap * f3l - am * f3r) * inv + diff * (right.q - left.q)
    return h1, h2, h3


def friction(p, q, h, c_f: float, h_eps: float):
    """Quadratic bottom drag per unit area, opposing the flow."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    hstar = np.maximum(np.asarray(h, dtype=float), h_eps)
    speed = np.sqrt(p ** 2 + q ** 2)
    f1 = c_f * p * speed / hstar ** 2
    f2 = c_f * q * speed / hstar ** 2
    return f1, f2


def nlsw_divergence_and_source(state: FieldState, bathy: Bathymetry,
                               numerics: NumericsParams, phys: PhysParams,
                               workspace: Workspace | None = None,
                               out: tuple | None = None):
    """Per-cell rates of (w, P, Q) from the hyperbolic part: flux
    divergence, well-balanced bed-slope source, and bottom friction.

    Returns three interior-shaped arrays.
    """
    grid = bathy.grid
    ws_ = workspace if workspace is not None else Workspace.for_grid(grid)
    _k.faces_x(state.w, state.p, state.q, bathy.bed_face_x, numerics.theta,
               ws_.wE, ws_.wW, ws_.pE, ws_.pW, ws_.qE, ws_.qW)
    _k.faces_y(state.w, state.p, state.q, bathy.bed_face_y, numerics.theta,
               ws_.wN, ws_.wS, ws_.pN, ws_.pS, ws_.qN, ws_.qS)
    _k.flux_x(ws_.wE, ws_.wW, ws_.pE, ws_.pW, ws_.qE, ws_.qW, bathy.bed_face_x,
              phys.g, bathy.h_eps, GHOST, grid.nx, grid.ny,
              ws_.fx1, ws_.fx2, ws_.fx3)
    _k.flux_y(ws_.wN, ws_.wS, ws_.pN, ws_.pS, ws_.qN, ws_.qS, bathy.bed_face_y,
              phys.g, bathy.h_eps, GHOST, grid.nx, grid.ny,
              ws_.fy1, ws_.fy2, ws_.fy3)
    if out is None:
        out = (np.empty((grid.ny, grid.nx)), np.empty((grid.ny, grid.nx)),
               np.empty((grid.ny, grid.nx)))
    rw, rp, rq = out
    _k.fv_rates(ws_.fx1, ws_.fx2, ws_.fx3, ws_.fy1, ws_.fy2, ws_.fy3,
                state.w, state.p, state.q, bathy.bed_eff,
                bathy.bed_face_x, bathy.bed_face_y,
                phys.g, phys.c_f, bathy.h_eps, grid.dx, grid.dy,
                GHOST, grid.nx, grid.ny, rw, rp, rq)
    return rw, rp, rq


def speed_extrema(state: FieldState, bathy: Bathymetry, phys: PhysParams):
    """(max CFL rate, max signal speed, max water depth) over the interior.

    The CFL rate is max((|u|+c)/dx, (|v|+c)/dy); multiplying by dt gives
    the local CFL number.
    """
    grid = bathy.grid
    return _k.speed_extrema(state.w, state.p, state.q, bathy.bed_eff,
                            phys.g, bathy.h_eps, grid.dx, grid.dy,
                            GHOST, grid.nx, grid.ny)
