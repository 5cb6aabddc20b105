"""Recovery of the momentum fields from their implicitly-filtered
counterparts: one tridiagonal system per grid row (x momentum) and per
grid column (y momentum).

The matrix is the exact discrete form of the dispersive filter applied to
P (or Q), so coefficients depend only on the bathymetry and are assembled
once.  Ghost contributions are folded into the right-hand side using
boundary-supplied ghost values.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .grid import GHOST, Bathymetry, PhysParams

SOLVERS = ("thomas", "cr")


@dataclass(frozen=True)
class TridiagonalSystem:
    """One tridiagonal system a_i x_{i-1} + b_i x_i + c_i x_{i+1} = r_i.

    ``sub[0]`` and ``sup[-1]`` are ignored.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        n = self.diag.shape[0]
        if n < 1:
            raise ValueError("empty system")
        for name in ("sub", "diag", "sup", "rhs"):
            arr = getattr(self, name)
            if arr.shape != (n,):
                raise ValueError(f"{name} has shape {arr.shape}, expected ({n},)")
            if not np.isfinite(arr).all():
                raise ValueError(f"non-finite values in {name}")
        if np.any(self.diag == 0.0):
            raise ValueError("zero main-diagonal entry")

    @property
    def n(self) -> int:
        return self.diag.shape[0]


def thomas_solve(system: TridiagonalSystem) -> np.ndarray:
    """Serial elimination solve of a single system."""
    out = np.empty((1, system.n))
    _k.thomas_batch(system.sub[None, :], system.diag[None, :],
                    system.sup[None, :], system.rhs[None, :], out)
    return out[0]


def cyclic_reduction_solve(system: TridiagonalSystem) -> np.ndarray:
    """Odd-even reduction solve of a single system (any size; padded
    internally to a power of two with decoupled identity rows)."""
    out = np.empty((1, system.n))
    _k.cyclic_reduction_batch(system.sub[None, :], system.diag[None, :],
                              system.sup[None, :], system.rhs[None, :], out)
    return out[0]


@dataclass(frozen=True)
class ImplicitCoefficients:
    """Precomputed tridiagonal coefficients for every row (x) and, stored
    transposed for contiguous batched solves, every column (y)."""

    ax: np.ndarray
    bx: np.ndarray
    cx: np.ndarray
    ay_t: np.ndarray
    by_t: np.ndarray
    cy_t: np.ndarray


def _coefficients(d, slope, delta, bp13):
    curv = bp13 * d * d / delta ** 2
    drift = d * slope / (6.0 * delta)
    a = drift - curv
    b = 1.0 + 2.0 * curv
    c = -drift - curv
    return a, b, c


def assemble(bathy: Bathymetry, phys: PhysParams,
             warn_dominance: bool = True) -> ImplicitCoefficients:
    """Build per-cell coefficients for both directions.

    Dry cells (zero still-water depth) come out as identity rows, so the
    solve degenerates to a copy there.  Emits a warning if any row loses
    strict diagonal dominance (possible over very steep, shallow bed).
    """
    grid = bathy.grid
    ii = grid.interior
    d = bathy.depth[ii]
    bp13 = phys.b_disp + 1.0 / 3.0
    ax, bx, cx = _coefficients(d, bathy.depth_dx[ii], grid.dx, bp13)
    ay, by, cy = _coefficients(d, bathy.depth_dy[ii], grid.dy, bp13)
    if warn_dominance:
        for a, b, c, tag in ((ax, bx, cx, "x"), (ay, by, cy, "y")):
            bad = np.abs(b) - np.abs(a) - np.abs(c) <= 0.0
            if bad.any():
                warnings.warn(
                    f"{int(bad.sum())} {tag}-direction rows lose diagonal "
                    "dominance (steep bed relative to depth); solves may be "
                    "inaccurate there", UserWarning, stacklevel=2)
    return ImplicitCoefficients(
        ax=np.ascontiguousarray(ax), bx=np.ascontiguousarray(bx),
        cx=np.ascontiguousarray(cx),
        ay_t=np.ascontiguousarray(ay.T), by_t=np.ascontiguousarray(by.T),
        cy_t=np.ascontiguousarray(cy.T))


def assemble_line(bathy: Bathymetry, phys: PhysParams, direction: str,
                  index: int):
    """Coefficient triple (sub, diag, sup) for one grid line.

    ``direction`` "x" selects row ``index`` (system along x); "y" selects
    column ``index``.
    """
    grid = bathy.grid
    g = GHOST
    bp13 = phys.b_disp + 1.0 / 3.0
    if direction == "x":
        d = bathy.depth[g + index, g:g + grid.nx]
        slope = bathy.depth_dx[g + index, g:g + grid.nx]
        return _coefficients(d, slope, grid.dx, bp13)
    if direction == "y":
        d = bathy.depth[g:g + grid.ny, g + index]
        slope = bathy.depth_dy[g:g + grid.ny, g + index]
        return _coefficients(d, slope, grid.dy, bp13)
    raise ValueError(f"direction must be 'x' or 'y', got {direction!r}")


def apply_x(coef: ImplicitCoefficients, p_padded: np.ndarray) -> np.ndarray:
    """Matrix-vector product of the x-direction operator with a padded
    momentum field; returns the interior-shaped result."""
    g = GHOST
    ny, nx = coef.ax.shape
    rows = slice(g, g + ny)
    pw = p_padded[rows, g - 1:g + nx - 1]
    pc = p_padded[rows, g:g + nx]
    pe = p_padded[rows, g + 1:g + nx + 1]
    return coef.ax * pw + coef.bx * pc + coef.cx * pe


def apply_y(coef: ImplicitCoefficients, q_padded: np.ndarray) -> np.ndarray:
    g = GHOST
    nx, ny = coef.ay_t.shape
    cols = slice(g, g + nx)
    qs = q_padded[g - 1:g + ny - 1, cols]
    qc = q_padded[g:g + ny, cols]
    qn = q_padded[g + 1:g + ny + 1, cols]
    return coef.ay_t.T * qs + coef.by_t.T * qc + coef.cy_t.T * qn


def _batched(solver: str):
    if solver == "thomas":
        return _k.thomas_batch
    if solver == "cr":
        return _k.cyclic_reduction_batch
    raise ValueError(f"unknown solver {solver!r}; expected one of {SOLVERS}")


def solve_x(coef: ImplicitCoefficients, rhs: np.ndarray,
            ghost_west: np.ndarray, ghost_east: np.ndarray,
            solver: str = "thomas") -> np.ndarray:
    """Solve every row's system; ghost contributions move to the RHS."""
    folded = np.array(rhs, dtype=float, copy=True)
    folded[:, 0] -= coef.ax[:, 0] * ghost_west
    folded[:, -1] -= coef.cx[:, -1] * ghost_east
    out = np.empty_like(folded)
    _batched(solver)(coef.ax, coef.bx, coef.cx, folded, out)
    return out


def solve_y(coef: ImplicitCoefficients, rhs: np.ndarray,
            ghost_south: np.ndarray, ghost_north: np.ndarray,
            solver: str = "thomas") -> np.ndarray:
    """Solve every column's system (runs on the transposed layout)."""
    folded = np.ascontiguousarray(rhs.T)
    folded[:, 0] -= coef.ay_t[:, 0] * ghost_south
    folded[:, -1] -= coef.cy_t[:, -1] * ghost_north
    out = np.empty_like(folded)
    _batched(solver)(coef.ay_t, coef.by_t, coef.cy_t, folded, out)
    return out.T


def solve_momentum(ustar: np.ndarray, vstar: np.ndarray,
                   pg_west: np.ndarray, pg_east: np.ndarray,
                   qg_south: np.ndarray, qg_north: np.ndarray,
                   coef: ImplicitCoefficients, solver: str = "thomas"):
    """Recover (P, Q) interiors from predicted (U*, V*) and known ghost
    momenta at the four sides."""
    p = solve_x(coef, ustar, pg_west, pg_east, solver=solver)
    q = solve_y(coef, vstar, qg_south, qg_north, solver=solver)
    return p, q
