"""Stage evaluation for the predictor: hyperbolic rates plus the
dispersive surface-derivative corrections, the cross-derivative groups
advanced through stored history, and the direct evaluation of the
implicitly-filtered momenta.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as _k
from . import hydro
from .grid import GHOST, Bathymetry, FieldState, PhysParams


@dataclass
class StageSet:
    """All per-cell stage values at one time level.

    ``e`` is the rate of w; ``f``/``g`` are the explicit momentum stages
    (divergence + source - friction + dispersive terms); ``fstar``/``gstar``
    are the cross-derivative groups whose *time differences* feed the
    momentum predictor.  ``dt_after`` is filled in once the step that
    follows this stage has been taken.
    """

    e: np.ndarray
    f: np.ndarray
    g: np.ndarray
    fstar: np.ndarray
    gstar: np.ndarray
    taken_at: float = 0.0
    dt_after: float | None = None


class StageHistory:
    """Newest-first ring of the last three stage sets."""

    def __init__(self):
        self._items: list[StageSet] = []

    def __len__(self) -> int:
        return len(self._items)

    def push(self, stage: StageSet) -> None:
        self._items.insert(0, stage)
        del self._items[3:]

    @property
    def newest(self) -> StageSet:
        return self._items[0]

    @property
    def middle(self) -> StageSet:
        return self._items[1]

    @property
    def oldest(self) -> StageSet:
        return self._items[2]

    def clear(self) -> None:
        self._items.clear()


def compute_stages(state: FieldState, bathy: Bathymetry,
                   numerics: hydro.NumericsParams, phys: PhysParams,
                   t: float = 0.0,
                   workspace: hydro.Workspace | None = None) -> StageSet:
    """Evaluate every stage function on the current (ghost-filled) state.

    The surface deviation driving the dispersive terms is (w - b) - d,
    which equals the displacement from still water wherever there is
    still-water depth and vanishes identically at rest even across
    dry land, so a lake at rest produces exactly zero stages.
    """
    grid = bathy.grid
    stage = StageSet(
        e=np.empty((grid.ny, grid.nx)), f=np.empty((grid.ny, grid.nx)),
        g=np.empty((grid.ny, grid.nx)),
        fstar=np.empty((grid.ny, grid.nx)), gstar=np.empty((grid.ny, grid.nx)),
        taken_at=t)
    hydro.nlsw_divergence_and_source(state, bathy, numerics, phys,
                                     workspace=workspace,
                                     out=(stage.e, stage.f, stage.g))
    eta = (state.w - bathy.bed_eff) - bathy.depth
    _k.dispersive_rates(eta, bathy.depth, bathy.depth_dx, bathy.depth_dy,
                        phys.g, phys.b_disp, grid.dx, grid.dy,
                        GHOST, grid.nx, grid.ny, stage.f, stage.g)
    cross_groups(state, bathy, phys, out_f=stage.fstar, out_g=stage.gstar)
    for name in ("e", "f", "g", "fstar", "gstar"):
        arr = getattr(stage, name)
        if not np.isfinite(arr).all():
            j, i = np.argwhere(~np.isfinite(arr))[0]
            raise FloatingPointError(
                f"non-finite stage value: {name} at interior cell "
                f"(j={int(j)}, i={int(i)}) at t={t:.6g}")
    return stage


def cross_groups(state: FieldState, bathy: Bathymetry, phys: PhysParams,
                 out_f: np.ndarray | None = None,
                 out_g: np.ndarray | None = None):
    """Evaluate only the cross-derivative groups of a ghost-filled state.

    Used both when assembling a full stage set and on its own by the
    stepper's post-solve correction of the momentum systems.
    """
    grid = bathy.grid
    fstar = out_f if out_f is not None else np.empty((grid.ny, grid.nx))
    gstar = out_g if out_g is not None else np.empty((grid.ny, grid.nx))
    bp13 = phys.b_disp + 1.0 / 3.0
    _k.cross_rates(state.p, state.q, bathy.depth, bathy.depth_dx,
                   bathy.depth_dy, bp13, grid.dx, grid.dy,
                   GHOST, grid.nx, grid.ny, fstar, gstar)
    return fstar, gstar


def compute_ustar_vstar(state: FieldState, bathy: Bathymetry,
                        phys: PhysParams):
    """Directly evaluate the implicitly-filtered momenta from P and Q with
    second-order central differences; returns interior-shaped arrays.

    Where the still-water depth is zero this reduces to (P, Q).
    """
    grid = bathy.grid
    g = GHOST
    rows = slice(g, g + grid.ny)
    cols = slice(g, g + grid.nx)
    d = bathy.depth[rows, cols]
    bp13 = phys.b_disp + 1.0 / 3.0

    pc = state.p[rows, cols]
    pw = state.p[rows, g - 1:g + grid.nx - 1]
    pe = state.p[rows, g + 1:g + grid.nx + 1]
    p_x = (pe - pw) / (2.0 * grid.dx)
    p_xx = (pe - 2.0 * pc + pw) / grid.dx ** 2
    ustar = pc - (d * bathy.depth_dx[rows, cols] / 3.0) * p_x \
        - bp13 * d * d * p_xx

    qc = state.q[rows, cols]
    qs = state.q[g - 1:g + grid.ny - 1, cols]
    qn = state.q[g + 1:g + grid.ny + 1, cols]
    q_y = (qn - qs) / (2.0 * grid.dy)
    q_yy = (qn - 2.0 * qc + qs) / grid.dy ** 2
    vstar = qc - (d * bathy.depth_dy[rows, cols] / 3.0) * q_y \
        - bp13 * d * d * q_yy
    return ustar, vstar
