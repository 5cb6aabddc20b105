"""Time integration: CFL-driven adaptive step control with lazy
exponential smoothing, variable-step third-order predictors for the
surface and the filtered momenta, Euler bootstrap, and the per-step
pipeline tying stages, boundary fills and the implicit solves together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import dispersion, hydro, implicit, multistep
from .boundary import Boundaries
from .grid import GHOST, Bathymetry, FieldState, PhysParams

DT_MIN_DEFAULT = 1e-7

MODES = ("adaptive", "fixed")


class InstabilityError(RuntimeError):
    """The run blew up; carries a snapshot of the offending state."""

    def __init__(self, message: str, step_index: int, sim_time: float,
                 state: FieldState | None = None):
        super().__init__(message)
        self.step_index = step_index
        self.sim_time = sim_time
        self.state = state


@dataclass
class TimeController:
    """Step-size state: the dt to apply next, the two preceding applied
    steps, and the smoothing/clamping parameters."""

    dt_init: float
    cfl_target: float = 0.125
    alpha: float = 0.2
    mode: str = "adaptive"
    dt_min: float = DT_MIN_DEFAULT
    dt_max: float | None = None
    dt: float = field(init=False)
    dt_prev: float = field(init=False, default=math.nan)
    dt_prev2: float = field(init=False, default=math.nan)
    step_index: int = field(init=False, default=1)
    sim_time: float = field(init=False, default=0.0)

    def __post_init__(self):
        if not (math.isfinite(self.dt_init) and self.dt_init > 0):
            raise ValueError(f"dt_init must be positive, got {self.dt_init}")
        if self.dt_max is None:
            self.dt_max = 10.0 * self.dt_init
        if not (0.0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ValueError(
                f"need 0 < dt_min <= dt_init <= dt_max, got "
                f"({self.dt_min}, {self.dt_init}, {self.dt_max})")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0.0 < self.cfl_target < 0.25:
            raise ValueError(
                f"cfl_target must be in (0, 0.25), got {self.cfl_target}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        self.dt = self.dt_init


@dataclass(frozen=True)
class StepRecord:
    """One line of the dt-history log."""

    step_index: int
    sim_time: float
    dt: float
    max_cfl: float
    max_speed: float
    max_depth: float


def compute_cfl_dt(state: FieldState, bathy: Bathymetry, phys: PhysParams,
                   cfl_target: float, dt_min: float = DT_MIN_DEFAULT,
                   dt_max: float = math.inf) -> float:
    """Largest step keeping every cell's local CFL below the target:
    cfl / max((|u|+c)/dx, (|v|+c)/dy), clamped to [dt_min, dt_max].
    A fully still or dry domain returns dt_max."""
    ii = bathy.grid.interior
    for name, arr in (("w", state.w), ("P", state.p), ("Q", state.q)):
        vals = arr[ii]
        if not np.isfinite(vals).all():
            j, i = np.argwhere(~np.isfinite(vals))[0]
            raise FloatingPointError(
                f"non-finite {name} at interior cell (j={int(j)}, i={int(i)})")
    max_rate, _, _ = hydro.speed_extrema(state, bathy, phys)
    if max_rate <= 0.0:
        return dt_max
    return min(max(cfl_target / max_rate, dt_min), dt_max)


def lazy_ema(dt_candidate: float, dt_prev: float, alpha: float) -> float:
    """Asymmetric smoothing of the step size: decreases pass through
    instantly, increases are blended so the step grows gradually."""
    if dt_candidate <= dt_prev:
        return dt_candidate
    return alpha * dt_candidate + (1.0 - alpha) * dt_prev


def predict_w(state: FieldState, history: dispersion.StageHistory,
              steps: multistep.StepTriple) -> np.ndarray:
    """Third-order surface update from three stored rate levels."""
    wts = multistep.ab3_weights(steps, ratio_policy="clamp")
    w_int = state.w[GHOST:-GHOST, GHOST:-GHOST]
    return multistep.ab3_step(w_int, history.newest.e, history.middle.e,
                              history.oldest.e, wts)


def _predict_uvstar_parts(ustar: np.ndarray, vstar: np.ndarray,
                          history: dispersion.StageHistory,
                          steps: multistep.StepTriple):
    """As predict_uvstar, but also return the quadrature-only bases
    (no cross-group increment) that the correction sweep builds on."""
    wts = multistep.ab3_weights(steps, ratio_policy="clamp")
    sc, sp, sp2 = multistep.increment_weights(steps, ratio_policy="clamp")
    s0, s1, s2 = history.newest, history.middle, history.oldest
    base_u = ustar + (wts.w_cur * s0.f + wts.w_prev * s1.f
                      + wts.w_prev2 * s2.f)
    base_v = vstar + (wts.w_cur * s0.g + wts.w_prev * s1.g
                      + wts.w_prev2 * s2.g)
    us = base_u + (sc * s0.fstar + sp * s1.fstar + sp2 * s2.fstar)
    vs = base_v + (sc * s0.gstar + sp * s1.gstar + sp2 * s2.gstar)
    return base_u, base_v, us, vs


def predict_uvstar(ustar: np.ndarray, vstar: np.ndarray,
                   history: dispersion.StageHistory,
                   steps: multistep.StepTriple):
    """Third-order update of the filtered momenta: quadrature of the
    explicit stages plus the folded increment of the stored cross
    groups (their time derivative integrated over the new step)."""
    _, _, us, vs = _predict_uvstar_parts(ustar, vstar, history, steps)
    return us, vs


class Simulator:
    """Owns the state, history and controller and advances them one step
    at a time.

    The per-step pipeline: fill ghosts at t_n, evaluate stages, push
    history, predict w/U*/V* (Euler on the first two steps), fill the
    t_{n+1} ghosts for the momentum solve, solve the two tridiagonal
    families, assemble the new state (clamping the surface to the bed,
    with the injected volume tracked, and dropping the momentum of films
    thinner than ``h_dry``), damp sponge bands, then update the step size
    from the new state's CFL candidate.

    With ``cross_correction`` (the default) the momenta are solved twice:
    the cross-derivative groups are re-evaluated on the first solution
    and the systems re-solved with the exact cross increment in place of
    the extrapolated one.  The extrapolated form alone couples the two
    momentum families through a step-ratio-free feedback whose gain
    exceeds one once the still-water depth spans more than about a cell
    and a half, so grid-scale noise doubles every step no matter how
    small the step is; re-solving against the predicted fields turns
    that feedback into a contraction at every resolvable wavenumber.
    Disable it only to reproduce the plain single-pass predictor in
    equivalence tests.
    """

    def __init__(self, bathy: Bathymetry, state: FieldState,
                 boundaries: Boundaries, controller: TimeController,
                 numerics: hydro.NumericsParams | None = None,
                 phys: PhysParams | None = None,
                 solver: str = "thomas",
                 blowup_bound: float | None = None,
                 cross_correction: bool = True,
                 h_dry: float | None = None):
        self.bathy = bathy
        self.state = state
        self.boundaries = boundaries
        self.controller = controller
        self.numerics = numerics if numerics is not None else \
            hydro.NumericsParams(cfl_target=controller.cfl_target)
        self.phys = phys if phys is not None else PhysParams()
        self.solver = solver
        # Films thinner than this keep their water but carry no momentum.
        # Sub-tenth-millimetre sheets at the wetting front otherwise end up
        # with finite P over vanishing h, and the resulting fake velocities
        # drag the adaptive step down by orders of magnitude.  Zero disables
        # the cutoff.
        self.h_dry = h_dry if h_dry is not None else 100.0 * bathy.h_eps
        if self.h_dry < 0.0:
            raise ValueError("h_dry must be non-negative")
        state.validate(bathy)
        boundaries.validate(bathy)
        self.coef = implicit.assemble(bathy, self.phys)
        self.workspace = hydro.Workspace.for_grid(bathy.grid)
        self.history = dispersion.StageHistory()
        self.records: list[StepRecord] = []
        self._rest = np.maximum(bathy.ws, bathy.bed_eff)
        ii = bathy.grid.interior
        amp0 = float(np.max(np.abs(state.w[ii] - self._rest[ii])))
        self.initial_amplitude = amp0
        self.blowup_bound = (blowup_bound if blowup_bound is not None
                             else 10.0 * amp0 + 1.0)
        self.clamped_volume = 0.0
        self.last_scheme: str | None = None
        self.cross_correction = cross_correction
        self._chain = controller.dt_init
        self._extrema = hydro.speed_extrema(state, bathy, self.phys)

    # -- single step --------------------------------------------------

    def advance(self, dt: float | None = None) -> StepRecord:
        c = self.controller
        dt_used = c.dt if dt is None else dt
        try:
            return self._advance(dt_used)
        except FloatingPointError as err:
            raise InstabilityError(
                f"aborted at step {c.step_index}, t={c.sim_time:.6g}: {err}",
                step_index=c.step_index, sim_time=c.sim_time,
                state=self.state) from err

    def _advance(self, dt_used: float) -> StepRecord:
        c = self.controller
        bathy = self.bathy
        state = self.state
        t = c.sim_time
        g = GHOST
        ii = bathy.grid.interior

        self.boundaries.apply_ghosts(state, bathy, t)
        stage = dispersion.compute_stages(state, bathy, self.numerics,
                                          self.phys, t=t,
                                          workspace=self.workspace)
        self.history.push(stage)
        ustar, vstar = dispersion.compute_ustar_vstar(state, bathy, self.phys)
        if c.step_index < 3:
            w_new = multistep.euler_step(state.w[ii], stage.e, dt_used)
            base_u = multistep.euler_step(ustar, stage.f, dt_used)
            base_v = multistep.euler_step(vstar, stage.g, dt_used)
            us_new, vs_new = base_u, base_v
            self.last_scheme = "euler"
        else:
            steps = multistep.StepTriple(dt_used, c.dt_prev, c.dt_prev2)
            w_new = predict_w(state, self.history, steps)
            base_u, base_v, us_new, vs_new = _predict_uvstar_parts(
                ustar, vstar, self.history, steps)
            self.last_scheme = "ab3"

        new_state = state.copy()
        new_state.w[ii] = w_new
        self.boundaries.apply_ghosts(new_state, bathy, t + dt_used)
        p_new, q_new = implicit.solve_momentum(
            us_new, vs_new,
            pg_west=new_state.p[g:-g, g - 1],
            pg_east=new_state.p[g:-g, bathy.grid.nx + g],
            qg_south=new_state.q[g - 1, g:-g],
            qg_north=new_state.q[bathy.grid.ny + g, g:-g],
            coef=self.coef, solver=self.solver)
        if self.cross_correction:
            # Re-solve with the cross increment taken between the stored
            # groups and the groups of the fields just solved for.  Only
            # the interior right-hand side changes: the ghost cells (and
            # with them the boundary folding) stay exactly as in the
            # first solve, so the walls see no intra-step feedback.
            new_state.p[ii] = p_new
            new_state.q[ii] = q_new
            fs_pred, gs_pred = dispersion.cross_groups(new_state, bathy,
                                                       self.phys)
            us_corr = base_u + (fs_pred - stage.fstar)
            vs_corr = base_v + (gs_pred - stage.gstar)
            p_new, q_new = implicit.solve_momentum(
                us_corr, vs_corr,
                pg_west=new_state.p[g:-g, g - 1],
                pg_east=new_state.p[g:-g, bathy.grid.nx + g],
                qg_south=new_state.q[g - 1, g:-g],
                qg_north=new_state.q[bathy.grid.ny + g, g:-g],
                coef=self.coef, solver=self.solver)
        deficit = bathy.bed_eff[ii] - new_state.w[ii]
        clamped = float(np.sum(np.maximum(deficit, 0.0)))
        if clamped > 0.0:
            self.clamped_volume += clamped * bathy.grid.dx * bathy.grid.dy
        new_state.w[ii] = np.maximum(new_state.w[ii], bathy.bed_eff[ii])
        new_state.p[ii] = p_new
        new_state.q[ii] = q_new
        if self.h_dry > 0.0:
            film = (new_state.w[ii] - bathy.bed_eff[ii]) < self.h_dry
            if film.any():
                new_state.p[ii][film] = 0.0
                new_state.q[ii][film] = 0.0
        self.boundaries.damp(new_state, bathy, dt_used)

        dev = np.max(np.abs(new_state.w[ii] - self._rest[ii]))
        if not np.isfinite(dev) or dev > self.blowup_bound:
            raise InstabilityError(
                f"surface deviation {dev:.3g} exceeded the blow-up bound "
                f"{self.blowup_bound:.3g} at step {c.step_index}, "
                f"t={t + dt_used:.6g}",
                step_index=c.step_index, sim_time=t + dt_used,
                state=new_state)

        extrema_start = self._extrema
        self._extrema = hydro.speed_extrema(new_state, bathy, self.phys)
        if c.mode == "adaptive":
            cand = compute_cfl_dt(new_state, bathy, self.phys, c.cfl_target,
                                  c.dt_min, c.dt_max)
            self._chain = lazy_ema(cand, self._chain, c.alpha)
            # the two bootstrap steps run at the user-supplied dt; the
            # smoothing chain still accumulates from the very first step
            c.dt = self._chain if c.step_index + 1 >= 3 else c.dt_init

        stage.dt_after = dt_used
        c.dt_prev2 = c.dt_prev
        c.dt_prev = dt_used
        c.sim_time = t + dt_used
        record = StepRecord(step_index=c.step_index, sim_time=c.sim_time,
                            dt=dt_used, max_cfl=dt_used * extrema_start[0],
                            max_speed=extrema_start[1],
                            max_depth=extrema_start[2])
        self.records.append(record)
        c.step_index += 1
        self.state = new_state
        return record

    # -- run loop ------------------------------------------------------

    def run(self, until: float, on_step=None) -> list[StepRecord]:
        """Advance until sim_time reaches ``until`` (absolute), truncating
        the final step to land exactly on it."""
        c = self.controller
        eps = 1e-12 * max(1.0, abs(until))
        while c.sim_time < until - eps:
            remaining = until - c.sim_time
            dt = c.dt if c.dt <= remaining else remaining
            record = self.advance(dt)
            if on_step is not None:
                on_step(self, record)
        return self.records
