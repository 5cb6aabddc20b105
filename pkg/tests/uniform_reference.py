"""Hand-rolled constant-step integrator with the classical third-order
multistep coefficients written out literally.

This is the reference the production stepper is pinned against: same
stage evaluations and solves, but the time integration is the textbook
uniform-step scheme (two Euler bootstrap steps, then 23/-16/5 twelfths
for the rates and the 2/-3/1 combination for the stored cross groups).
"""

import numpy as np

from boussim import dispersion, implicit
from boussim.grid import GHOST


def run_uniform(state0, bathy, bounds, numerics, phys, dt, n_steps):
    g = GHOST
    ii = bathy.grid.interior
    nx, ny = bathy.grid.nx, bathy.grid.ny
    state = state0.copy()
    coef = implicit.assemble(bathy, phys)
    hist = []
    t = 0.0
    for n in range(1, n_steps + 1):
        bounds.apply_ghosts(state, bathy, t)
        stage = dispersion.compute_stages(state, bathy, numerics, phys, t=t)
        hist.insert(0, stage)
        del hist[3:]
        ustar, vstar = dispersion.compute_ustar_vstar(state, bathy, phys)
        if n < 3:
            w_new = state.w[ii] + dt * stage.e
            us_new = ustar + dt * stage.f
            vs_new = vstar + dt * stage.g
        else:
            s0, s1, s2 = hist
            wc = (23.0 / 12.0) * dt
            wp = (-16.0 / 12.0) * dt
            wp2 = (5.0 / 12.0) * dt
            w_new = state.w[ii] + (wc * s0.e + wp * s1.e + wp2 * s2.e)
            us_new = ustar + (wc * s0.f + wp * s1.f + wp2 * s2.f) \
                + (2.0 * s0.fstar + -3.0 * s1.fstar + 1.0 * s2.fstar)
            vs_new = vstar + (wc * s0.g + wp * s1.g + wp2 * s2.g) \
                + (2.0 * s0.gstar + -3.0 * s1.gstar + 1.0 * s2.gstar)
        new_state = state.copy()
        new_state.w[ii] = w_new
        bounds.apply_ghosts(new_state, bathy, t + dt)
        p_new, q_new = implicit.solve_momentum(
            us_new, vs_new,
            pg_west=new_state.p[g:-g, g - 1],
            pg_east=new_state.p[g:-g, nx + g],
            qg_south=new_state.q[g - 1, g:-g],
            qg_north=new_state.q[ny + g, g:-g],
            coef=coef)
        new_state.w[ii] = np.maximum(new_state.w[ii], bathy.bed[ii])
        new_state.p[ii] = p_new
        new_state.q[ii] = q_new
        bounds.damp(new_state, bathy, dt)
        state = new_state
        t += dt
    return state
