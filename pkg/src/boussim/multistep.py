"""Variable-step third-order Adams-Bashforth primitives.

This module provides the scalar weight computations used by the time
stepper: quadrature weights that advance a state from three stored rate
levels taken at unequal times, second-order finite-difference stencils
that estimate the time derivative of a stored quantity at each of the
three history levels, and the folded combination of the two.

Conventions
-----------
The three history levels are "newest" (time t_n), "middle" (t_{n-1}) and
"oldest" (t_{n-2}).  A :class:`StepTriple` carries the step about to be
taken, ``dt = t_{n+1} - t_n``, together with the two history gaps
``dt_prev = t_n - t_{n-1}`` and ``dt_prev2 = t_{n-1} - t_{n-2}``.

All weights are exact for quadratic polynomials, which fixes them
uniquely; with equal steps they reduce to the classical third-order
Adams-Bashforth coefficients (23, -16, 5)/12 and the classical one-sided
and central second-order difference stencils.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

#: Permitted range for consecutive step ratios.  Outside this range the
#: quadratic-interpolation weights are still well defined but increasingly
#: ill-conditioned, so they are rejected (or clamped, by choice).
RATIO_MIN = 0.1
RATIO_MAX = 10.0

HistoryLevel = Literal["newest", "middle", "oldest"]


@dataclass(frozen=True)
class StepTriple:
    """The current step length and the two preceding history gaps."""

    dt: float
    dt_prev: float
    dt_prev2: float

    def is_uniform(self) -> bool:
        return self.dt == self.dt_prev == self.dt_prev2

    def validated(self, ratio_policy: str = "reject") -> "StepTriple":
        """Return a triple safe to build weights from.

        Non-finite or non-positive entries always raise.  Consecutive
        ratios outside [RATIO_MIN, RATIO_MAX] either raise
        (``ratio_policy="reject"``) or are repaired by clamping the two
        *history* gaps toward the current step (``"clamp"``).  The current
        step length is never altered: it fixes the integration interval.
        """
        for name, value in (
            ("dt", self.dt),
            ("dt_prev", self.dt_prev),
            ("dt_prev2", self.dt_prev2),
        ):
            if not math.isfinite(value) or value <= 0.0:
                raise ValueError(f"step triple entry {name}={value!r} must be positive and finite")
        r1 = self.dt / self.dt_prev
        r2 = self.dt_prev / self.dt_prev2
        # small slack so ratios that are exactly on the boundary in real
        # arithmetic are not rejected for a one-ulp rounding
        lo = RATIO_MIN * (1.0 - 1e-12)
        hi = RATIO_MAX * (1.0 + 1e-12)
        in_range = lo <= r1 <= hi and lo <= r2 <= hi
        if in_range:
            return self
        if ratio_policy == "reject":
            raise ValueError(
                f"consecutive step ratios ({r1:.3g}, {r2:.3g}) outside "
                f"[{RATIO_MIN}, {RATIO_MAX}]; shrink the step change or use clamping"
            )
        if ratio_policy != "clamp":
            raise ValueError(f"unknown ratio_policy {ratio_policy!r}")
        dt_prev = min(max(self.dt_prev, self.dt / RATIO_MAX), self.dt / RATIO_MIN)
        dt_prev2 = min(max(self.dt_prev2, dt_prev / RATIO_MAX), dt_prev / RATIO_MIN)
        return StepTriple(self.dt, dt_prev, dt_prev2)


@dataclass(frozen=True)
class QuadratureWeights:
    """Weights applied to the newest/middle/oldest rate levels.

    ``x_next = x + w_cur * f_newest + w_prev * f_middle + w_prev2 * f_oldest``
    integrates the quadratic through the three rate samples exactly over
    the new step, so ``w_cur + w_prev + w_prev2`` equals the step length.
    """

    w_cur: float
    w_prev: float
    w_prev2: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.w_cur, self.w_prev, self.w_prev2)


@dataclass(frozen=True)
class DifferenceWeights:
    """Three-point stencil estimating a time derivative at one level.

    Applied to the stored values newest-first:
    ``dy/dt ~= c_cur * y_newest + c_prev * y_middle + c_prev2 * y_oldest``.
    """

    c_cur: float
    c_prev: float
    c_prev2: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.c_cur, self.c_prev, self.c_prev2)


def ab3_weights(steps: StepTriple, ratio_policy: str = "reject") -> QuadratureWeights:
    """Quadrature weights for one predictor step over ``steps.dt``.

    With equal steps the exact classical coefficients are returned; the
    uniform branch keeps equal-step trajectories bit-identical to a
    fixed-step integrator built from the 23/-16/5 twelfths directly.
    """
    steps = steps.validated(ratio_policy)
    dt = steps.dt
    if steps.is_uniform():
        return QuadratureWeights(
            (23.0 / 12.0) * dt, (-16.0 / 12.0) * dt, (5.0 / 12.0) * dt
        )
    a = steps.dt_prev
    b = steps.dt_prev2
    w_cur = (dt / 6.0) * (dt * (2.0 * dt + 6.0 * a + 3.0 * b) / (a * (a + b)) + 6.0)
    w_prev = -(dt / 6.0) * (dt * (2.0 * dt + 3.0 * a + 3.0 * b) / (a * b))
    w_prev2 = (dt / 6.0) * (dt * (2.0 * dt + 3.0 * a) / (b * (a + b)))
    return QuadratureWeights(w_cur, w_prev, w_prev2)


def ab3_step(x, f_newest, f_middle, f_oldest, weights: QuadratureWeights):
    """Advance ``x`` by the weighted combination of three rate levels.

    Works elementwise on scalars or numpy arrays.
    """
    return x + (
        weights.w_cur * f_newest
        + weights.w_prev * f_middle
        + weights.w_prev2 * f_oldest
    )


def euler_step(x, f, dt: float):
    """First-order update used to bootstrap before history exists."""
    return x + dt * f


def vfd_weights(
    level: HistoryLevel, dt_prev: float, dt_prev2: float
) -> DifferenceWeights:
    """Second-order derivative stencil at one of the three history levels.

    ``level`` selects where the derivative is evaluated: "newest" gives a
    backward stencil, "middle" a central one and "oldest" a forward one.
    Only the two history gaps enter; the upcoming step does not.
    """
    for name, value in (("dt_prev", dt_prev), ("dt_prev2", dt_prev2)):
        if not math.isfinite(value) or value <= 0.0:
            raise ValueError(f"history gap {name}={value!r} must be positive and finite")
    if dt_prev == dt_prev2:
        h = dt_prev
        if level == "newest":
            return DifferenceWeights(1.5 / h, -2.0 / h, 0.5 / h)
        if level == "middle":
            return DifferenceWeights(0.5 / h, 0.0, -0.5 / h)
        if level == "oldest":
            return DifferenceWeights(-0.5 / h, 2.0 / h, -1.5 / h)
        raise ValueError(f"unknown history level {level!r}")
    a = dt_prev
    b = dt_prev2
    if level == "newest":
        return DifferenceWeights(
            (2.0 * a + b) / (a * (a + b)),
            -(a + b) / (a * b),
            a / (b * (a + b)),
        )
    if level == "middle":
        return DifferenceWeights(
            b / (a * (a + b)),
            (a - b) / (a * b),
            -a / (b * (a + b)),
        )
    if level == "oldest":
        return DifferenceWeights(
            -b / (a * (a + b)),
            (a + b) / (a * b),
            -(a + 2.0 * b) / (b * (a + b)),
        )
    raise ValueError(f"unknown history level {level!r}")


def increment_weights(
    steps: StepTriple, ratio_policy: str = "reject"
) -> tuple[float, float, float]:
    """Folded weights turning three stored values into an increment.

    For a quantity Y kept only as history values, the change of Y over the
    new step is approximated by quadrature of its stencil-estimated time
    derivatives.  Folding quadrature weights with the three stencils gives
    one coefficient per stored value, newest first.  With equal steps the
    combination collapses to exactly (2, -3, 1), and for quadratic Y the
    result is the exact increment ``Y(t_{n+1}) - Y(t_n)``.
    """
    steps = steps.validated(ratio_policy)
    if steps.is_uniform():
        return (2.0, -3.0, 1.0)
    w = ab3_weights(steps)
    newest = vfd_weights("newest", steps.dt_prev, steps.dt_prev2)
    middle = vfd_weights("middle", steps.dt_prev, steps.dt_prev2)
    oldest = vfd_weights("oldest", steps.dt_prev, steps.dt_prev2)
    s_cur = w.w_cur * newest.c_cur + w.w_prev * middle.c_cur + w.w_prev2 * oldest.c_cur
    s_prev = (
        w.w_cur * newest.c_prev + w.w_prev * middle.c_prev + w.w_prev2 * oldest.c_prev
    )
    s_prev2 = (
        w.w_cur * newest.c_prev2
        + w.w_prev * middle.c_prev2
        + w.w_prev2 * oldest.c_prev2
    )
    return (s_cur, s_prev, s_prev2)
