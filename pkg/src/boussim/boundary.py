"""Ghost-cell boundary policies and absorbing layers.

Each of the four sides carries exactly one policy: a reflective wall, a
monochromatic wavemaker, a spectral (irregular) wavemaker, or a sponge
(which mirrors like a wall and additionally damps a band of interior
cells after each update).  Ghost strips are written whole, in the fixed
order north, south, east, west, so the vertical sides own the corner
blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import GHOST, Bathymetry, FieldState


class ConfigurationError(ValueError):
    """A boundary or scenario configuration that cannot be run."""


SIDES = ("north", "south", "east", "west")


@dataclass(frozen=True)
class WaveComponent:
    """One linear wave: surface a*sin(omega*t + phase), flux via omega/k."""

    amplitude: float
    omega: float
    k: float
    phase: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("wave amplitude must be non-negative")
        if self.omega <= 0 or self.k <= 0:
            raise ValueError("wave frequency and wavenumber must be positive")


@dataclass(frozen=True)
class SpectrumSpec:
    """JONSWAP discretization request."""

    hs: float
    tp: float
    n_components: int
    df: float
    seed: int
    gamma: float = 3.3

    def __post_init__(self):
        if self.hs <= 0 or self.tp <= 0 or self.df <= 0:
            raise ValueError("Hs, Tp and df must be positive")
        if self.n_components < 1:
            raise ValueError("need at least one wave component")
        if self.gamma < 1:
            raise ValueError("peak enhancement must be >= 1")


@dataclass(frozen=True)
class Wall:
    kind: str = field(default="wall", init=False)


@dataclass(frozen=True)
class SineMaker:
    components: tuple[WaveComponent, ...]
    kind: str = field(default="sine", init=False)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if len(self.components) != 1:
            raise ValueError("sine maker carries exactly one component")


@dataclass(frozen=True)
class IrregularMaker:
    components: tuple[WaveComponent, ...]
    kind: str = field(default="irregular", init=False)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise ValueError("irregular maker needs at least one component")


@dataclass(frozen=True)
class Sponge:
    width: float
    lambda_max: float
    kind: str = field(default="sponge", init=False)

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("sponge width must be positive")
        if self.lambda_max < 0:
            raise ValueError("sponge strength must be non-negative")


SidePolicy = Wall | SineMaker | IrregularMaker | Sponge


def solve_dispersion(omega: float, d: float, g: float = 9.81) -> float:
    """Wavenumber of a linear wave of angular frequency omega in depth d,
    from omega^2 = g*k*tanh(k*d), by safeguarded Newton iteration seeded
    at the deep-water value omega^2/g."""
    if omega <= 0 or d <= 0 or g <= 0:
        raise ValueError("omega, depth and g must all be positive")
    target = omega * omega
    lo = target / g  # g*k*tanh(kd) <= g*k, so the deep seed is a lower bound
    hi = 2.0 * max(lo, omega / math.sqrt(g * d))
    for _ in range(200):
        if target - g * hi * math.tanh(hi * d) < 0:
            break
        lo = hi
        hi *= 2.0
    k = target / g
    for _ in range(100):
        th = math.tanh(k * d)
        resid = target - g * k * th
        if abs(resid) <= 1e-13 * target:
            return k
        if resid > 0:
            lo = k
        else:
            hi = k
        slope = -g * (th + k * d * (1.0 - th * th))
        k_new = k - resid / slope
        if not (lo < k_new < hi):
            k_new = 0.5 * (lo + hi)
        k = k_new
    raise RuntimeError(
        f"dispersion solve did not converge for omega={omega}, d={d}")


def sine_component(amplitude: float, period: float, d_boundary: float,
                   g: float = 9.81, phase: float = 0.0) -> WaveComponent:
    """Build the single component of a monochromatic maker, with the
    wavenumber taken from the linear dispersion relation."""
    omega = 2.0 * math.pi / period
    return WaveComponent(amplitude=amplitude, omega=omega,
                         k=solve_dispersion(omega, d_boundary, g),
                         phase=phase)


def jonswap_density(f: float, fp: float, gamma: float,
                    g: float = 9.81) -> float:
    """JONSWAP spectral density at frequency f (unit Phillips constant;
    the overall scale is normalized away when amplitudes are rescaled)."""
    sigma = 0.07 if f <= fp else 0.09
    r = math.exp(-((f - fp) ** 2) / (2.0 * sigma ** 2 * fp ** 2))
    return (g * g * (2.0 * math.pi) ** -4 * f ** -5
            * math.exp(-1.25 * (fp / f) ** 4) * gamma ** r)


def jonswap_components(spec: SpectrumSpec, d_boundary: float,
                       g: float = 9.81) -> list[WaveComponent]:
    """Discretize a JONSWAP spectrum into wave components.

    Frequencies are centered on the peak, spaced df apart and clipped to
    f > 0; amplitudes follow sqrt(2*S*df) and are then rescaled so the
    significant waveheight 4*sqrt(sum(a^2)/2) is exactly Hs.  Phases are
    uniform in [0, 2pi) from the given seed.
    """
    if d_boundary <= 0:
        raise ConfigurationError(
            "spectral wavemaker needs positive still-water depth")
    fp = 1.0 / spec.tp
    n = spec.n_components
    freqs = fp + (np.arange(n) - n // 2) * spec.df
    freqs = freqs[freqs > 0.0]
    dens = np.array([jonswap_density(f, fp, spec.gamma, g) for f in freqs])
    amps = np.sqrt(2.0 * dens * spec.df)
    amps *= spec.hs / (4.0 * math.sqrt(np.sum(amps ** 2) / 2.0))
    rng = np.random.default_rng(spec.seed)
    phases = rng.uniform(0.0, 2.0 * math.pi, size=freqs.size)
    out = []
    for a, f, phi in zip(amps, freqs, phases):
        omega = 2.0 * math.pi * f
        out.append(WaveComponent(amplitude=float(a), omega=float(omega),
                                 k=solve_dispersion(omega, d_boundary, g),
                                 phase=float(phi)))
    return out


def maker_surface_flux(components, t: float) -> tuple[float, float]:
    """Surface displacement and boundary-normal flux magnitude of a maker
    at time t: eta = sum a*sin(w t + phi), flux = sum a*(w/k)*sin(w t + phi)."""
    eta = 0.0
    flux = 0.0
    for c in components:
        s = c.amplitude * math.sin(c.omega * t + c.phase)
        eta += s
        flux += s * (c.omega / c.k)
    return eta, flux


# ---------------------------------------------------------------------------
# per-side ghost fills


def apply_wall(state: FieldState, side: str) -> None:
    """Reflective wall: even mirror for w and the tangential flux, odd
    mirror for the wall-normal flux.  Writes both full ghost strips."""
    g = GHOST
    w, p, q = state.w, state.p, state.q
    if side == "west":
        normal, tang = p, q
        for arr, s in ((w, 1.0), (tang, 1.0), (normal, -1.0)):
            arr[:, g - 1] = s * arr[:, g]
            arr[:, g - 2] = s * arr[:, g + 1]
    elif side == "east":
        normal, tang = p, q
        for arr, s in ((w, 1.0), (tang, 1.0), (normal, -1.0)):
            arr[:, -g] = s * arr[:, -g - 1]
            arr[:, -g + 1] = s * arr[:, -g - 2]
    elif side == "south":
        normal, tang = q, p
        for arr, s in ((w, 1.0), (tang, 1.0), (normal, -1.0)):
            arr[g - 1, :] = s * arr[g, :]
            arr[g - 2, :] = s * arr[g + 1, :]
    elif side == "north":
        normal, tang = q, p
        for arr, s in ((w, 1.0), (tang, 1.0), (normal, -1.0)):
            arr[-g, :] = s * arr[-g - 1, :]
            arr[-g + 1, :] = s * arr[-g - 2, :]
    else:
        raise ValueError(f"unknown side {side!r}")


def apply_maker(state: FieldState, bathy: Bathymetry, side: str,
                components, t: float) -> None:
    """Wavemaker ghosts: uniform along the side, independent of the
    interior.  The normal flux is signed to push into the domain; the
    tangential flux is zero."""
    eta, flux = maker_surface_flux(components, t)
    g = GHOST
    w_val = bathy.ws + eta
    w, p, q = state.w, state.p, state.q
    if side == "west":
        w[:, :g] = w_val
        p[:, :g] = flux
        q[:, :g] = 0.0
    elif side == "east":
        w[:, -g:] = w_val
        p[:, -g:] = -flux
        q[:, -g:] = 0.0
    elif side == "south":
        w[:g, :] = w_val
        q[:g, :] = flux
        p[:g, :] = 0.0
    elif side == "north":
        w[-g:, :] = w_val
        q[-g:, :] = -flux
        p[-g:, :] = 0.0
    else:
        raise ValueError(f"unknown side {side!r}")


def apply_sponge(state: FieldState, bathy: Bathymetry, side: str,
                 width: float, lambda_max: float, dt: float) -> None:
    """Damp deviations from rest in the interior band of the given width:
    (w - rest, P, Q) are multiplied by exp(-lambda*dt) with a quadratic
    strength profile peaking at the boundary edge.  Scaling by dt keeps
    the damping per unit time independent of the step size."""
    if lambda_max == 0.0:
        return
    grid = bathy.grid
    if side in ("west", "east"):
        s = (np.arange(grid.nx) + 0.5) * grid.dx
        if side == "east":
            s = s[::-1]
        in_band = s < width
        if not in_band.any():
            return
        lam = lambda_max * ((width - s[in_band]) / width) ** 2
        fac = np.exp(-lam * dt)[None, :]
        cols = np.flatnonzero(in_band)
        sel = (slice(GHOST, -GHOST), slice(GHOST + cols[0],
                                           GHOST + cols[-1] + 1))
    else:
        s = (np.arange(grid.ny) + 0.5) * grid.dy
        if side == "north":
            s = s[::-1]
        in_band = s < width
        if not in_band.any():
            return
        lam = lambda_max * ((width - s[in_band]) / width) ** 2
        fac = np.exp(-lam * dt)[:, None]
        rows = np.flatnonzero(in_band)
        sel = (slice(GHOST + rows[0], GHOST + rows[-1] + 1),
               slice(GHOST, -GHOST))
    rest = np.maximum(bathy.ws, bathy.bed_eff[sel])
    state.w[sel] = rest + (state.w[sel] - rest) * fac
    state.p[sel] *= fac
    state.q[sel] *= fac


@dataclass
class Boundaries:
    """One policy per side; ghost fills run north, south, east, west so
    the vertical sides own the corner blocks."""

    west: SidePolicy
    east: SidePolicy
    south: SidePolicy
    north: SidePolicy

    def side(self, name: str) -> SidePolicy:
        return getattr(self, name)

    def apply_ghosts(self, state: FieldState, bathy: Bathymetry,
                     t: float) -> None:
        for name in SIDES:
            policy = self.side(name)
            if isinstance(policy, (Wall, Sponge)):
                apply_wall(state, name)
            else:
                apply_maker(state, bathy, name, policy.components, t)

    def damp(self, state: FieldState, bathy: Bathymetry, dt: float) -> None:
        for name in SIDES:
            policy = self.side(name)
            if isinstance(policy, Sponge):
                apply_sponge(state, bathy, name, policy.width,
                             policy.lambda_max, dt)

    def validate(self, bathy: Bathymetry) -> None:
        """Reject configurations the schemes cannot support: wavemakers on
        (partly) dry sides and sponge bands thinner than two cells."""
        grid = bathy.grid
        edges = {
            "west": bathy.depth[GHOST:-GHOST, GHOST],
            "east": bathy.depth[GHOST:-GHOST, -GHOST - 1],
            "south": bathy.depth[GHOST, GHOST:-GHOST],
            "north": bathy.depth[-GHOST - 1, GHOST:-GHOST],
        }
        for name in SIDES:
            policy = self.side(name)
            if isinstance(policy, (SineMaker, IrregularMaker)):
                if edges[name].min() <= 0.0:
                    raise ConfigurationError(
                        f"wavemaker on {name} side requires positive "
                        f"still-water depth along the whole boundary")
            elif isinstance(policy, Sponge):
                cell = grid.dx if name in ("west", "east") else grid.dy
                if policy.width < 2.0 * cell:
                    raise ConfigurationError(
                        f"sponge on {name} side must span at least two "
                        f"cells (width {policy.width} < {2 * cell})")
