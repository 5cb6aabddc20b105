"""Batch front end: JSON config in, artifact directory out.

``simulate run config.json`` builds the scenario, advances the solver to
the requested duration with progress lines on stderr, and writes gauge
CSVs, a step-size history CSV, ESRI ASCII field snapshots, an optional
runup profile and a JSON summary.  ``simulate report <run-dir>`` renders
figures from those artifacts.  Exit codes: 0 success, 2 configuration
error, 3 instability abort.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import boundary as bc
from . import hydro, scenario, stepper
from .grid import (Bathymetry, FieldState, Grid, PhysParams,
                   atomic_write_text, build_bathymetry, load_ascii_grid,
                   still_state, write_ascii_grid)

DT_HISTORY_HEADER = "step,time,dt,max_cfl,max_speed,max_depth"
SNAPSHOT_FIELDS = ("w", "P", "Q", "max_w")
ALPHA_RECOMMENDED = (0.01, 0.5)


class ConfigError(ValueError):
    """Configuration rejected; the message starts with the key path."""


# ---------------------------------------------------------------------------
# schema plumbing

_REQUIRED = object()


class _Block:
    """One JSON object being consumed key by key; leftovers are errors."""

    def __init__(self, data, path: str):
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected an object")
        self._data = dict(data)
        self._path = path

    def has(self, key: str) -> bool:
        return key in self._data

    def child(self, key: str, required=True) -> "_Block | None":
        raw = self._data.pop(key, None)
        if raw is None:
            if required:
                raise ConfigError(f"{self._path}.{key}: missing required block")
            return None
        return _Block(raw, f"{self._path}.{key}")

    def take(self, key: str, kind, default=_REQUIRED, allowed=None):
        path = f"{self._path}.{key}"
        if key not in self._data:
            if default is _REQUIRED:
                raise ConfigError(f"{path}: missing required key")
            return default
        val = self._data.pop(key)
        if kind is float:
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise ConfigError(f"{path}: expected a number, got {val!r}")
            val = float(val)
            if not math.isfinite(val):
                raise ConfigError(f"{path}: must be finite")
        elif kind is int:
            if isinstance(val, bool) or not isinstance(val, int):
                raise ConfigError(f"{path}: expected an integer, got {val!r}")
        elif kind is bool:
            if not isinstance(val, bool):
                raise ConfigError(f"{path}: expected a boolean, got {val!r}")
        elif kind is str:
            if not isinstance(val, str):
                raise ConfigError(f"{path}: expected a string, got {val!r}")
        elif kind is list:
            if not isinstance(val, list):
                raise ConfigError(f"{path}: expected a list, got {val!r}")
        if allowed is not None and val not in allowed:
            raise ConfigError(
                f"{path}: must be one of {sorted(allowed)}, got {val!r}")
        return val

    def take_pair(self, key: str, default=_REQUIRED):
        val = self.take(key, list, default=default)
        if val is default and default is not _REQUIRED:
            return val
        if (not isinstance(val, list) or len(val) != 2
                or any(isinstance(v, bool) or not isinstance(v, (int, float))
                       for v in val)):
            raise ConfigError(
                f"{self._path}.{key}: expected a pair of numbers")
        return (float(val[0]), float(val[1]))

    def finish(self):
        if self._data:
            key = sorted(self._data)[0]
            raise ConfigError(f"{self._path}.{key}: unknown key")

    @property
    def path(self):
        return self._path


def _positive(value: float, path: str) -> float:
    if not value > 0.0:
        raise ConfigError(f"{path}: must be positive, got {value}")
    return value


# ---------------------------------------------------------------------------
# parsed configuration


@dataclass(frozen=True)
class OutputSpec:
    directory: str
    snapshot_interval: float = 0.0
    fields: tuple[str, ...] = SNAPSHOT_FIELDS


@dataclass(frozen=True)
class RunConfig:
    """Validated run request; scenario/boundary blocks stay as plain
    dicts (normalized keys) and are materialized by build_simulation."""

    grid: Grid
    phys: PhysParams
    numerics: hydro.NumericsParams
    dt_init: float
    dt_min: float
    dt_max: float | None
    alpha: float
    mode: str
    solver: str
    cross_correction: bool
    h_dry: float | None
    boundary_spec: dict
    scenario_spec: dict
    gauges: tuple[scenario.GaugeSpec, ...]
    outputs: OutputSpec
    duration: float
    seed: int
    source_path: str | None = None


def _parse_side(block: _Block) -> dict:
    kind = block.take("type", str,
                      allowed={"wall", "sine", "jonswap", "sponge"})
    out = {"type": kind}
    if kind == "sine":
        out["amplitude"] = _positive(block.take("amplitude", float),
                                     f"{block.path}.amplitude")
        out["period"] = _positive(block.take("period", float),
                                  f"{block.path}.period")
        out["phase"] = block.take("phase", float, default=0.0)
    elif kind == "jonswap":
        out["hs"] = _positive(block.take("hs", float), f"{block.path}.hs")
        out["tp"] = _positive(block.take("tp", float), f"{block.path}.tp")
        out["n_components"] = block.take("n_components", int, default=64)
        if out["n_components"] < 1:
            raise ConfigError(f"{block.path}.n_components: must be >= 1")
        df = block.take("df", float,
                        default=2.0 / (out["n_components"] * out["tp"]))
        out["df"] = _positive(df, f"{block.path}.df")
        out["gamma"] = block.take("gamma", float, default=3.3)
    elif kind == "sponge":
        out["width"] = _positive(block.take("width", float),
                                 f"{block.path}.width")
        out["lambda_max"] = block.take("lambda_max", float, default=10.0)
        if out["lambda_max"] < 0:
            raise ConfigError(f"{block.path}.lambda_max: must be >= 0")
    block.finish()
    return out


def _parse_runup(block: _Block, island: dict | None) -> dict:
    out = {}
    if island is not None:
        out["slope"] = block.take("slope", float, default=island["slope"])
        out["center"] = block.take_pair("center", default=island["center"])
        norm_default = scenario.island_shoreline_radius(
            island["depth"], island["base_diameter"], island["slope"])
    else:
        out["slope"] = block.take("slope", float)
        out["center"] = block.take_pair("center")
        norm_default = None
    out["delta"] = block.take("delta", float, default=None)
    if out["delta"] is not None:
        _positive(out["delta"], f"{block.path}.delta")
    out["n_azimuths"] = block.take("n_azimuths", int, default=72)
    if out["n_azimuths"] < 4:
        raise ConfigError(f"{block.path}.n_azimuths: must be >= 4")
    out["normalize_by"] = block.take("normalize_by", float,
                                     default=norm_default)
    block.finish()
    return out


def _parse_wave(block: _Block, ambient_depth: float | None) -> dict:
    depth = block.take("depth", float,
                       default=ambient_depth if ambient_depth else _REQUIRED)
    out = {
        "height": _positive(block.take("height", float),
                            f"{block.path}.height"),
        "depth": _positive(depth, f"{block.path}.depth"),
        "crest_x": block.take("crest_x", float),
        "direction": block.take("direction", str, default="+x",
                                allowed={"+x", "-x"}),
    }
    block.finish()
    return out


def _parse_scenario(block: _Block, grid: Grid) -> dict:
    domain_center = (grid.x0 + 0.5 * grid.nx * grid.dx,
                     grid.y0 + 0.5 * grid.ny * grid.dy)
    if block.has("bathymetry_file"):
        out = {
            "name": "file",
            "bathymetry_file": block.take("bathymetry_file", str),
            "ws": block.take("ws", float),
        }
        wave = block.child("wave", required=False)
        out["wave"] = _parse_wave(wave, None) if wave else None
        runup = block.child("runup", required=False)
        out["runup"] = _parse_runup(runup, None) if runup else None
        block.finish()
        return out

    name = block.take("name", str, allowed={
        "conical_island", "rip_channel", "lake_at_rest", "flat_basin"})
    out = {"name": name}
    ambient = None
    island = None
    if name == "conical_island":
        island = {
            "depth": _positive(block.take("depth", float, default=0.32),
                               f"{block.path}.depth"),
            "base_diameter": _positive(
                block.take("base_diameter", float, default=7.2),
                f"{block.path}.base_diameter"),
            "slope": _positive(block.take("slope", float, default=0.25),
                               f"{block.path}.slope"),
            "crest_height": _positive(
                block.take("crest_height", float, default=0.625),
                f"{block.path}.crest_height"),
            "center": block.take_pair("center", default=None)
            or domain_center,
        }
        out.update(island)
        ambient = island["depth"]
    elif name == "rip_channel":
        pass  # the bed formula has no free parameters
    elif name == "lake_at_rest":
        out["depth"] = _positive(block.take("depth", float, default=1.0),
                                 f"{block.path}.depth")
        out["hump_height"] = block.take("hump_height", float,
                                        default=0.5 * out["depth"])
        if not 0.0 <= out["hump_height"] < out["depth"]:
            raise ConfigError(
                f"{block.path}.hump_height: must lie in [0, depth) so the "
                "hump stays submerged")
        out["hump_sigma"] = block.take("hump_sigma", float, default=None)
        out["center"] = block.take_pair("center", default=None)
        ambient = out["depth"]
    elif name == "flat_basin":
        out["depth"] = _positive(block.take("depth", float, default=1.0),
                                 f"{block.path}.depth")
        ambient = out["depth"]

    wave = block.child("wave", required=False)
    out["wave"] = _parse_wave(wave, ambient) if wave else None
    runup = block.child("runup", required=False)
    out["runup"] = _parse_runup(runup, island) if runup else None
    block.finish()
    return out


def parse_config(path) -> RunConfig:
    """Load and validate a JSON run configuration."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as err:
        raise ConfigError(f"{path}: {err.strerror or err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON ({err})") from err
    return parse_config_data(data, source_path=os.fspath(path))


def parse_config_data(data: dict, source_path: str | None = None) -> RunConfig:
    root = _Block(data, "config")

    gb = root.child("grid")
    grid_kw = {
        "nx": gb.take("nx", int), "ny": gb.take("ny", int),
        "dx": gb.take("dx", float), "dy": gb.take("dy", float),
        "x0": gb.take("x0", float, default=0.0),
        "y0": gb.take("y0", float, default=0.0),
    }
    gb.finish()
    try:
        grid = Grid(**grid_kw)
    except ValueError as err:
        raise ConfigError(f"config.grid: {err}") from err

    pb = root.child("physics", required=False)
    phys_kw = {"g": 9.81, "b_disp": 1.0 / 15.0, "c_f": 0.0}
    h_eps = None
    if pb is not None:
        phys_kw["g"] = pb.take("g", float, default=9.81)
        phys_kw["b_disp"] = pb.take("b_disp", float, default=1.0 / 15.0)
        phys_kw["c_f"] = pb.take("c_f", float, default=0.0)
        h_eps = pb.take("h_eps", float, default=None)
        pb.finish()
    try:
        phys = PhysParams(**phys_kw)
    except ValueError as err:
        raise ConfigError(f"config.physics: {err}") from err

    nb = root.child("numerics")
    theta = nb.take("theta", float, default=1.5)
    cfl_target = nb.take("cfl_target", float, default=0.125)
    alpha = nb.take("alpha", float, default=0.2)
    dt_init = _positive(nb.take("dt_init", float), "config.numerics.dt_init")
    dt_min = _positive(nb.take("dt_min", float,
                               default=stepper.DT_MIN_DEFAULT),
                       "config.numerics.dt_min")
    dt_max = nb.take("dt_max", float, default=None)
    mode = nb.take("mode", str, default="adaptive", allowed=set(stepper.MODES))
    solver = nb.take("tridiag_solver", str, default="thomas",
                     allowed={"thomas", "cr"})
    cross_correction = nb.take("cross_correction", bool, default=True)
    h_dry = nb.take("h_dry", float, default=None)
    if h_dry is not None and h_dry < 0.0:
        raise ConfigError(
            f"config.numerics.h_dry: must be non-negative, got {h_dry}")
    nb.finish()
    if not 0.0 < cfl_target < 0.25:
        raise ConfigError(
            f"config.numerics.cfl_target: must be in (0, 0.25); the "
            f"explicit scheme is unstable at CFL >= 0.25 (got {cfl_target})")
    if not 0.0 < alpha <= 1.0:
        raise ConfigError(
            f"config.numerics.alpha: must be in (0, 1], got {alpha}")
    if not ALPHA_RECOMMENDED[0] <= alpha <= ALPHA_RECOMMENDED[1]:
        warnings.warn(
            f"config.numerics.alpha: {alpha} is outside the recommended "
            f"range [{ALPHA_RECOMMENDED[0]}, {ALPHA_RECOMMENDED[1]}]; the "
            "step size will chase the CFL candidate aggressively",
            stacklevel=2)
    try:
        numerics = hydro.NumericsParams(theta=theta, cfl_target=cfl_target)
    except ValueError as err:
        raise ConfigError(f"config.numerics: {err}") from err

    bb = root.child("boundaries")
    boundary_spec = {}
    for side in ("west", "east", "south", "north"):
        boundary_spec[side] = _parse_side(bb.child(side))
    bb.finish()

    scenario_spec = _parse_scenario(root.child("scenario"), grid)
    scenario_spec["h_eps"] = h_eps

    gauges = []
    for idx, item in enumerate(root.take("gauges", list, default=[])):
        blk = _Block(item, f"config.gauges[{idx}]")
        gid = blk.take("id", str)
        gx = blk.take("x", float)
        gy = blk.take("y", float)
        interval = blk.take("record_interval", float, default=0.0)
        blk.finish()
        try:
            spec = scenario.GaugeSpec(gid, gx, gy, record_interval=interval)
            scenario.gauge_cell(grid, gx, gy)
        except ValueError as err:
            raise ConfigError(f"config.gauges[{idx}]: {err}") from err
        gauges.append(spec)
    if len({g.gauge_id for g in gauges}) != len(gauges):
        raise ConfigError("config.gauges: duplicate gauge ids")

    ob = root.child("outputs")
    directory = ob.take("directory", str)
    snap_iv = ob.take("snapshot_interval", float, default=0.0)
    if snap_iv < 0.0:
        raise ConfigError(
            "config.outputs.snapshot_interval: must be >= 0")
    fields = tuple(ob.take("fields", list, default=list(SNAPSHOT_FIELDS)))
    for f in fields:
        if f not in SNAPSHOT_FIELDS:
            raise ConfigError(
                f"config.outputs.fields: unknown field {f!r}; choose from "
                f"{list(SNAPSHOT_FIELDS)}")
    ob.finish()

    duration = _positive(root.take("duration", float), "config.duration")
    seed = root.take("seed", int, default=0)
    root.finish()

    if h_eps is not None:
        _positive(h_eps, "config.physics.h_eps")
    if dt_max is not None and not dt_min <= dt_init <= dt_max:
        raise ConfigError(
            f"config.numerics: need dt_min <= dt_init <= dt_max, got "
            f"({dt_min}, {dt_init}, {dt_max})")

    return RunConfig(
        grid=grid, phys=phys, numerics=numerics, dt_init=dt_init,
        dt_min=dt_min, dt_max=dt_max, alpha=alpha, mode=mode, solver=solver,
        cross_correction=cross_correction, h_dry=h_dry,
        boundary_spec=boundary_spec,
        scenario_spec=scenario_spec, gauges=tuple(gauges),
        outputs=OutputSpec(directory=directory, snapshot_interval=snap_iv,
                           fields=fields),
        duration=duration, seed=seed, source_path=source_path)


# ---------------------------------------------------------------------------
# materialization


@dataclass
class RunBundle:
    sim: stepper.Simulator
    recorder: scenario.GaugeRecorder
    tracker: scenario.MaxSurfaceTracker
    runup: scenario.RunupSpec | None
    runup_n_azimuths: int
    runup_normalize_by: float | None


def _build_bathy_state(cfg: RunConfig) -> tuple[Bathymetry, FieldState]:
    spec = cfg.scenario_spec
    grid = cfg.grid
    h_eps = spec.get("h_eps")
    name = spec["name"]
    if name == "conical_island":
        bathy = scenario.conical_island_bathymetry(
            grid, depth=spec["depth"], base_diameter=spec["base_diameter"],
            slope=spec["slope"], crest_height=spec["crest_height"],
            center=spec["center"], h_eps=h_eps)
    elif name == "rip_channel":
        bathy = scenario.rip_channel_bathymetry(grid, h_eps=h_eps)
    elif name == "lake_at_rest":
        cx, cy = spec["center"] or (
            grid.x0 + 0.5 * grid.nx * grid.dx,
            grid.y0 + 0.5 * grid.ny * grid.dy)
        sigma = spec["hump_sigma"] or 0.1 * min(grid.nx * grid.dx,
                                                grid.ny * grid.dy)
        xc, yc = np.meshgrid(grid.x_centers(), grid.y_centers())
        bed = -spec["depth"] + spec["hump_height"] * np.exp(
            -((xc - cx) ** 2 + (yc - cy) ** 2) / (2.0 * sigma ** 2))
        bathy = build_bathymetry(grid, bed, ws=0.0, h_eps=h_eps)
    elif name == "flat_basin":
        bed = np.full((grid.ny, grid.nx), -spec["depth"])
        bathy = build_bathymetry(grid, bed, ws=0.0, h_eps=h_eps)
    elif name == "file":
        raster = load_ascii_grid(spec["bathymetry_file"])
        ny, nx = raster.values.shape
        if (nx, ny) != (grid.nx, grid.ny):
            raise ConfigError(
                f"config.scenario.bathymetry_file: raster is {nx}x{ny}, "
                f"grid block says {grid.nx}x{grid.ny}")
        if abs(raster.cellsize - grid.dx) > 1e-12 or \
                abs(raster.cellsize - grid.dy) > 1e-12:
            raise ConfigError(
                "config.scenario.bathymetry_file: raster cellsize "
                f"{raster.cellsize} does not match grid dx/dy")
        bathy = build_bathymetry(grid, raster.values, ws=spec["ws"],
                                 h_eps=h_eps)
    else:  # pragma: no cover - guarded by the parser
        raise ConfigError(f"config.scenario.name: unknown {name!r}")

    if spec.get("wave"):
        w = spec["wave"]
        wave = scenario.SolitaryWaveSpec(
            height=w["height"], depth=w["depth"], crest_x=w["crest_x"],
            direction=w["direction"])
        state = scenario.solitary_wave_ic(wave, bathy, g=cfg.phys.g)
    else:
        state = still_state(bathy)
    return bathy, state


def _build_boundaries(cfg: RunConfig, bathy: Bathymetry) -> bc.Boundaries:
    from .grid import GHOST

    edge_depth = {
        "west": float(bathy.depth[GHOST:-GHOST, GHOST].min()),
        "east": float(bathy.depth[GHOST:-GHOST, -GHOST - 1].min()),
        "south": float(bathy.depth[GHOST, GHOST:-GHOST].min()),
        "north": float(bathy.depth[-GHOST - 1, GHOST:-GHOST].min()),
    }
    sides = {}
    for side, desc in cfg.boundary_spec.items():
        kind = desc["type"]
        try:
            if kind == "wall":
                sides[side] = bc.Wall()
            elif kind == "sine":
                comp = bc.sine_component(
                    desc["amplitude"], desc["period"], edge_depth[side],
                    g=cfg.phys.g, phase=desc["phase"])
                sides[side] = bc.SineMaker(components=(comp,))
            elif kind == "jonswap":
                spec = bc.SpectrumSpec(
                    hs=desc["hs"], tp=desc["tp"],
                    n_components=desc["n_components"], df=desc["df"],
                    seed=cfg.seed, gamma=desc["gamma"])
                comps = bc.jonswap_components(spec, edge_depth[side],
                                              g=cfg.phys.g)
                sides[side] = bc.IrregularMaker(components=tuple(comps))
            else:
                sides[side] = bc.Sponge(width=desc["width"],
                                        lambda_max=desc["lambda_max"])
        except (ValueError, bc.ConfigurationError) as err:
            raise ConfigError(f"config.boundaries.{side}: {err}") from err
    return bc.Boundaries(**sides)


def build_simulation(cfg: RunConfig) -> RunBundle:
    """Materialize a parsed config into a ready-to-run bundle."""
    bathy, state = _build_bathy_state(cfg)
    boundaries = _build_boundaries(cfg, bathy)
    try:
        controller = stepper.TimeController(
            dt_init=cfg.dt_init, cfl_target=cfg.numerics.cfl_target,
            alpha=cfg.alpha, mode=cfg.mode, dt_min=cfg.dt_min,
            dt_max=cfg.dt_max if cfg.dt_max is not None
            else 10.0 * cfg.dt_init)
        sim = stepper.Simulator(
            bathy, state, boundaries, controller, numerics=cfg.numerics,
            phys=cfg.phys, solver=cfg.solver,
            cross_correction=cfg.cross_correction, h_dry=cfg.h_dry)
    except (ValueError, bc.ConfigurationError) as err:
        raise ConfigError(f"config: {err}") from err

    recorder = scenario.GaugeRecorder(bathy, list(cfg.gauges))
    tracker = scenario.MaxSurfaceTracker(bathy)
    runup_spec = None
    n_az = 72
    normalize_by = None
    rp = cfg.scenario_spec.get("runup")
    if rp:
        runup_spec = scenario.RunupSpec(slope=rp["slope"],
                                        center=tuple(rp["center"]),
                                        delta=rp["delta"])
        n_az = rp["n_azimuths"]
        normalize_by = rp["normalize_by"]
    return RunBundle(sim=sim, recorder=recorder, tracker=tracker,
                     runup=runup_spec, runup_n_azimuths=n_az,
                     runup_normalize_by=normalize_by)


# ---------------------------------------------------------------------------
# artifact writers


def _snapshot_paths(out_dir: str, fields, t: float) -> dict[str, str]:
    stamp = f"{t:012.6f}"
    return {f: os.path.join(out_dir, f"{f}_{stamp}.asc") for f in fields}


def _write_snapshots(out_dir: str, fields, bundle: RunBundle,
                     t: float) -> list[str]:
    sim = bundle.sim
    grid = sim.bathy.grid
    ii = grid.interior
    sources = {
        "w": lambda: sim.state.w[ii],
        "P": lambda: sim.state.p[ii],
        "Q": lambda: sim.state.q[ii],
        "max_w": lambda: bundle.tracker.max_w,
    }
    written = []
    for name, path in _snapshot_paths(out_dir, fields, t).items():
        write_ascii_grid(path, sources[name](), cellsize=grid.dx,
                         xll=grid.x0, yll=grid.y0)
        written.append(path)
    return written


def _write_dt_history(out_dir: str, records) -> str:
    rows = [DT_HISTORY_HEADER]
    for r in records:
        rows.append(f"{r.step_index},{r.sim_time:.12g},{r.dt:.12g},"
                    f"{r.max_cfl:.12g},{r.max_speed:.12g},{r.max_depth:.12g}")
    path = os.path.join(out_dir, "dt_history.csv")
    atomic_write_text(path, "\n".join(rows) + "\n")
    return path


def _write_summary(out_dir: str, payload: dict) -> str:
    path = os.path.join(out_dir, "summary.json")
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True)
                      + "\n")
    return path


def run(cfg: RunConfig, progress=sys.stderr) -> int:
    """Execute a validated config; returns the process exit code."""
    out_dir = cfg.outputs.directory
    os.makedirs(out_dir, exist_ok=True)
    bundle = build_simulation(cfg)
    sim = bundle.sim
    recorder = bundle.recorder
    tracker = bundle.tracker

    t_wall = time.perf_counter()
    initial_mass = sim.state.mass(sim.bathy)
    recorder.record(sim.state, 0.0)
    tracker.update(sim.state)
    artifacts: list[str] = []

    snap_iv = cfg.outputs.snapshot_interval
    if snap_iv > 0.0:
        artifacts += _write_snapshots(out_dir, cfg.outputs.fields, bundle,
                                      0.0)
    next_snap = snap_iv if snap_iv > 0.0 else math.inf
    next_mark = 1.0

    def on_step(sim_, rec):
        nonlocal next_snap, next_mark
        t = rec.sim_time
        recorder.record(sim_.state, t)
        tracker.update(sim_.state)
        if t + 1e-12 >= next_snap:
            artifacts.extend(_write_snapshots(
                out_dir, cfg.outputs.fields, bundle, t))
            next_snap += snap_iv
        while t + 1e-12 >= next_mark:
            if progress is not None:
                print(f"t={next_mark:10.2f}s  step={rec.step_index:8d}  "
                      f"dt={rec.dt:.4e}  max_cfl={rec.max_cfl:.4f}",
                      file=progress)
            next_mark += 1.0

    abort = None
    try:
        sim.run(cfg.duration, on_step=on_step)
    except stepper.InstabilityError as err:
        abort = err
        if err.state is not None:
            ii = sim.bathy.grid.interior
            grid = sim.bathy.grid
            for name, arr in (("w", err.state.w), ("P", err.state.p),
                              ("Q", err.state.q)):
                path = os.path.join(out_dir, f"abort_{name}.asc")
                write_ascii_grid(path, arr[ii], cellsize=grid.dx,
                                 xll=grid.x0, yll=grid.y0)
                artifacts.append(path)

    artifacts += recorder.write_csv(out_dir)
    artifacts.append(_write_dt_history(out_dir, sim.records))
    if abort is None:
        artifacts += _write_snapshots(out_dir, cfg.outputs.fields, bundle,
                                      sim.controller.sim_time)
        if bundle.runup is not None:
            profile = scenario.runup_profile(
                tracker.max_w, sim.bathy, bundle.runup,
                n_azimuths=bundle.runup_n_azimuths,
                normalize_by=bundle.runup_normalize_by)
            path = os.path.join(out_dir, "runup.csv")
            scenario.write_runup_csv(path, profile)
            artifacts.append(path)

    dts = np.array([r.dt for r in sim.records]) if sim.records else \
        np.array([math.nan])
    final_mass = sim.state.mass(sim.bathy)
    summary = {
        "config": cfg.source_path,
        "steps": len(sim.records),
        "sim_time": sim.controller.sim_time,
        "wall_time_s": time.perf_counter() - t_wall,
        "dt_mean": float(dts.mean()),
        "dt_min": float(dts.min()),
        "dt_max": float(dts.max()),
        "mode": cfg.mode,
        "initial_mass": initial_mass,
        "final_mass": final_mass,
        "mass_drift_rel": (final_mass - initial_mass)
        / max(abs(initial_mass), 1e-300),
        "clamped_volume": sim.clamped_volume,
        "abort": None if abort is None else {
            "step": abort.step_index, "time": abort.sim_time,
            "reason": str(abort)},
        "artifacts": sorted(os.path.basename(p) for p in artifacts),
    }
    artifacts.append(_write_summary(out_dir, summary))
    if abort is not None:
        if progress is not None:
            print(f"aborted: {abort}", file=progress)
        return 3
    return 0


# ---------------------------------------------------------------------------
# argument handling


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if args.duration is not None:
        cfg = replace(cfg, duration=_positive(args.duration,
                                              "--duration"))
    if args.output_dir is not None:
        cfg = replace(cfg, outputs=replace(cfg.outputs,
                                           directory=args.output_dir))
    if args.mode is not None:
        cfg = replace(cfg, mode=args.mode)
    if args.cfl is not None:
        if not 0.0 < args.cfl < 0.25:
            raise ConfigError(
                f"--cfl: must be in (0, 0.25), got {args.cfl}")
        cfg = replace(
            cfg,
            numerics=hydro.NumericsParams(theta=cfg.numerics.theta,
                                          cfl_target=args.cfl))
    if args.fixed_dt is not None:
        _positive(args.fixed_dt, "--fixed-dt")
        dt_max = cfg.dt_max
        if dt_max is not None and args.fixed_dt > dt_max:
            dt_max = args.fixed_dt
        cfg = replace(cfg, mode="fixed", dt_init=args.fixed_dt,
                      dt_max=dt_max,
                      dt_min=min(cfg.dt_min, args.fixed_dt))
    return cfg


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Boussinesq wave solver batch runner")
    sub = parser.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="execute a run configuration")
    runp.add_argument("config", help="path to the JSON run configuration")
    runp.add_argument("--duration", type=float, default=None,
                      help="override the simulated duration (s)")
    runp.add_argument("--output-dir", default=None,
                      help="override the artifact directory")
    runp.add_argument("--mode", choices=list(stepper.MODES), default=None,
                      help="override the stepping mode")
    runp.add_argument("--cfl", type=float, default=None,
                      help="override the CFL target (must be < 0.25)")
    runp.add_argument("--fixed-dt", type=float, default=None,
                      help="run at this constant step (implies --mode fixed)")

    repp = sub.add_parser("report",
                          help="render figures from a run directory")
    repp.add_argument("run_dir", help="artifact directory of a finished run")
    repp.add_argument("--output-dir", default=None,
                      help="write figures here instead of into the run dir")
    return parser


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    if args.command == "run":
        try:
            cfg = parse_config(args.config)
            cfg = _apply_overrides(cfg, args)
            return run(cfg)
        except ConfigError as err:
            print(f"configuration error: {err}", file=sys.stderr)
            return 2
    if args.command == "report":
        from . import report
        try:
            written = report.render_report(args.run_dir,
                                           out_dir=args.output_dir)
        except FileNotFoundError as err:
            print(f"report error: {err}", file=sys.stderr)
            return 2
        for path in written:
            print(path)
        return 0
    return 2  # pragma: no cover


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
