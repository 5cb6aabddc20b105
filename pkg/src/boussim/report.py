"""Figure rendering for finished run directories.

Reads only the delimited/raster artifacts a run leaves behind (CSV,
ASCII grids, summary JSON), so it can run long after the simulation in
a separate process.  All figures are written atomically next to the
data (or into ``out_dir``).
"""

from __future__ import annotations

import glob
import json
import math
import os
import tempfile

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .grid import load_ascii_grid  # noqa: E402


def _save(fig, path: str) -> str:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".png")
    os.close(fd)
    try:
        fig.savefig(tmp, dpi=130, bbox_inches="tight")
        os.replace(tmp, path)
    finally:
        plt.close(fig)
        if os.path.exists(tmp):
            os.unlink(tmp)
    return path


def _read_csv(path: str) -> np.ndarray:
    data = np.genfromtxt(path, delimiter=",", names=True)
    return np.atleast_1d(data)


def render_dt_trace(run_dir: str, out_dir: str) -> str | None:
    path = os.path.join(run_dir, "dt_history.csv")
    if not os.path.exists(path):
        return None
    hist = _read_csv(path)
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(8, 5))
    ax1.plot(hist["time"], hist["dt"], lw=0.9)
    ax1.set_ylabel("dt (s)")
    ax1.set_yscale("log")
    ax1.grid(alpha=0.3)
    ax2.plot(hist["time"], hist["max_cfl"], lw=0.9, color="tab:orange")
    ax2.axhline(0.25, color="tab:red", ls="--", lw=0.8, label="stability bound")
    ax2.set_ylabel("max CFL")
    ax2.set_xlabel("simulated time (s)")
    ax2.grid(alpha=0.3)
    ax2.legend(loc="best", fontsize=8)
    fig.suptitle("step size and CFL history")
    return _save(fig, os.path.join(out_dir, "dt_trace.png"))


def render_gauges(run_dir: str, out_dir: str) -> str | None:
    paths = sorted(glob.glob(os.path.join(run_dir, "gauge_*.csv")))
    if not paths:
        return None
    fig, ax = plt.subplots(figsize=(9, 4.5))
    for path in paths:
        label = os.path.basename(path)[len("gauge_"):-len(".csv")]
        series = _read_csv(path)
        if series.size == 0:
            continue
        ax.plot(series["t"], series["eta"], lw=0.9, label=label)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("surface elevation (m)")
    ax.grid(alpha=0.3)
    ax.legend(loc="best", fontsize=8, ncol=2)
    ax.set_title("gauge records")
    return _save(fig, os.path.join(out_dir, "gauges.png"))


def render_runup(run_dir: str, out_dir: str) -> str | None:
    path = os.path.join(run_dir, "runup.csv")
    if not os.path.exists(path):
        return None
    prof = _read_csv(path)
    theta = np.deg2rad(prof["azimuth_deg"])
    theta = np.append(theta, theta[0] + 2 * math.pi)  # close the loop
    radius = np.append(prof["radius_m"], prof["radius_m"][0])
    norm = np.append(prof["normalized"], prof["normalized"][0])
    fig, ax = plt.subplots(subplot_kw={"projection": "polar"},
                           figsize=(6, 6))
    ax.plot(theta, radius, lw=1.2, label="inundation limit")
    if not np.allclose(radius, norm):
        shoreline = radius / norm
        ax.plot(theta, shoreline, ls="--", lw=0.9, color="gray",
                label="still-water shoreline")
    ax.set_title("runup profile (m from center)")
    ax.legend(loc="lower left", bbox_to_anchor=(-0.1, -0.1), fontsize=8)
    return _save(fig, os.path.join(out_dir, "runup_polar.png"))


def render_surface(run_dir: str, out_dir: str) -> str | None:
    w_snaps = sorted(glob.glob(os.path.join(run_dir, "w_*.asc")))
    max_snaps = sorted(glob.glob(os.path.join(run_dir, "max_w_*.asc")))
    if not w_snaps:
        return None
    panels = [("final surface w (m)", w_snaps[-1])]
    if max_snaps:
        panels.append(("running max surface (m)", max_snaps[-1]))
    fig, axes = plt.subplots(1, len(panels),
                             figsize=(6 * len(panels), 5), squeeze=False)
    for ax, (title, path) in zip(axes[0], panels):
        raster = load_ascii_grid(path)
        ny, nx = raster.values.shape
        extent = (raster.xll, raster.xll + nx * raster.cellsize,
                  raster.yll, raster.yll + ny * raster.cellsize)
        im = ax.imshow(raster.values, origin="lower", extent=extent,
                       aspect="equal", cmap="viridis")
        fig.colorbar(im, ax=ax, shrink=0.8)
        ax.set_title(title)
        ax.set_xlabel("x (m)")
        ax.set_ylabel("y (m)")
    return _save(fig, os.path.join(out_dir, "surface.png"))


def render_report(run_dir: str, out_dir: str | None = None) -> list[str]:
    """Render every figure the run directory has data for; returns the
    paths written."""
    if not os.path.isdir(run_dir):
        raise FileNotFoundError(f"run directory {run_dir!r} does not exist")
    out_dir = out_dir or run_dir
    os.makedirs(out_dir, exist_ok=True)
    summary_path = os.path.join(run_dir, "summary.json")
    if os.path.exists(summary_path):
        with open(summary_path) as fh:
            json.load(fh)  # fail early on truncated/corrupt summaries
    written = []
    for renderer in (render_dt_trace, render_gauges, render_runup,
                     render_surface):
        path = renderer(run_dir, out_dir)
        if path is not None:
            written.append(path)
    if not written:
        raise FileNotFoundError(
            f"{run_dir}: no renderable artifacts (dt_history.csv, "
            "gauge_*.csv, runup.csv, w_*.asc)")
    return written
