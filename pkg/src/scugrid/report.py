"""Render trajectory figures to image files next to the CSV output."""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURES = ("dispatch", "soc", "balance")


def load_trajectory(path):
    """Read a trajectory CSV into a dict of numpy columns (statuses as str)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: empty trajectory")
    cols: dict = {}
    for name in rows[0]:
        if name in ("status1", "status2"):
            cols[name] = [r[name] for r in rows]
        elif name in ("minute", "intervention"):
            cols[name] = np.array([int(r[name]) for r in rows])
        else:
            cols[name] = np.array([float(r[name]) for r in rows])
    return cols


def render_figures(traj, out_dir, stem="trajectory", dpi=110):
    """Write the dispatch-stack, SoC and balance figures; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    t = traj["minute"] / 60.0  # hours
    paths = []

    fig, ax = plt.subplots(figsize=(11, 4.5))
    gen = traj["p_gen1"] + traj["p_gen2"]
    discharge = np.maximum(traj["p_batt"], 0.0)
    ax.stackplot(
        t,
        traj["p_wind"],
        gen,
        discharge,
        labels=["wind", "gensets", "battery discharge"],
        colors=["#4daf4a", "#984ea3", "#ff7f00"],
        alpha=0.85,
    )
    ax.plot(t, traj["demand"], "k-", lw=1.0, label="demand")
    ax.plot(t, traj["wind_avail"], "g--", lw=0.8, alpha=0.6, label="wind available")
    charge = np.minimum(traj["p_batt"], 0.0)
    ax.fill_between(t, charge, 0.0, color="#377eb8", alpha=0.6, label="battery charge")
    ax.set_xlabel("hour")
    ax.set_ylabel("power [kW]")
    ax.set_title("dispatch stack")
    ax.legend(loc="upper right", ncols=3, fontsize=8)
    path = os.path.join(out_dir, f"{stem}_dispatch.png")
    fig.savefig(path, dpi=dpi, bbox_inches="tight")
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(11, 3.2))
    ax.plot(t, traj["soc"], color="#377eb8", lw=1.2)
    ax.axhline(0.90, color="r", ls=":", lw=0.8)
    ax.axhline(0.10, color="r", ls=":", lw=0.8)
    ax.axhline(0.05, color="darkred", ls=":", lw=0.8)
    reserve = (traj["intervention"].astype(int) & 2) != 0
    if reserve.any():
        ax.scatter(t[reserve], traj["soc"][reserve], s=8, color="darkred",
                   label="reserve floor in use", zorder=3)
        ax.legend(loc="upper right", fontsize=8)
    ax.set_xlabel("hour")
    ax.set_ylabel("state of charge")
    ax.set_ylim(0.0, 1.0)
    ax.set_title("battery state of charge")
    path = os.path.join(out_dir, f"{stem}_soc.png")
    fig.savefig(path, dpi=dpi, bbox_inches="tight")
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(11, 3.2))
    ax.plot(t, traj["balance"], color="#e41a1c", lw=0.9)
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel("hour")
    ax.set_ylabel("generation − demand [kW]")
    ax.set_title("power balance residual")
    path = os.path.join(out_dir, f"{stem}_balance.png")
    fig.savefig(path, dpi=dpi, bbox_inches="tight")
    plt.close(fig)
    paths.append(path)

    return paths


def render_report(csv_path, out_dir=None, stem=None, dpi=110):
    """Figure rendering entry point used by the command line."""
    out_dir = out_dir or os.path.dirname(os.path.abspath(csv_path))
    stem = stem or os.path.splitext(os.path.basename(csv_path))[0]
    return render_figures(load_trajectory(csv_path), out_dir, stem=stem, dpi=dpi)
