#!/usr/bin/env python3
"""
Plot the CSV tables written by `ctbn experiment`.

Usage:
    python scripts/plot_error_curves.py results/error-vs-samples.csv -o error.png
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402


def plot_error_vs_samples(frame: pd.DataFrame, ax: plt.Axes) -> None:
    for burn_in, group in frame.groupby("burn_in"):
        ax.loglog(group["total_samples"], group["error"], marker="o", label=f"burn-in {burn_in}")
        if len(group) > 1:
            slope = np.polyfit(np.log(group["total_samples"]), np.log(group["error"]), 1)[0]
            ax.annotate(f"{slope:.2f}", (group["total_samples"].iloc[-1], group["error"].iloc[-1]))
    ax.set_xlabel("samples")
    ax.set_ylabel("average relative error")
    ax.legend()


def plot_error_vs_burnin(frame: pd.DataFrame, ax: plt.Axes) -> None:
    ax.semilogy(frame["burn_in"], frame["error"], marker="o")
    ax.set_xlabel("burn-in sweeps")
    ax.set_ylabel("average relative error")


def plot_sharpness(frame: pd.DataFrame, ax: plt.Axes) -> None:
    ax.semilogy(frame["alpha"], frame["error"], marker="o")
    ax.set_xlabel("sharpness alpha")
    ax.set_ylabel("average relative error")


def plot_scaling(frame: pd.DataFrame, ax: plt.Axes) -> None:
    longest = frame[frame["burn_in"] == frame["burn_in"].max()]
    for size, group in longest.groupby("network_size"):
        ax.loglog(group["iterations"], group["error"], marker="o", label=f"N = {size}")
    ax.set_xlabel("iterations")
    ax.set_ylabel("average relative error")
    ax.legend()


def plot_run_time(frame: pd.DataFrame, ax: plt.Axes) -> None:
    for size, group in frame.groupby("network_size"):
        ax.loglog(group["seconds"], group["error"], marker="o", label=f"N = {size}")
    ax.set_xlabel("run time (s)")
    ax.set_ylabel("average relative error")
    ax.legend()


def plot_iterations(frame: pd.DataFrame, ax: plt.Axes) -> None:
    if "network_size" in frame.columns:
        frame = frame[frame["network_size"] == frame["network_size"].max()]
    for component, group in frame.groupby("component"):
        ax.plot(group["iteration"], group["transitions"], label=f"X{component}")
    ax.set_xlabel("iteration")
    ax.set_ylabel("sampled transitions")
    ax.legend()


def plot_timescale(frame: pd.DataFrame, ax: plt.Axes) -> None:
    ax.bar(frame["component"] - 0.2, frame["expected_transitions"], width=0.4, label="expected")
    ax.bar(frame["component"] + 0.2, frame["mean_transitions"], width=0.4, label="sampled")
    ax.set_xlabel("component")
    ax.set_ylabel("transitions per sample")
    ax.legend()


PLOTTERS = {
    "total_samples": plot_error_vs_samples,
    "mean_log_likelihood": plot_error_vs_burnin,
    "alpha": plot_sharpness,
    "iterations": plot_scaling,
    "sweeps": plot_run_time,
    "blanket_intervals": plot_iterations,
    "mean_blanket_intervals": plot_timescale,
}


def main() -> None:
    parser = argparse.ArgumentParser(description="Plot a ctbn experiment table")
    parser.add_argument("table", type=Path)
    parser.add_argument("-o", "--output", type=Path, default=Path("plot.png"))
    args = parser.parse_args()

    frame = pd.read_csv(args.table, comment="#")
    plotter = next((plot for column, plot in PLOTTERS.items() if column in frame.columns), None)
    if plotter is None:
        raise SystemExit(f"Don't know how to plot columns {list(frame.columns)}")

    fig, ax = plt.subplots(figsize=(6, 4))
    plotter(frame, ax)
    ax.set_title(args.table.stem)
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)
    print(f"Saved {args.output}")


if __name__ == "__main__":
    main()
