"""Figure rendering for the report path.

Plots are drawn headless and saved next to the CSV files they mirror.
PNG metadata that varies between runs is stripped so identical inputs
produce identical bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import busy_series, locality_report, wait_time_stats
from .scheduler import SimulationResult

_SAVE_KW = {"dpi": 110, "metadata": {"Software": None}}


def _save(fig, path) -> None:
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_utilization(result: SimulationResult, path) -> None:
    """Step plot of busy nodes over time, as a fraction of capacity."""
    series = busy_series(result)
    fig, ax = plt.subplots(figsize=(8, 3.2))
    if series:
        times = [t / 3600.0 for t, _ in series]
        frac = [busy / result.total_nodes for _, busy in series]
        ax.step(times, frac, where="post")
    ax.set_xlabel("hours")
    ax.set_ylabel("utilization")
    ax.set_ylim(0, 1.05)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def plot_waits(result: SimulationResult, path, partitions=None) -> None:
    """Wait-time distribution, one histogram overlay per partition plus
    the whole-machine view."""
    fig, ax = plt.subplots(figsize=(8, 3.2))
    scopes = [None] + sorted(partitions or [])
    for scope in scopes:
        waits = [
            rec.wait_time / 3600.0
            for rec in result.records.values()
            if rec.start_time is not None
            and (scope is None or rec.job.partition == scope)
        ]
        if waits:
            label = scope if scope is not None else "all"
            stats = wait_time_stats(result, scope)
            ax.hist(waits, bins=30, alpha=0.5,
                    label=f"{label} (median {stats.median / 3600.0:.2f}h)")
    ax.set_xlabel("wait (hours)")
    ax.set_ylabel("jobs")
    if ax.has_data():
        ax.legend()
    fig.tight_layout()
    _save(fig, path)


def plot_locality(result: SimulationResult, path) -> None:
    """How many jobs landed inside one wing versus spanning several."""
    rows = locality_report(result)
    counts: dict[int, int] = {}
    for row in rows:
        counts[row.wing_span] = counts.get(row.wing_span, 0) + 1
    fig, ax = plt.subplots(figsize=(5, 3.2))
    spans = sorted(counts)
    ax.bar([str(s) for s in spans], [counts[s] for s in spans])
    ax.set_xlabel("wing span")
    ax.set_ylabel("jobs")
    fig.tight_layout()
    _save(fig, path)
