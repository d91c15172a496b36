"""Figure rendering for the CLI report path (file output only, Agg)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_fringe(points, path, fit=None, expectation=None):
    """Counts vs scanned analyzer angle, optional fit or model overlay."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    angles = np.array([a for a, _ in points])
    counts = np.array([c for _, c in points])
    ax.errorbar(
        angles,
        counts,
        yerr=np.sqrt(np.maximum(counts, 1.0)),
        fmt="o",
        ms=3.5,
        lw=1.0,
        capsize=2,
        label="counts",
    )
    grid = np.linspace(0.0, 180.0, 361)
    if fit is not None:
        curve = fit.amplitude * np.cos(np.deg2rad(grid - fit.phase_deg)) ** 2 + fit.offset
        ax.plot(grid, curve, "-", lw=1.2, label=f"fit, V={fit.visibility:.3f}")
    if expectation is not None:
        ea = np.array([a for a, _ in expectation])
        ev = np.array([v for _, v in expectation])
        ax.plot(ea, ev, "--", lw=1.0, label="model")
    ax.set_xlabel("scanned analyzer angle (deg)")
    ax.set_ylabel("coincidences")
    ax.set_xlim(0, 180)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_scan_f(report, path):
    """ch_max and R vs the state parameter f."""
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(6.0, 5.0))
    fs = np.array(report.f_values)
    ch = np.array([r.ch_max for r in report.results])
    rr = np.array(
        [r.r_at_max if r.r_at_max is not None else np.nan for r in report.results]
    )
    ax1.plot(fs, ch, "o-", lw=1.2)
    ax1.axhline(0.0, color="0.5", lw=0.8)
    ax1.set_ylabel("max CH per pair")
    ax2.plot(fs, rr, "s-", lw=1.2, color="tab:orange")
    ax2.axhline(1.0, color="0.5", lw=0.8)
    ax2.set_ylabel("R at maximum")
    ax2.set_xlabel("state parameter f")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_run(record, path):
    """The six coincidence counts of a run with Poisson error bars."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    labels = [
        "N(t1,t2)",
        "N(t1,t2')",
        "N(t1',t2)",
        "N(t1',t2')",
        "N(t1',inf)",
        "N(inf,t2)",
    ]
    counts = record.counts.as_array()
    ax.bar(range(6), counts, yerr=record.counts.sigmas, capsize=3, color="tab:blue")
    ax.set_xticks(range(6), labels, rotation=30, ha="right")
    ax.set_ylabel("counts")
    rep = record.report
    title = f"CH = {rep.ch:.1f} +- {rep.sigma_ch:.1f},  R = {rep.r:.4f}"
    if rep.sigma_r is not None:
        title += f" +- {rep.sigma_r:.4f}"
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
