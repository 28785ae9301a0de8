"""matplotlib renderings of the CSV tables, written next to them."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

COLORS = {"golden": "k", "tep": "tab:red", "ted": "tab:orange", "tedrop": "tab:blue"}


def _save(fig, out_dir, name):
    path = Path(out_dir) / name
    fig.tight_layout()
    # Fixed metadata keeps the PNG bytes reproducible.
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_sweep(out_dir, rows, golden_accuracy):
    """Accuracy versus energy savings, one curve per policy."""
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for policy in ("tep", "ted", "tedrop"):
        pts = sorted((s, acc) for pol, _, _, acc, _, s in rows if pol == policy)
        if pts:
            s, acc = zip(*pts)
            ax.plot(np.array(s) * 100, np.array(acc) * 100, "o-", color=COLORS[policy], label=policy, ms=4)
    ax.axhline(golden_accuracy * 100, color="k", ls=":", lw=1, label="golden")
    ax.set_xlabel("energy savings (%)")
    ax.set_ylabel("top-1 accuracy (%)")
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, out_dir, "sweep.png")


def plot_ted_curve(out_dir, curves, m):
    fig, ax1 = plt.subplots(figsize=(5, 3.6))
    first = next(iter(curves.values()))
    r = [row[0] for row in first]
    ax1.semilogy(r, [max(row[1], 1e-12) for row in first], "k-", label="per-MAC p")
    ax1.semilogy(r, [max(row[2], 1e-12) for row in first], "k--", label=f"global (m={m})")
    ax1.set_ylim(1e-8, 2)
    ax1.set_xlabel("voltage underscaling ratio r")
    ax1.set_ylabel("error probability")
    ax1.invert_xaxis()
    ax2 = ax1.twinx()
    for R, curve in curves.items():
        ax2.plot(r, [row[3] for row in curve], label=f"TED energy, R={R}")
    ax2.set_ylabel("energy per MAC (nominal = 1)")
    h1, l1 = ax1.get_legend_handles_labels()
    h2, l2 = ax2.get_legend_handles_labels()
    ax1.legend(h1 + h2, l1 + l2, frameon=False, fontsize=7, loc="upper left")
    return _save(fig, out_dir, "ted_curve.png")


def plot_profiles(out_dir, measured, truth, grid):
    fig, ax = plt.subplots(figsize=(5, 3.6))
    grid = sorted(grid)
    fine = np.linspace(min(grid), max(grid), 200)
    for j, (m, t) in enumerate(zip(measured, truth)):
        line = ax.semilogy(grid, [max(m(r), 1e-9) for r in grid], "o", ms=4, label=f"layer {j + 1}")
        ax.semilogy(fine, [max(t(r), 1e-9) for r in fine], "-", lw=0.8, color=line[0].get_color())
    ax.set_ylim(1e-7, 1)
    ax.set_xlabel("voltage underscaling ratio r")
    ax.set_ylabel("timing error probability per MAC")
    ax.invert_xaxis()
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, out_dir, "profiles.png")


def plot_budget(out_dir, rows, golden_accuracy):
    fig, ax = plt.subplots(figsize=(5, 3.6))
    s = np.array([row[4] for row in rows]) * 100
    acc = np.array([row[2] for row in rows]) * 100
    ax.plot(s, acc, "o-", color=COLORS["tedrop"], ms=4, label="dynamic")
    ax.axhline(golden_accuracy * 100, color="k", ls=":", lw=1, label="golden")
    ax.set_xlabel("energy savings (%)")
    ax.set_ylabel("top-1 accuracy (%)")
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, out_dir, "budget.png")


def plot_compare(out_dir, reps):
    labels = [label for label, _ in reps]
    per_layer = np.array([energies for _, energies in reps])
    base = per_layer[0].sum()
    fig, ax = plt.subplots(figsize=(5, 3.6))
    bottom = np.zeros(len(reps))
    for j in range(per_layer.shape[1]):
        ax.bar(labels, per_layer[:, j] / base, bottom=bottom, label=f"L{j + 1}")
        bottom += per_layer[:, j] / base
    ax.set_ylabel("energy (normalized to A)")
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, out_dir, "compare.png")


def plot_variation(out_dir, savings, nominal):
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.hist(np.array(savings) * 100, bins=15, color="0.6")
    ax.axvline(nominal * 100, color="k", ls="--", label="nominal chip")
    ax.axvline(np.mean(savings) * 100, color="tab:blue", label="mean over chips")
    ax.set_xlabel("energy savings (%)")
    ax.set_ylabel("chips")
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, out_dir, "variation.png")
