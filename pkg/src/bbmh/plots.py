"""Figure rendering for the report paths.

Each CLI command that emits a delimited artifact can also render a
matplotlib figure next to it. Figures are written to files only (Agg
backend); nothing here opens a display.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_FIGSIZE = (7.0, 4.5)
_DPI = 150


def save_oracle_figure(path, rows: list[dict]) -> None:
    """Formula-vs-exact error against resemblance, one series per b."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    by_b: dict[int, list[tuple[float, float]]] = {}
    for row in rows:
        by_b.setdefault(int(row["b"]), []).append(
            (float(row["Pb_exact"]), abs(float(row["Pb_formula"]) - float(row["Pb_exact"])))
        )
    for b in sorted(by_b):
        pts = np.asarray(by_b[b])
        order = np.argsort(pts[:, 0])
        ax.plot(pts[order, 0], pts[order, 1], ".", markersize=2, label=f"b={b}")
    ax.set_xlabel("exact collision probability")
    ax.set_ylabel("|formula - exact|")
    ax.set_yscale("symlog", linthresh=1e-8)
    ax.legend()
    ax.set_title("closed form vs exact collision probability")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_comparison_figure(path, rows: list[dict]) -> None:
    """Storage-normalized ratio against a/f2, one series per f1."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    by_f1: dict[int, list[tuple[float, float]]] = {}
    for row in rows:
        frac = float(row["a"]) / float(row["f2"]) if float(row["f2"]) else 0.0
        by_f1.setdefault(int(row["f1"]), []).append((frac, float(row["g_vw"])))
    for f1 in sorted(by_f1):
        pts = np.asarray(by_f1[f1])
        order = np.argsort(pts[:, 0])
        ax.plot(pts[order, 0], pts[order, 1], ".", markersize=3, label=f"f1={f1}")
    ax.axhline(1.0, color="gray", linewidth=0.8, linestyle="--")
    ax.set_xlabel("a / f2")
    ax.set_ylabel("G (storage-normalized variance ratio)")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    ax.set_title("signed-sum vs b-bit signatures, variance per bit")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_experiment_figure(path, rows: list[dict]) -> None:
    """Accuracy against k, one series per b and panel per loss, with the
    original-feature accuracy as a horizontal reference. Each point is
    the best accuracy over the C grid for that cell."""
    losses = sorted({row["loss"] for row in rows})
    fig, axes = plt.subplots(1, len(losses), figsize=(4.5 * len(losses), 4.0), squeeze=False)
    for ax, loss in zip(axes[0], losses):
        hashed = [r for r in rows if r["loss"] == loss and r["features"] == "hashed" and r["status"] == "ok"]
        originals = [r for r in rows if r["loss"] == loss and r["features"] == "original" and r["status"] == "ok"]
        best: dict[tuple[int, int], float] = {}
        for r in hashed:
            key = (int(r["b"]), int(r["k"]))
            acc = float(r["acc_mean"])
            if key not in best or acc > best[key]:
                best[key] = acc
        for b in sorted({bk[0] for bk in best}):
            pts = sorted((k, acc) for (bb, k), acc in best.items() if bb == b)
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"b={b}")
        if originals:
            ax.axhline(max(float(r["acc_mean"]) for r in originals),
                       color="black", linewidth=0.8, linestyle="--")
        ax.set_xlabel("k (signature length)")
        ax.set_ylabel("test accuracy")
        ax.set_title(loss)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
