"""Figure rendering for report outputs.

Every file-producing command can render a matplotlib figure next to its
delimited output.  Rendering is headless (Agg) and purely cosmetic: the
CSV/JSON files remain the authoritative data.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_CV_COLORS = plt.rcParams["axes.prop_cycle"].by_key()["color"]


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_capacity_curves(rows, path, x_key):
    """Static vs ergodic capacity/hashing curves over gamma_bar or p_bar.

    Hashing-bound values are floored at zero for display, matching the
    usual presentation of achievable rates.
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    static = [(r[x_key], r["value"]) for r in rows if r["mode"] == "static"]
    if static:
        xs, ys = zip(*sorted(static))
        ax.plot(xs, np.maximum(ys, 0.0), "k-", lw=2, label="static")
    cvs = sorted({r["cv"] for r in rows if r["mode"] == "ergodic"})
    for k, cv in enumerate(cvs):
        pts = sorted((r[x_key], r["value"]) for r in rows
                     if r["mode"] == "ergodic" and r["cv"] == cv)
        xs, ys = zip(*pts)
        ax.plot(xs, np.maximum(ys, 0.0), "--",
                color=_CV_COLORS[k % len(_CV_COLORS)],
                label=f"ergodic, cv={100 * cv:g}%")
    ax.set_xlabel("mean damping probability" if x_key == "gamma_bar"
                  else "mean depolarizing probability")
    ax.set_ylabel("rate (logical/physical qubits)")
    ax.set_ylim(bottom=0)
    ax.legend()
    ax.grid(alpha=0.3)
    _save(fig, path)


def plot_sweep(result, path, threshold=None):
    """WER against mean depolarizing probability per (distance, mode)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    styles = {"static": "-", "stvqc": ":", "ftvqc": "--"}
    for k, d in enumerate(result.distances):
        color = _CV_COLORS[k % len(_CV_COLORS)]
        for mode in result.modes:
            rows = sorted(result.filter(mode=mode, d=d).rows,
                          key=lambda r: r.p_bar)
            if not rows:
                continue
            ps = [r.p_bar for r in rows]
            ws = [r.estimate.wer_hat for r in rows]
            los = [r.estimate.ci_low for r in rows]
            his = [r.estimate.ci_high for r in rows]
            ax.plot(ps, ws, styles.get(mode, "-"), color=color,
                    marker="o", ms=3, label=f"d={d} {mode}")
            ax.fill_between(ps, los, his, color=color, alpha=0.15)
    if threshold is not None:
        ax.axvline(threshold, color="gray", lw=1, ls="-.",
                   label=f"threshold {threshold:.4f}")
    ax.set_yscale("log")
    ax.set_xlabel("mean depolarizing probability")
    ax.set_ylabel("WER")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, which="both")
    _save(fig, path)


def plot_decay_fit(curve, t1_hat, path):
    """Measured survival probabilities with the fitted exponential."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(curve.delays, curve.survival, "o", ms=4, label="measured")
    tt = np.linspace(curve.delays[0], curve.delays[-1], 200)
    scale = curve.survival[0] / np.exp(-curve.delays[0] / t1_hat)
    ax.plot(tt, scale * np.exp(-tt / t1_hat), "-",
            label=f"fit T1={t1_hat:.2f} us")
    ax.set_xlabel("delay (us)")
    ax.set_ylabel("excited-state probability")
    ax.legend()
    ax.grid(alpha=0.3)
    _save(fig, path)


def plot_correlation_report(report, path):
    """Pairwise correlation coefficients with bootstrap error bars."""
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    labels = [f"{p.qubit_i}-{p.qubit_j}" for p in report.pairs]
    rs = [p.r for p in report.pairs]
    lo = [p.r - p.ci_low for p in report.pairs]
    hi = [p.ci_high - p.r for p in report.pairs]
    xs = np.arange(len(labels))
    ax.errorbar(xs, rs, yerr=[lo, hi], fmt="o", capsize=3)
    ax.axhline(0.6, color="r", lw=1, ls="--", label="significance 0.6")
    ax.axhline(-0.6, color="r", lw=1, ls="--")
    ax.axhline(0.0, color="gray", lw=0.5)
    ax.set_xticks(xs)
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("Pearson r")
    ax.set_ylim(-1.05, 1.05)
    ax.legend()
    ax.grid(alpha=0.3)
    _save(fig, path)
