"""Figures written next to the CSV/JSON reports.

Uses the object-oriented matplotlib API on an Agg canvas (no pyplot state),
and strips PNG metadata so identical inputs give byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib as mpl
import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "svg.hashsalt": "leakwise",
}

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def _figure(width=5.0, height=None):
    fig = Figure(figsize=(width, height or width * GOLDEN), dpi=100)
    FigureCanvasAgg(fig)
    return fig


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, format="png", metadata={"Software": None})
    return path


def plot_mask_spectrum(signal, noise, path, title="Optimal mask spectrum"):
    """Data spectrum and designed noise spectrum over ``[0, pi]``."""
    with mpl.rc_context(STYLE):
        fig = _figure()
        ax = fig.add_subplot(111)
        w = signal.frequencies
        half = w <= np.pi
        ax.semilogy(w[half], signal.values[half], label="data $S_x$")
        ax.semilogy(w[half], np.maximum(noise.values[half], 1e-300), label="mask $N$", ls="--")
        ax.set_xlim(0, np.pi)
        ax.set_xlabel(r"frequency $\omega$ (rad)")
        ax.set_ylabel("power")
        ax.set_title(title)
        ax.legend()
        return _save(fig, path)


def plot_allocation(allocation, path, title=None):
    """Weights and allocated powers per component (sorted by weight for spectra)."""
    with mpl.rc_context(STYLE):
        fig = _figure()
        ax = fig.add_subplot(111)
        lam = np.asarray(allocation.weights)
        p = np.asarray(allocation.powers)
        if lam.size > 64:
            order = np.argsort(lam, kind="stable")
            ax.plot(lam[order], p[order], marker=".", ms=2, lw=0.8)
            ax.set_xlabel("component weight")
            ax.set_ylabel("allocated power")
        else:
            idx = np.arange(lam.size)
            ax.bar(idx - 0.2, lam, width=0.4, label="weight")
            ax.bar(idx + 0.2, p, width=0.4, label="power")
            ax.set_xlabel("component")
            ax.legend()
        ax.set_title(title or f"{allocation.policy} allocation")
        return _save(fig, path)


def plot_convergence(limit, rows, path):
    with mpl.rc_context(STYLE):
        fig = _figure()
        ax = fig.add_subplot(111)
        k = np.array([r.horizon for r in rows], dtype=float)
        err = np.array([r.abs_error for r in rows])
        ax.loglog(k + 1, np.maximum(err, 1e-300), marker="o")
        ax.set_xlabel("block length K+1")
        ax.set_ylabel("|per-sample leakage - limit| (bits)")
        ax.set_title(f"finite-block leakage, limit {limit:.6f} bits")
        return _save(fig, path)


def plot_covariance(matrix, path, title="Mask covariance"):
    with mpl.rc_context(STYLE):
        fig = _figure(4.5, 4.0)
        ax = fig.add_subplot(111)
        im = ax.imshow(np.asarray(matrix), cmap="RdBu_r", interpolation="nearest")
        fig.colorbar(im, ax=ax)
        ax.set_title(title)
        ax.grid(False)
        return _save(fig, path)


def plot_tradeoff(budgets, leakages, path, xlabel="distortion budget D"):
    """Leakage against budget, e.g. the privacy-distortion curve."""
    with mpl.rc_context(STYLE):
        fig = _figure()
        ax = fig.add_subplot(111)
        ax.plot(budgets, leakages, marker=".")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("minimum leakage (bits/sample)")
        ax.set_title("privacy-distortion tradeoff")
        return _save(fig, path)
