"""Figure rendering for the command-line reports.

Uses the Agg backend so runs stay headless; every function writes a PNG
next to the delimited output and returns the path it wrote.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .spectral import eval_mode

__all__ = [
    "save_mode_shapes",
    "save_error_components",
    "save_norm_decay",
    "save_density",
]

_DPI = 150


def save_mode_shapes(modes, path, samples=400):
    params = modes[0].params
    xs = np.linspace(0.0, params.length, samples)
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    for mode in modes:
        ax.plot(xs, eval_mode(mode, xs), lw=1.2, label="mode %d" % mode.index)
    ax.axvline(params.attach, color="0.6", ls="--", lw=0.8)
    ax.set_xlabel("x")
    ax.set_ylabel("W(x)")
    ax.set_title("normalized mode shapes (dashed line: attachment point)")
    if len(modes) <= 8:
        ax.legend(fontsize=8, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_error_components(traj, path, max_components=6):
    n = traj.n_modes
    take = min(n, max_components)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7.0, 5.5), sharex=True)
    for j in range(take):
        ax1.plot(traj.times, traj.states[:, j], lw=0.9, label="j=%d" % (j + 1))
        ax2.plot(traj.times, traj.states[:, n + j], lw=0.9)
    ax1.set_ylabel("position error")
    ax2.set_ylabel("momentum error")
    ax2.set_xlabel("t")
    ax1.legend(fontsize=8, ncol=3)
    ax1.set_title("leading error components")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_norm_decay(labeled_trajectories, path, title="error norm decay"):
    """Semilog decay curves; takes (label, trajectory) pairs."""
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    for label, traj in labeled_trajectories:
        # floor at the smallest positive double so exact zeros survive semilogy
        w = np.maximum(traj.lyapunov, 5e-324)
        ax.semilogy(traj.times, w, lw=1.1, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("W(t)")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_density(report, path):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.loglog(report.y, report.density, "o-", lw=1.0, ms=3.5)
    ax.set_xlabel("frequency")
    ax.set_ylabel("eigenvalues per unit window")
    ax.set_title("spectral density, fitted exponent %.3f" % report.fitted_exponent)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path
