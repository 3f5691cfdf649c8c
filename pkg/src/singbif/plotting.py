"""Raster figures for reports (matplotlib, Agg backend).

The SVG written by :mod:`singbif.io` is the reproducible artifact; these
PNGs are conveniences and make no byte-level promises.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import branch_label  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "lines.linewidth": 1.2,
    "figure.dpi": 150,
    "svg.hashsalt": "singbif",
}


def diagram_figure(branches, eigen, path, *, log_y: bool = False) -> Path:
    """lambda against sup |w| with the bifurcation and asymptotic guides."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        for b in branches:
            if not b.points:
                continue
            lam = [p.lam for p in b.points]
            amp = [max(abs(p.sup_w), abs(p.inf_w)) for p in b.points]
            ax.plot(lam, amp, label=branch_label(b))
        for k in sorted({b.k for b in branches}):
            ax.axvline(eigen.origin_lambda(k), color="0.35", ls="--", lw=0.8)
            ax.axvline(eigen.asymptote_lambda(k), color="0.7", ls=":", lw=0.8)
        ax.set_xlabel(r"$\lambda$")
        ax.set_ylabel(r"$\sup|w|$")
        if log_y:
            ax.set_yscale("log")
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def profile_figure(traj, path) -> Path:
    """w(rho) with nodes, critical points and the barrier level."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.4, 3.6))
        ax.plot(traj.grid, traj.w, color="k")
        ax.axhline(0.0, color="0.6", lw=0.6)
        ax.axhline(-1.0 / traj.sqrt_lam, color="tab:red", ls="--", lw=0.8, label="barrier")
        if traj.nodes:
            ax.plot(traj.nodes, np.zeros(len(traj.nodes)), "o", ms=4, color="tab:blue", label="nodes")
        ax.set_xlabel(r"$\rho$")
        ax.set_ylabel(r"$w$")
        ax.set_title(rf"$\lambda={traj.lam:.6g}$, $h={traj.h:.6g}$")
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def sweep_figure(report: dict, path) -> Path:
    """|lambda_rho - lambda_hat| against rho for each critical pair."""
    lam_hat = report["model"]["lam_hat"]
    rows = report["sweep"]
    rhos = [r["rho"] for r in rows]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.8, 3.6))
        for i in range(2):
            dev = [abs(r["pairs"][i]["lambda"] - lam_hat) for r in rows]
            ax.loglog(rhos, dev, "o-", label=rows[0]["pairs"][i]["kind"])
        ax.set_xlabel(r"$\rho$")
        ax.set_ylabel(r"$|\lambda_\rho-\hat\lambda|$")
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)
