"""Figures written next to the JSON reports (Agg backend, no display needed)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .model import MICRO  # noqa: E402
from .sigma import SigmaTable  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.figsize": (5.0, 3.2),
    "savefig.dpi": 150,
}


def _save(fig, path: Union[str, Path]):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_sigma(table: SigmaTable, path: Union[str, Path]):
    """Best total per allocation size, with the chosen size marked."""
    ks = [k for k, s in enumerate(table.sigma, start=1) if s is not None]
    vals = [table.sigma[k - 1] / MICRO for k in ks]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(ks, vals, marker="o", ms=3, lw=1)
        if table.k_star is not None:
            ax.axvline(table.k_star, color="0.6", ls="--", lw=0.8)
            ax.annotate(f"k*={table.k_star}", (table.k_star, table.best / MICRO),
                        textcoords="offset points", xytext=(4, 4))
        ax.set_xlabel("allocation size k")
        ax.set_ylabel("best total bid")
        _save(fig, path)


def plot_bench(rows: Sequence[dict], path: Union[str, Path]):
    """Median build+table time against n, log-log, with an n log^2 n guide."""
    import math

    ns = [r["n"] for r in rows]
    ts = [r["sigma_seconds"] for r in rows]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.loglog(ns, ts, marker="o", ms=3, lw=1, label="sigma table")
        if any("mpp_seconds" in r for r in rows):
            ax.loglog(ns, [r.get("mpp_seconds", float("nan")) for r in rows], marker="s", ms=3,
                      lw=1, label="MPP prices")
        if ns and ts[0] > 0:
            ref = [ts[0] * (n * math.log2(n) ** 2) / (ns[0] * math.log2(ns[0]) ** 2) for n in ns]
            ax.loglog(ns, ref, color="0.6", ls=":", lw=1, label="n log² n")
        ax.set_xlabel("bidders n")
        ax.set_ylabel("seconds (median)")
        ax.legend(frameon=False)
        _save(fig, path)


def plot_equilibria(efficiencies: Sequence[int], revenues: Sequence[int], optimum: int,
                    path: Union[str, Path]):
    """Efficiency against revenue of each equilibrium, optimum as a reference line."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.scatter([e / MICRO for e in efficiencies], [r / MICRO for r in revenues], s=12)
        ax.axvline(optimum / MICRO, color="0.6", ls="--", lw=0.8, label="optimal efficiency")
        ax.set_xlabel("equilibrium efficiency")
        ax.set_ylabel("equilibrium revenue")
        ax.legend(frameon=False)
        _save(fig, path)
