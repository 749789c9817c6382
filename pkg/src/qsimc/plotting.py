"""Figure rendering for benchmark results (matplotlib, Agg backend).

Each function writes one PNG and returns its path.  Figures carry no
timestamp metadata, so reruns with the same data give identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "font.size": 10,
    "savefig.bbox": "tight",
}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_trotter_scaling(results, out_dir: str | Path, name: str = "trotter_scaling.png") -> Path:
    """Log-log operator error against step count, one line per result.

    Args:
        results: iterable of :class:`qsimc.bench.ScalingResult`.
        out_dir: directory for the PNG.
        name: file name.
    """
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for r in results:
            ns = np.array([n for n, _ in r.rows], dtype=float)
            es = np.array([max(e, 1e-16) for _, e in r.rows])
            label = f"order {r.order}" + (f", slope {r.slope:.3f}" if r.slope is not None else "")
            ax.loglog(ns, es, "o-", label=label)
        ax.set_xlabel("Trotter steps n")
        ax.set_ylabel("operator error")
        ax.legend()
        return _save(fig, Path(out_dir) / name)


def plot_gauss_drift(result, out_dir: str | Path, name: str = "gauss_drift.png") -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ts = [t for t, _, _ in result.rows]
        for k, label in enumerate(result.labels):
            ax.plot(ts, [abs(devs[k]) for _, devs, _ in result.rows], "o-", label=label)
        ax.set_xlabel("t")
        ax.set_ylabel(r"$|\langle G_l(t)\rangle - \langle G_l(0)\rangle|$")
        ax.set_title(result.strategy)
        ax.legend()
        return _save(fig, Path(out_dir) / name)


def plot_strategy_fidelity(comparison, out_dir: str | Path, name: str = "strategy_fidelity.png") -> Path:
    """Fidelity against the exact oracle over time for each strategy that ran."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for r in comparison.reports:
            if r.error is None:
                ax.plot(r.times, r.fidelities, "o-", ms=3, label=r.strategy)
        ax.set_xlabel("t")
        ax.set_ylabel("fidelity")
        ax.set_ylim(top=1.005)
        ax.legend(fontsize=8)
        return _save(fig, Path(out_dir) / name)
