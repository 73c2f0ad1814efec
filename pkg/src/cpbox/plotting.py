"""Figure rendering for sweep reports.

Figures are written as SVG next to the delimited output.  The matplotlib
SVG backend is pinned to a fixed hash salt and date-free metadata so repeat
runs produce identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["save_ratio_plot", "save_trajectory_plot"]

_SAVEFIG_KW = {"metadata": {"Date": None}}


def _configure() -> None:
    plt.rcParams["svg.hashsalt"] = "cpbox"
    plt.rcParams["figure.figsize"] = (6.0, 4.2)


def save_ratio_plot(path: str | Path, x: np.ndarray, ratio: np.ndarray,
                    ratio_exact: np.ndarray | None = None) -> Path:
    """Log-log stability ratio vs sqrt(nbar) r with the sqrt(2/pi) x asymptote."""
    _configure()
    path = Path(path)
    x = np.asarray(x, dtype=float)
    fig, ax = plt.subplots()
    ax.loglog(x, ratio, "o-", color="#0072B2", label="closed-form ratio 1/f")
    if ratio_exact is not None and np.any(np.isfinite(ratio_exact)):
        ax.loglog(x, ratio_exact, "s", color="#D55E00", label="exact-sum ratio")
    xs = np.linspace(x.min(), x.max(), 64)
    ax.loglog(xs, np.sqrt(2.0 / np.pi) * xs, "--", color="#009E73",
              label=r"$\sqrt{2/\pi}\,\sqrt{\bar n}\,r$")
    ax.set_xlabel(r"$\sqrt{\bar n}\, r$")
    ax.set_ylabel(r"$\Gamma_{\rm Fock} / \Gamma_{\rm coherent}$")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)
    return path


def save_trajectory_plot(path: str | Path, t: np.ndarray, series: dict[str, np.ndarray],
                         xlabel: str = "t [s]", logy: bool = False) -> Path:
    """Named scalar series against time on a shared axis."""
    _configure()
    path = Path(path)
    fig, ax = plt.subplots()
    for label, values in series.items():
        ax.plot(t, values, label=label)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)
    return path
