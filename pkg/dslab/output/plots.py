"""SVG line plots of growth curves and branch frequencies."""

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "dslab"

import matplotlib.pyplot as plt  # noqa: E402


def _line_plot(path: Path, x: Sequence[float], y: Sequence[float], xlabel: str, ylabel: str, title: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(x, y, marker="o", markersize=3)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_growth_curve(path: Path, kappas: Sequence[float], lams: Sequence[float], omega0: float) -> Path:
    return _line_plot(path, kappas, lams, "kappa", "lambda", f"transverse growth rate (omega0 = {omega0:.6f})")


def plot_branch_frequency(path: Path, s_values: Sequence[float], omegas: Sequence[float]) -> Path:
    return _line_plot(path, s_values, omegas, "s", "omega", "periodic soliton frequency")
