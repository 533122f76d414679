"""Figure rendering for benchmark output.

Kept apart from the harness so the metrics path stays plot-free; the CLI's
bench subcommand calls into this module to drop PNG figures next to the CSV.
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .harness import MetricsRow, SpaceCurveFit  # noqa: E402

# Fixed metadata keeps PNG output byte-identical across runs.
_PNG_METADATA = {"Software": "decaystream"}


def render_space_curve(
    sizes: Sequence[float],
    stored: Sequence[float],
    fit: SpaceCurveFit,
    path: str | Path,
    xlabel: str = "size",
) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    x = np.log2(np.array(sizes, dtype=float))
    ax.scatter(x, stored, label="measured")
    grid = np.linspace(x.min(), x.max(), 50)
    ax.plot(grid, fit.slope * grid + fit.intercept, "--", label=f"fit slope {fit.slope:.2f}")
    ax.set_xlabel(f"log2({xlabel})")
    ax.set_ylabel("stored points")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_METADATA)
    plt.close(fig)


def render_cost_ratios(rows: Sequence[MetricsRow], path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    seeds = [r.seed for r in rows if r.ratio is not None]
    ratios = [r.ratio for r in rows if r.ratio is not None]
    if ratios:
        ax.bar(range(len(ratios)), ratios)
        ax.set_xticks(range(len(ratios)))
        ax.set_xticklabels([str(s) for s in seeds])
    ax.set_xlabel("seed")
    ax.set_ylabel("cost / exhaustive optimum")
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_METADATA)
    plt.close(fig)
