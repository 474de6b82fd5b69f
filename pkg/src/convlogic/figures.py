"""Render sweep results as figures next to the CSV output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluate import SweepGrid


def _series(grid: SweepGrid, lep: str, split: str, attr: str):
    xs, ys = [], []
    for cell in grid.cells:
        if cell.lep != lep or cell.metrics is None:
            continue
        sm = cell.metrics.splits.get(split)
        if sm is None:
            continue
        xs.append(cell.depth)
        ys.append(getattr(sm, attr))
    return xs, ys


def render_sweep_figures(grid: SweepGrid, outdir) -> list[Path]:
    """Write accuracy/fidelity/size-vs-depth figures; returns the paths."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    paths: list[Path] = []

    for attr in ("accuracy", "fidelity"):
        fig, ax = plt.subplots(figsize=(6, 4))
        for lep in grid.leps:
            for split, style in (("train", "--"), ("val", "-")):
                xs, ys = _series(grid, lep, split, attr)
                if xs:
                    ax.plot(xs, ys, style, marker="o", label=f"{lep} {split}")
        ax.set_xlabel("tree depth")
        ax.set_ylabel(attr)
        ax.set_ylim(0, 1.05)
        ax.set_title(f"{attr} vs depth (alpha={grid.alpha:g})")
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = out / f"{attr}_vs_depth.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    for lep in grid.leps:
        xs, ys = [], []
        for cell in grid.cells:
            if cell.lep == lep and cell.metrics is not None:
                xs.append(cell.depth)
                ys.append(cell.metrics.stats.size)
        if xs:
            ax.plot(xs, ys, marker="o", label=lep)
    ax.set_xlabel("tree depth")
    ax.set_ylabel("program size (total antecedents)")
    ax.set_title(f"program size vs depth (alpha={grid.alpha:g})")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = out / "size_vs_depth.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)
    return paths
