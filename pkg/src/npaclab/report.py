"""Figure and CSV report rendering for the CLI's --report-dir paths.

Each report writes delimited data next to the matplotlib figures so the
numbers behind every plot stay greppable.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .calibration import ConvergenceReport, LUTSet
from .colorimetry import ViewingCondition, lab_to_srgb_hex
from .gamut import AlternativesGrid, GamutModel


def _ensure_dir(out_dir) -> Path:
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def calibration_report(report: ConvergenceReport, luts: LUTSet, out_dir) -> list:
    """Residual curve + LUT shapes; returns the written paths."""
    out = _ensure_dir(out_dir)
    written = []

    csv_path = out / "residuals.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "mean_de2000", "max_de2000"])
        for i, (m, x) in enumerate(zip(report.residual_mean, report.residual_max), 1):
            w.writerow([i, f"{m:.6f}", f"{x:.6f}"])
    written.append(csv_path)

    fig, ax = plt.subplots(figsize=(5, 3.2))
    iters = np.arange(1, len(report.residual_mean) + 1)
    ax.plot(iters, report.residual_mean, "o-", label="mean")
    ax.plot(iters, report.residual_max, "s--", label="max")
    ax.axhline(report.threshold, color="gray", lw=0.8, label="threshold")
    ax.set_xlabel("iteration")
    ax.set_ylabel(r"chart $\Delta E_{2000}$ vs reference")
    ax.set_xticks(iters)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig_path = out / "convergence.png"
    fig.savefig(fig_path, dpi=150)
    plt.close(fig)
    written.append(fig_path)

    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    x = np.linspace(0, 1, 256)
    for lut in luts.luts:
        ax.plot(x, lut.entries, label=lut.name)
    ax.plot([0, 1], [0, 1], color="gray", lw=0.8, ls=":")
    ax.set_xlabel("nominal coverage")
    ax.set_ylabel("corrected coverage")
    ax.set_aspect("equal")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    lut_path = out / "luts.png"
    fig.savefig(lut_path, dpi=150)
    plt.close(fig)
    written.append(lut_path)
    return written


def gamut_report(gamut: GamutModel, out_dir) -> list:
    """Surface sample CSV plus a*b* and C*L* projections of the surface."""
    out = _ensure_dir(out_dir)
    written = []

    csv_path = out / "surface_samples.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["facet", "b0", "b1", "b2", "L", "a", "b"])
        for f, bary, lab in zip(gamut.sample_facet, gamut.sample_bary, gamut.sample_lab):
            w.writerow([int(f)] + [f"{v:.6f}" for v in bary] + [f"{v:.4f}" for v in lab])
    written.append(csv_path)

    labs = gamut.sample_lab
    chroma = np.hypot(labs[:, 1], labs[:, 2])
    fig, axes = plt.subplots(1, 2, figsize=(9, 4.2))
    axes[0].scatter(labs[:, 1], labs[:, 2], c=labs[:, 0], s=2, cmap="viridis")
    axes[0].set_xlabel("a*")
    axes[0].set_ylabel("b*")
    axes[0].set_title("surface, a*b* view")
    axes[0].set_aspect("equal")
    axes[1].scatter(chroma, labs[:, 0], c=labs[:, 0], s=2, cmap="viridis")
    axes[1].set_xlabel("C*")
    axes[1].set_ylabel("L*")
    axes[1].set_title("surface, C*L* view")
    fig.tight_layout()
    fig_path = out / "gamut_projection.png"
    fig.savefig(fig_path, dpi=150)
    plt.close(fig)
    written.append(fig_path)
    return written


def spot_report(grid: AlternativesGrid, vc: ViewingCondition, out_dir) -> list:
    """Alternatives swatch sheet plus the cell table."""
    out = _ensure_dir(out_dir)
    written = []

    csv_path = out / "alternatives.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["hue_offset", "lightness_offset", "L", "a", "b", "srgb_hex", "de_to_target"])
        for key in sorted(grid.cells):
            c = grid.cells[key]
            w.writerow([c.hue_offset, c.lightness_offset,
                        f"{c.lab.L:.4f}", f"{c.lab.a:.4f}", f"{c.lab.b:.4f}",
                        lab_to_srgb_hex(c.lab, vc), f"{c.de_to_target:.4f}"])
    written.append(csv_path)

    fig, ax = plt.subplots(figsize=(1.0 * (2 * grid.n_h + 1) + 1, 1.0 * (2 * grid.n_l + 1) + 1))
    for (i, j), cell in grid.cells.items():
        hx = lab_to_srgb_hex(cell.lab, vc)
        ax.add_patch(plt.Rectangle((i - 0.5, j - 0.5), 1, 1, color=hx))
        if (i, j) == (0, 0):
            ax.add_patch(plt.Rectangle((i - 0.5, j - 0.5), 1, 1, fill=False,
                                       edgecolor="white", lw=2))
    ax.set_xlim(-grid.n_h - 0.6, grid.n_h + 0.6)
    ax.set_ylim(-grid.n_l - 0.6, grid.n_l + 0.6)
    ax.set_xlabel(f"hue offset ({grid.step_h}\N{DEGREE SIGN}/cell)")
    ax.set_ylabel(f"lightness offset ({grid.step_l} L*/cell)")
    ax.set_xticks(range(-grid.n_h, grid.n_h + 1))
    ax.set_yticks(range(-grid.n_l, grid.n_l + 1))
    ax.set_title(f"alternatives around Lab({grid.target.L:.0f}, {grid.target.a:.0f}, {grid.target.b:.0f})")
    fig.tight_layout()
    fig_path = out / "alternatives.png"
    fig.savefig(fig_path, dpi=150)
    plt.close(fig)
    written.append(fig_path)
    return written
