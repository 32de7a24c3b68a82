"""Matplotlib figure output for the report paths of the CLI.

Figures are rendered with the Agg backend straight to files, next to the
delimited data they accompany.  Trace figures rescale the pullback
offsets (the visible hair lives 10^{-300}-and-below around its germ), so
the axes carry the decimal exponent of the zoom explicitly.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import mpmath
import numpy as np

from .render import PALETTE, RenderResult

plt.rcParams.update({
    "figure.dpi": 110,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
})


def boundary_figure(samples, path) -> None:
    pts = np.array([s.point for s in samples])
    fig, ax = plt.subplots(figsize=(6, 5))
    ax.plot(pts.real, pts.imag, lw=1.0, color="#182c60")
    ax.set_aspect("equal")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.set_title("boundary of the growth region W")
    fig.savefig(path)
    plt.close(fig)


def hair_figure(polyline, path) -> None:
    """Shape of a traced hair at its pullback depth, rescaled offsets."""
    pts = [s.point for s in polyline.samples]
    p0 = pts[0]
    offs = [p - p0 for p in pts]
    spans = [abs(o) for o in offs if abs(o) > 0]
    if spans:
        scale_log10 = -int(mpmath.floor(mpmath.log10(max(spans))))
    else:
        scale_log10 = 0
    factor = mpmath.mpf(10) ** scale_log10
    xs = np.array([float(o.real * factor) for o in offs])
    ys = np.array([float(o.imag * factor) for o in offs])
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.plot(xs, ys, marker=".", ms=3, lw=0.8, color="#7a1f1f")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel(f"(Re - Re$_0$) x 1e{scale_log10}")
    ax.set_ylabel(f"(Im - Im$_0$) x 1e{scale_log10}")
    ax.set_title(
        f"hair {polyline.address} at depth {polyline.depth} "
        f"(germ at {complex(p0):.6g})"
    )
    fig.savefig(path)
    plt.close(fig)


def certificate_figure(report: dict, path) -> None:
    levels = [row["n"] for row in report["per_level"]]
    degs = [row["pulled_degeneracy"] for row in report["per_level"]]
    diams = [row["pulled_diameter_log10"] for row in report["per_level"]]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    ax1.plot(levels, degs, "o-", color="#7a1f1f")
    ax1.axhline(1.0, color="k", lw=0.8, ls="--")
    ax1.axhline(1.0 - report["delta_obs"], color="#1f7a3c", lw=0.8, ls=":")
    ax1.set_xlabel("level n")
    ax1.set_ylabel("pulled degeneracy")
    ax1.set_ylim(min(degs) - 0.02, 1.005)
    ax1.set_title(f"degeneracy (delta_obs = {report['delta_obs']:.4f})")
    ax2.plot(levels, diams, "s-", color="#182c60")
    ax2.set_xlabel("level n")
    ax2.set_ylabel("log10 pulled diameter")
    ax2.set_title(
        f"shrink {report['diameter_log10_per_level']:.1f} per level"
    )
    fig.suptitle(f"wiggle certificate, address {report['address']}")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_figure(result: RenderResult, path) -> None:
    job = result.job
    fig, ax = plt.subplots(figsize=(6.4, 5.6))
    rgb = PALETTE[result.classes]
    ax.imshow(
        rgb,
        origin="lower",
        extent=(job.re_min, job.re_max, job.im_min, job.im_max),
        interpolation="nearest",
    )
    for name, pts in result.overlays:
        ax.plot(pts.real, pts.imag, ".", ms=2.5, color="#f2b134",
                label=f"hair {name}")
    if result.overlays:
        ax.legend(loc="upper right", fontsize=7)
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    c = result.stats["counts"]
    ax.set_title(
        f"escape (dark) vs attraction (light): "
        f"{c['escaped']}/{c['attracted']}/{c['unknown']} px"
    )
    ax.grid(False)
    fig.savefig(path)
    plt.close(fig)
