"""Escape/attraction rasters for the rescaled map, with hair overlays.

With the calibrated scaling, one application of f0 already decides almost
every point: inside the tract channel the modulus exceeds any admissible
escape radius, outside it the value collapses onto the attracting fixed
point (microscopically close to 0).  The basin boundary is a sliver of
width exp(-Lambda) around the channel edge, far below pixel (and double)
resolution, so the per-pixel iteration terminates after the first step
and pixels whose classification margin falls under the resolution fuzz
are reported as unknown rather than forced into a class.

All thresholds are compared on the log(Re g) scale, which keeps the
arithmetic inside double range: |f0(z)| = exp(-Lambda + Re g(z)) itself
cannot be formed directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hairs import HairPolyline
from .logdyn import DisjointTypeModel
from .tract import eval_h

ATTRACTED, ESCAPED, UNKNOWN = 0, 1, 2

# palette: attracted = pale sand, escaped = deep blue, unknown = red
PALETTE = np.array(
    [[235, 228, 210], [24, 44, 96], [200, 40, 40]], dtype=np.uint8
)

MARGIN_FUZZ = 1e-9


@dataclass(frozen=True)
class RenderJob:
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    nx: int
    ny: int
    max_iter: int = 4
    escape_radius: float | None = None
    overlay_addresses: tuple[str, ...] = ()
    overlay_depth: int = 2

    def __post_init__(self):
        if self.nx <= 0 or self.ny <= 0:
            raise ValueError("resolution must be positive")
        if self.re_max <= self.re_min or self.im_max <= self.im_min:
            raise ValueError("empty window")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class RenderResult:
    job: RenderJob
    classes: np.ndarray  # (ny, nx) uint8
    stats: dict
    overlays: list = field(default_factory=list)


def default_window(model: DisjointTypeModel, half_width: float | None = None
                   ) -> tuple[float, float, float, float]:
    """Square window enclosing the visible part of the tract channel."""
    if half_width is None:
        half_width = 1.6 * math.exp(model.r_log + 0.7)
    return (-half_width, half_width, -half_width, half_width)


def resolve_escape_radius(model: DisjointTypeModel,
                          escape_radius: float | None) -> float:
    if escape_radius is None:
        return 2.0 * math.exp(model.r_log)
    if not escape_radius > math.exp(model.r_log):
        raise ValueError("escape_radius must exceed e^{r_log}")
    return escape_radius


def classify_grid(model: DisjointTypeModel, zs: np.ndarray,
                  escape_radius: float) -> np.ndarray:
    """Vectorized one-step classification on the log(Re g) scale.

    escaped:   log Re g > log(Lambda + log escape_radius)
    attracted: log Re g < log(Lambda - ...), or outside the sector/tract
    unknown:   margin within the resolution fuzz
    """
    spec = model.spec
    out = np.full(zs.shape, ATTRACTED, dtype=np.uint8)
    r = np.abs(zs)
    valid = (r > math.exp(spec.domain_strip.alpha)) & (
        np.abs(np.angle(zs)) < spec.domain_strip.beta
    )
    if not valid.any():
        return out
    zlog = np.where(valid, np.log(np.where(valid, zs, 1.0)), 0.0)
    hv = eval_h(spec, zlog)
    reh, imh = hv.real, hv.imag
    in_w = valid & (np.abs(imh) < spec.target_strip.beta) & (
        reh > spec.target_strip.alpha)
    pos = in_w & (np.cos(imh) > 0)
    log_re_g = np.where(pos, reh + np.log(np.abs(np.cos(imh)) + 1e-300),
                        -np.inf)
    # log(Lambda + log esc) == log Lambda at double resolution: the
    # escape_radius moves the threshold by log(esc)/Lambda ~ 1e-790
    threshold = model.log_minus_log_lambda()
    margin = log_re_g - threshold
    out[margin > MARGIN_FUZZ] = ESCAPED
    out[np.abs(margin) <= MARGIN_FUZZ] = UNKNOWN
    return out


def render(model: DisjointTypeModel, job: RenderJob,
           hair_traces: list[HairPolyline] | None = None,
           threads: int = 1) -> RenderResult:
    """Classify the window per pixel and attach exp-image hair overlays.

    Pixel rows are independent: with threads > 1 the grid is split into
    row bands classified concurrently and reassembled by index, so the
    output does not depend on scheduling.
    """
    esc = resolve_escape_radius(model, job.escape_radius)
    xs = np.linspace(job.re_min, job.re_max, job.nx)
    ys = np.linspace(job.im_min, job.im_max, job.ny)
    zs = xs[np.newaxis, :] + 1j * ys[:, np.newaxis]
    if threads > 1 and job.ny >= 2 * threads:
        from concurrent.futures import ThreadPoolExecutor

        bands = np.array_split(np.arange(job.ny), threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(
                lambda idx: classify_grid(model, zs[idx, :], esc), bands))
        classes = np.vstack(parts)
    else:
        classes = classify_grid(model, zs, esc)
    counts = {
        "attracted": int(np.sum(classes == ATTRACTED)),
        "escaped": int(np.sum(classes == ESCAPED)),
        "unknown": int(np.sum(classes == UNKNOWN)),
    }
    overlays = []
    for hp in hair_traces or []:
        pts = np.array([complex(np.exp(complex(s.point))) for s in hp.samples])
        overlays.append((str(hp.address), pts))
    stats = {
        "window": [job.re_min, job.re_max, job.im_min, job.im_max],
        "resolution": [job.nx, job.ny],
        "max_iter": job.max_iter,
        "iterations_used": 1,
        "escape_radius": esc,
        "counts": counts,
        "note": (
            "basin boundary width ~ exp(-Lambda) is far below pixel "
            "resolution: the first iterate decides every pixel outside "
            "the unknown fuzz band"
        ),
    }
    return RenderResult(job, classes, stats, overlays)


def overlay_pixel_mask(result: RenderResult) -> np.ndarray:
    """Classification values at the overlay points (consistency checks)."""
    job = result.job
    vals = []
    for _, pts in result.overlays:
        ix = np.clip(
            ((pts.real - job.re_min) / (job.re_max - job.re_min)
             * (job.nx - 1)).round().astype(int), 0, job.nx - 1)
        iy = np.clip(
            ((pts.imag - job.im_min) / (job.im_max - job.im_min)
             * (job.ny - 1)).round().astype(int), 0, job.ny - 1)
        vals.append(result.classes[iy, ix])
    return np.concatenate(vals) if vals else np.array([], dtype=np.uint8)


def write_ppm(classes: np.ndarray, path) -> None:
    """Binary P6 pixmap; byte-identical for identical classifications."""
    rgb = PALETTE[classes]
    ny, nx = classes.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{nx} {ny}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())
