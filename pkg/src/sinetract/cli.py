"""Command-line front end.

Subcommands: tract dump-boundary, eval, calibrate, hair, certify, render,
verify, export.  Exit codes: 0 success, 1 check failure, 2 usage error.
Report paths write matplotlib figures next to the delimited output when
--figure is given (render always writes its PPM; the PNG figure rides
along by default).
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import exports, figures
from .cauchy import CauchyEngine, QuadratureConfig
from .hairs import build_certificate, nondiff_report, trace_hair
from .logdyn import DisjointTypeModel, ExternalAddress, calibrate
from .render import RenderJob, default_window, render, write_ppm
from .tract import StripSpec, TractSpec, boundary_contour
from .verify import run_suite


def _load_config(ctx) -> QuadratureConfig:
    cfg = ctx.obj.get("config") or {}
    quad = cfg.get("quadrature", {})
    return QuadratureConfig(**quad) if quad else QuadratureConfig()


def _load_tract_spec(ctx) -> TractSpec:
    cfg = ctx.obj.get("config") or {}
    t = cfg.get("tract")
    if not t:
        return TractSpec()
    kwargs = {}
    if "linear_coeff" in t:
        kwargs["linear_coeff"] = t["linear_coeff"]
    if "wiggle_coeff" in t:
        kwargs["wiggle_coeff"] = t["wiggle_coeff"]
    if "domain_strip" in t:
        kwargs["domain_strip"] = StripSpec(*t["domain_strip"])
    if "target_strip" in t:
        kwargs["target_strip"] = StripSpec(*t["target_strip"])
    return TractSpec(**kwargs)


def _get_model(ctx) -> DisjointTypeModel:
    path = ctx.obj.get("model_path")
    if path:
        return exports.read_model(path)
    click.echo("no --model given: calibrating with defaults", err=True)
    return calibrate(spec=_load_tract_spec(ctx), seed=ctx.obj["seed"])


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="JSON config (quadrature/tract settings).")
@click.option("--model", "model_path", type=click.Path(exists=True),
              default=None, help="Calibrated model JSON.")
@click.option("--threads", type=int, default=1, show_default=True,
              help="Worker threads for row-parallel rendering.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed for sampled verification grids.")
@click.pass_context
def main(ctx, config_path, model_path, threads, seed):
    """Numerical lab for a tract-built entire function and its hairs."""
    ctx.ensure_object(dict)
    ctx.obj["config"] = (
        json.load(open(config_path)) if config_path else None
    )
    ctx.obj["model_path"] = model_path
    ctx.obj["threads"] = max(1, threads)
    ctx.obj["seed"] = seed


@main.group()
def tract():
    """Tract geometry commands."""


@tract.command("dump-boundary")
@click.option("--tmax", type=float, default=20.0, show_default=True)
@click.option("--step", type=float, default=0.05, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--figure", type=click.Path(), default=None,
              help="Also draw the boundary to this PNG.")
@click.pass_context
def dump_boundary(ctx, tmax, step, out, figure):
    """CSV rows (t, Re point, Im point, Re tangent, Im tangent)."""
    spec = _load_tract_spec(ctx)
    samples = boundary_contour(spec, t_max=tmax, max_step=step)
    exports.write_boundary_csv(samples, out)
    if figure:
        figures.boundary_figure(samples, figure)
    click.echo(f"wrote {len(samples)} boundary samples to {out}")


@main.command("eval")
@click.option("--re", "re_", type=float, required=True)
@click.option("--im", "im_", type=float, required=True)
@click.option("--log-space", is_flag=True,
              help="Report the logarithmic value even when finite.")
@click.option("--oracle", type=click.Choice(["ps"]), default=None,
              help="Evaluate the half-strip oracle instead.")
@click.pass_context
def eval_cmd(ctx, re_, im_, log_space, oracle):
    """Evaluate the glued entire function at one point (JSON to stdout)."""
    config = _load_config(ctx)
    if oracle == "ps":
        engine = CauchyEngine.polya_szego(config)
    else:
        engine = CauchyEngine.for_tract(_load_tract_spec(ctx), config)
    fv = engine.f(complex(re_, im_))
    finite = math.isfinite(abs(fv.value))
    payload = {
        "value": [fv.value.real, fv.value.imag] if finite else "overflow",
        "log_value": (
            [fv.log_value.real, fv.log_value.imag]
            if fv.log_value is not None and (log_space or not finite)
            else None
        ),
        "abs_error": fv.abs_error,
    }
    click.echo(exports.dumps_canonical(payload), nl=False)


@main.command("calibrate")
@click.option("--k-target", type=float, default=2.0, show_default=True)
@click.option("--r-log", type=float, default=50.0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@click.pass_context
def calibrate_cmd(ctx, k_target, r_log, out):
    """Find and verify the disjoint-type scaling; persist the model."""
    model = calibrate(spec=_load_tract_spec(ctx), r_log=r_log,
                      k_target=k_target, seed=ctx.obj["seed"])
    exports.write_model(model, out)
    click.echo(
        f"lambda = 2^(-2^{model.lambda_log2_exponent}), "
        f"log|F'| >= {model.k_expansion_log:.2f}, model in {out}"
    )


@main.command("hair")
@click.option("--address", required=True, help='e.g. "0,0,(1)"')
@click.option("--depth", type=int, default=12, show_default=True)
@click.option("--params", default="0:50:26",
              show_default=True, help="Base ray grid start:stop:count.")
@click.option("--out", type=click.Path(), required=True)
@click.option("--figure", type=click.Path(), default=None)
@click.pass_context
def hair_cmd(ctx, address, depth, params, out, figure):
    """Trace a hair by inverse-branch pullbacks; CSV (param,re,im,depth,err)."""
    model = _get_model(ctx)
    addr = ExternalAddress.parse(address, bound=model.symbol_bound)
    start, stop, count = params.split(":")
    grid = np.linspace(float(start), float(stop), int(count))
    hp = trace_hair(model, addr, depth=depth, base_params=grid)
    exports.write_hair_csv(hp, out)
    if figure:
        figures.hair_figure(hp, figure)
    click.echo(
        f"traced {len(hp.samples)} samples at depth {depth}; "
        f"endpoint {complex(hp.endpoint):.6g} "
        f"(err 1e{hp.endpoint_err_log10:.0f}); wrote {out}"
    )


@main.command("certify")
@click.option("--address", required=True)
@click.option("--param", type=float, default=0.0, show_default=True)
@click.option("--levels", type=int, default=6, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--figure", type=click.Path(), default=None)
@click.option("--loose-markers", is_flag=True,
              help="Drop the +-1/5 side conditions (control tracts).")
@click.pass_context
def certify_cmd(ctx, address, param, levels, out, figure, loose_markers):
    """Build a wiggle certificate and its report."""
    model = _get_model(ctx)
    addr = ExternalAddress.parse(address, bound=model.symbol_bound)
    cert = build_certificate(model, addr, w0_param=param, levels=levels,
                             strict_markers=not loose_markers)
    exports.write_certificate(cert, out)
    rep = nondiff_report(cert) if levels >= 3 else None
    if figure and rep:
        figures.certificate_figure(rep, figure)
    click.echo(
        f"certificate: {levels} levels, delta_obs = {cert.delta_obs:.4f}, "
        f"wrote {out}"
    )


@main.command("render")
@click.option("--out", type=click.Path(), required=True,
              help="PPM raster output path.")
@click.option("--window", default=None,
              help="re_min,re_max,im_min,im_max (default: tract window).")
@click.option("--resolution", default="400x400", show_default=True)
@click.option("--max-iter", type=int, default=4, show_default=True)
@click.option("--escape-radius", type=float, default=None)
@click.option("--overlay", multiple=True, help="Hair address to overlay.")
@click.option("--figure", type=click.Path(), default=None,
              help="PNG figure path (default: alongside the PPM).")
@click.option("--stats", "stats_path", type=click.Path(), default=None)
@click.pass_context
def render_cmd(ctx, out, window, resolution, max_iter, escape_radius,
               overlay, figure, stats_path):
    """Escape/attraction raster of the rescaled map with hair overlays."""
    model = _get_model(ctx)
    if window:
        parts = [float(v) for v in window.split(",")]
        if len(parts) != 4:
            raise click.UsageError("--window needs four numbers")
        win = tuple(parts)
    else:
        win = default_window(model)
    nx, _, ny = resolution.partition("x")
    job = RenderJob(*win, nx=int(nx), ny=int(ny or nx), max_iter=max_iter,
                    escape_radius=escape_radius,
                    overlay_addresses=tuple(overlay))
    traces = [
        trace_hair(model, ExternalAddress.parse(a, bound=model.symbol_bound),
                   depth=2, base_params=np.linspace(0, 40, 24))
        for a in overlay
    ]
    result = render(model, job, hair_traces=traces,
                    threads=ctx.obj["threads"])
    write_ppm(result.classes, out)
    fig_path = figure or str(Path(out).with_suffix(".png"))
    figures.render_figure(result, fig_path)
    if stats_path:
        exports.write_json(result.stats, stats_path)
    c = result.stats["counts"]
    click.echo(
        f"render {job.nx}x{job.ny}: escaped {c['escaped']}, "
        f"attracted {c['attracted']}, unknown {c['unknown']}; "
        f"wrote {out} and {fig_path}"
    )


@main.command("verify")
@click.option("--suite", default="all", show_default=True)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def verify_cmd(ctx, suite, out):
    """Run the registered invariant suite; exit 1 on any failure."""
    model = None
    if ctx.obj.get("model_path"):
        model = exports.read_model(ctx.obj["model_path"])
    report = run_suite(suite=suite, model=model, seed=ctx.obj["seed"])
    text = exports.dumps_canonical(report)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    for c in report["checks"]:
        mark = "PASS" if c["passed"] else "FAIL"
        click.echo(f"[{mark}] {c['id']}")
    click.echo(
        f"{report['n_checks'] - report['n_failed']}/{report['n_checks']} "
        f"checks passed"
    )
    if not report["passed"]:
        sys.exit(1)


@main.command("export")
@click.option("--kind", type=click.Choice(["model", "hair", "cert"]),
              required=True)
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
              required=True)
@click.option("--out", type=click.Path(), required=True)
def export_cmd(kind, in_path, fmt, out):
    """Re-serialize an artifact with bit-stable formatting."""
    if kind == "hair":
        if fmt == "csv":
            # hair CSV is already canonical: normalize line endings only
            text = open(in_path).read()
            with open(out, "w") as fh:
                fh.write(text)
        else:
            rows = list(__import__("csv").DictReader(open(in_path)))
            exports.write_json({"samples": rows}, out)
    else:
        data = exports.read_json(in_path)
        if kind == "model":
            # validate by a full round trip through the dataclass
            data = exports.model_to_dict(exports.model_from_dict(data))
        if fmt == "json":
            exports.write_json(data, out)
        else:
            with open(out, "w") as fh:
                fh.write(exports.generic_csv_text(data))
    click.echo(f"exported {kind} to {out}")


if __name__ == "__main__":
    main()
