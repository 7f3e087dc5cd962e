"""Command line for the pipeline: one subcommand per stage plus utilities."""

from __future__ import annotations

import csv
import json
import os
import sys
from pathlib import Path

import click

from . import pipeline as pl
from .rad import DEFAULT_BOOTSTRAP_OFFSET, DEFAULT_P_REF, empirical_threshold, max_pmf
from .synth import preset_profiles


def _default_out() -> str:
    root = os.environ.get("HAPKIT_OUT_ROOT")
    return str(Path(root) / "run") if root else "run"


def _build_config(ctx: click.Context, manifest: str | None = None) -> pl.RunConfig:
    opts = ctx.obj
    overrides = {
        "out": opts["out"],
        "base_seed": opts["seed"],
        "worker_count": opts["workers"],
        "manifest": manifest,
    }
    if opts["config"]:
        return pl.load_config(opts["config"], **overrides)
    if manifest is None:
        # stages after preprocess read the manifest path from the run config
        run_json = Path(opts["out"] or _default_out()) / "run.json"
        if run_json.exists():
            return pl.load_config(run_json, **overrides)
        raise click.UsageError("need --config, a prior run.json, or a manifest")
    clean = {k: v for k, v in overrides.items() if v is not None}
    clean.setdefault("out", _default_out())
    return pl.RunConfig(manifest=manifest, **{k: v for k, v in clean.items() if k != "manifest"})


def _run_stage(cfg: pl.RunConfig, name: str, fn) -> None:
    pl.write_config(cfg)
    try:
        fn(cfg)
    except Exception as err:  # noqa: BLE001 - error log + exit code contract
        pl.record_error(cfg, name, err)
        click.echo(f"{name}: {type(err).__name__}: {err}", err=True)
        sys.exit(pl.STAGE_EXIT_CODES[name])
    click.echo(f"{name}: ok")


@click.group()
@click.option("--config", type=click.Path(exists=True), default=None, help="Run-config JSON.")
@click.option("--seed", type=int, default=None, help="Base seed override.")
@click.option("--workers", type=int, default=None, help="Worker count override.")
@click.option("--out", type=click.Path(), default=None, help="Run directory.")
@click.pass_context
def main(ctx, config, seed, workers, out):
    """Learnability-based same-practice analysis of surface height maps."""
    ctx.obj = {"config": config, "seed": seed, "workers": workers, "out": out}


@main.command()
@click.option("--study-dir", type=click.Path(), required=True, help="Where to write the study.")
@click.option("--paintings", type=int, default=2, show_default=True)
@click.option("--width-cm", type=float, default=12.0, show_default=True)
@click.option("--height-cm", type=float, default=15.0, show_default=True)
@click.option("--resolution-um", type=float, default=200.0, show_default=True)
@click.pass_context
def synth(ctx, study_dir, paintings, width_cm, height_cm, resolution_um):
    """Generate a synthetic study from the nine preset profiles."""
    seed = ctx.obj["seed"] or 0
    manifest = pl.generate_study(
        study_dir,
        profiles=preset_profiles(),
        paintings_per_profile=paintings,
        width_cm=width_cm,
        height_cm=height_cm,
        resolution_um=resolution_um,
        seed=seed,
    )
    click.echo(f"synth: wrote {manifest}")


@main.command()
@click.argument("manifest", type=click.Path(exists=True))
@click.option("--export-patches", is_flag=True, help="Write 16-bit PNG patch exports.")
@click.pass_context
def preprocess(ctx, manifest, export_patches):
    """Load, detrend and patchify the manifest's regions."""
    cfg = _build_config(ctx, manifest)
    if export_patches:
        cfg = pl.replace(cfg, export_patches=True)
    _run_stage(cfg, "preprocess", pl.stage_preprocess)


@main.command()
@click.pass_context
def compare(ctx):
    """Run fold training for every missing region pair."""
    cfg = _build_config(ctx)
    _run_stage(cfg, "compare", pl.stage_compare)


@main.command()
@click.pass_context
def decide(ctx):
    """Apply the two-criterion rule; write the verdict table."""
    cfg = _build_config(ctx)
    _run_stage(cfg, "decide", pl.stage_decide)


@main.command()
@click.pass_context
def graph(ctx):
    """Build and prune the same-practice graph; export GraphML/DOT."""
    cfg = _build_config(ctx)
    _run_stage(cfg, "graph", pl.stage_graph)


@main.command()
@click.pass_context
def communities(ctx):
    """Maximum-modularity partition of the pruned graph."""
    cfg = _build_config(ctx)
    _run_stage(cfg, "communities", pl.stage_communities)


@main.command()
@click.pass_context
def degrees(ctx):
    """Per-community internal/external degree metrics."""
    cfg = _build_config(ctx)
    _run_stage(cfg, "degrees", pl.stage_degrees)


@main.command()
@click.pass_context
def baseline(ctx):
    """Surface-roughness baseline verdicts."""
    cfg = _build_config(ctx)
    _run_stage(cfg, "baseline", pl.stage_baseline)


@main.command()
@click.pass_context
def metrics(ctx):
    """Score verdicts against manifest ground-truth labels."""
    cfg = _build_config(ctx)
    _run_stage(cfg, "metrics", pl.stage_metrics)


@main.command()
@click.pass_context
def report(ctx):
    """Summary plots (SVG) and run summary."""
    cfg = _build_config(ctx)
    _run_stage(cfg, "report", pl.stage_report)


@main.group()
def rad():
    """Chance-model utilities."""


@rad.command("pmf")
@click.option("-n", "n_test", type=int, required=True)
@click.option("-k", "k_epochs", type=int, required=True)
@click.option("--csv", "csv_path", type=click.Path(), default=None, help="Write CSV here.")
def rad_pmf(n_test, k_epochs, csv_path):
    """Dump the max-of-k pmf as CSV (m, pmf, cumulative)."""
    model = max_pmf(n_test, k_epochs)
    rows = []
    cum = 0.0
    for m, p in enumerate(model.pmf_max):
        cum += float(p)
        rows.append((m, float(p), cum))
    target = Path(csv_path) if csv_path else None
    if target:
        with target.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["m", "pmf", "cumulative"])
            writer.writerows((m, repr(p), repr(c)) for m, p, c in rows)
        click.echo(f"rad pmf: wrote {target}")
    else:
        click.echo("m,pmf,cumulative")
        for m, p, c in rows:
            click.echo(f"{m},{p!r},{c!r}")


@rad.command("threshold")
@click.option("-n", "n_test", type=int, required=True)
@click.option("-k", "k_epochs", type=int, required=True)
@click.option("--p-ref", type=float, default=DEFAULT_P_REF, show_default=True)
@click.option("--offset", type=float, default=DEFAULT_BOOTSTRAP_OFFSET, show_default=True)
def rad_threshold(n_test, k_epochs, p_ref, offset):
    """Finite-sampling threshold report as JSON."""
    spec = empirical_threshold(n_test, k_epochs, p_ref=p_ref, offset=offset)
    click.echo(
        json.dumps(
            {
                "n_test": n_test,
                "k_epochs": k_epochs,
                "p_ref": spec.p_ref,
                "m_star": spec.m_star,
                "accuracy_star": spec.accuracy_star,
                "bootstrap_offset": spec.bootstrap_offset,
                "threshold_accuracy": spec.threshold_accuracy,
            },
            indent=2,
        )
    )


if __name__ == "__main__":
    main()
