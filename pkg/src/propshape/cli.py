"""Command-line surface tying the pipeline, renderer, and stats together.

Live-endpoint credentials are read from the PROPSHAPE_API_TOKEN environment
variable and sent as a bearer token.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from .backends import BackendConfig
from .depthmap import (CameraPose, Perspective, decode_depth_png,
                       encode_depth_png, render_depth, write_depth_raw)
from .jobs import JobStore, run_job, submit_job
from .mesh import normalize_unit_sphere
from .meshio import load_mesh
from .metrics import evaluate_pair
from .prompts import PromptSpec, classify_prompt
from .registration import IcpParams
from .stats import (fleiss_kappa, load_ratings, majority_reconcile,
                    success_rates, wilcoxon_signed_rank)
from .study import emit_report, load_manifest, run_study

TOKEN_ENV = "PROPSHAPE_API_TOKEN"


@click.group()
def main():
    """Depth-conditioned prop generation and shape-evaluation toolkit."""


@main.command("render-depth")
@click.option("--mesh", "mesh_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--width", default=512, show_default=True)
@click.option("--height", default=512, show_default=True)
@click.option("--elevation", default=35.0, show_default=True)
@click.option("--azimuth", default=30.0, show_default=True)
def render_depth_cmd(mesh_path, out_path, width, height, elevation, azimuth):
    """Render a mesh's depth map from the standardized viewpoint.

    The mesh is unit-sphere normalized first. Writes PNG, or the raw float
    dump when --out ends in .raw.
    """
    mesh = normalize_unit_sphere(load_mesh(mesh_path)).mesh
    camera = CameraPose(elevation_deg=elevation, azimuth_deg=azimuth,
                        distance=3.0, projection=Perspective())
    image = render_depth(mesh, camera, width, height)
    out = Path(out_path)
    if out.suffix.lower() == ".raw":
        out.write_bytes(write_depth_raw(image))
    else:
        out.write_bytes(encode_depth_png(image))
    click.echo(f"wrote {out} ({width}x{height})")


@main.command("eval-pair")
@click.option("--original", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--generated", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--samples", default=10_000, show_default=True)
@click.option("--restarts", default=24, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def eval_pair_cmd(original, generated, samples, restarts, seed, out_path):
    """Normalize, align, and score a generated mesh against its source."""
    params = IcpParams(restarts=restarts, seed=seed)
    report = evaluate_pair(load_mesh(original), load_mesh(generated),
                           params=params, n_samples=samples, seed=seed)
    payload = {
        "chamfer": report.chamfer,
        "hausdorff": report.hausdorff,
        "sample_count": report.sample_count,
        "seed": report.seed,
        "convention": report.convention,
        "alignment": {
            "rms": report.alignment.rms,
            "restart_index": report.alignment.restart_index,
            "iterations_used": report.alignment.iterations_used,
            "rotation": report.alignment.transform.rotation.tolist(),
            "translation": report.alignment.transform.translation.tolist(),
        },
    }
    Path(out_path).write_text(json.dumps(payload, indent=2, sort_keys=True))
    click.echo(f"chamfer={report.chamfer:.6f} hausdorff={report.hausdorff:.6f}")


@main.command("run-study")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--backend", type=click.Choice(["mock", "live"]), default=None,
              help="Override the manifest's backend endpoints.")
def run_study_cmd(manifest_path, out_dir, backend):
    """Run every (object, prompt) pair of a study manifest."""
    overrides = {}
    if backend == "mock":
        overrides["backend"] = {"t2i_endpoint": "mock",
                                "bg_removal_endpoint": "mock",
                                "img2mesh_endpoint": "mock"}
    manifest = load_manifest(manifest_path, overrides)
    if backend == "live" and manifest.backend.backend_id == "mock":
        raise click.ClickException(
            "--backend live needs endpoint URLs in the manifest's [backend]")
    report = run_study(manifest, out_dir)
    out = Path(out_dir)
    (out / "report.json").write_bytes(emit_report(report, "json"))
    (out / "report.csv").write_bytes(emit_report(report, "csv"))
    agg = report.aggregates
    click.echo(f"completed {agg['completed']}, failed {agg['failed']}")
    if "mean_chamfer_overall" in agg:
        click.echo(f"mean chamfer {agg['mean_chamfer_overall']:.4f}, "
                   f"mean hausdorff {agg['mean_hausdorff_overall']:.4f}")
    click.echo(f"report written to {out / 'report.json'}")


@main.command("kappa")
@click.option("--ratings", "ratings_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
def kappa_cmd(ratings_path):
    """Fleiss' kappa, alignment, and success rates from a ratings CSV."""
    records = load_ratings(ratings_path)
    raters = sorted({r.rater_id for r in records})
    items = sorted({r.item_id for r in records})
    by_key = {(r.item_id, r.rater_id): r for r in records}
    for question in ("q1", "q2", "q3"):
        matrix = []
        for item in items:
            try:
                matrix.append([int(getattr(by_key[(item, rater)], question))
                               for rater in raters])
            except KeyError as exc:
                raise click.ClickException(
                    f"item {item} is missing a rating: {exc}")
        stats = fleiss_kappa(matrix)
        click.echo(
            f"{question}: kappa={stats.kappa:.3f} "
            f"(95% CI {stats.ci_low:.3f} to {stats.ci_high:.3f}), "
            f"{stats.aligned_count} of {stats.total_count} aligned "
            f"({100 * stats.aligned_fraction:.2f}%)")
    if all(r.condition for r in records):
        summary = success_rates(majority_reconcile(records))
        for question, rates in summary.per_question.items():
            click.echo(
                f"{question} success: custom {100 * rates.custom_fraction:.1f}% "
                f"general {100 * rates.general_fraction:.1f}% "
                f"overall {100 * rates.overall_fraction:.1f}%")


@main.command("wilcoxon")
@click.option("--pairs", "pairs_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="CSV with columns a,b (one pair per row).")
def wilcoxon_cmd(pairs_path):
    """Paired signed-rank test over a two-column CSV."""
    a, b = [], []
    with open(pairs_path, newline="") as fh:
        for row in csv.DictReader(fh):
            a.append(float(row["a"]))
            b.append(float(row["b"]))
    result = wilcoxon_signed_rank(a, b)
    click.echo(f"z={result.z:.3f} p={result.p:.4f} r={result.r:.3f} "
               f"(n={result.n})")


@main.group("pipeline")
def pipeline_group():
    """Single-job pipeline operations."""


@pipeline_group.command("run")
@click.option("--rgb", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--depth", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--prompt", required=True)
@click.option("--backend", type=click.Choice(["mock", "live"]), default="mock",
              show_default=True)
@click.option("--t2i-endpoint", default=None)
@click.option("--bg-endpoint", default=None)
@click.option("--img2mesh-endpoint", default=None)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", default=0, show_default=True)
def pipeline_run_cmd(rgb, depth, prompt, backend, t2i_endpoint, bg_endpoint,
                     img2mesh_endpoint, out_dir, seed):
    """Run one capture + prompt through all four stages."""
    if backend == "live":
        if not (t2i_endpoint and bg_endpoint and img2mesh_endpoint):
            raise click.ClickException(
                "live backend needs --t2i-endpoint, --bg-endpoint, "
                "and --img2mesh-endpoint")
        config = BackendConfig(t2i_endpoint=t2i_endpoint,
                               bg_removal_endpoint=bg_endpoint,
                               img2mesh_endpoint=img2mesh_endpoint)
    else:
        config = BackendConfig()
    store = JobStore(Path(out_dir) / "store")
    depth_image = decode_depth_png(Path(depth).read_bytes())
    spec = PromptSpec(text=prompt, kind=classify_prompt(prompt))
    job_id = submit_job(store, Path(rgb), depth_image, spec, config, seed=seed)
    job = run_job(store, job_id, config, token=os.environ.get(TOKEN_ENV))
    click.echo(f"job {job.id}: {job.state.value}"
               + (f" ({job.failure})" if job.failure else ""))
    for stage, artifact in job.artifacts.items():
        click.echo(f"  {stage}: {store.asset_path(artifact)}")
    if job.failure:
        sys.exit(1)


@main.command("serve-mock")
@click.option("--port", default=8787, show_default=True)
@click.option("--seed", default=0, show_default=True)
def serve_mock_cmd(port, seed):
    """Serve the three stage endpoints backed by the mock generator."""
    from .mockserver import make_server

    server = make_server(port=port, seed=seed)
    host, bound_port = server.server_address
    click.echo(f"mock stages at http://{host}:{bound_port}"
               f"  (/t2i /remove-bg /img2mesh)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()


if __name__ == "__main__":
    main()
