"""Command line front end.

Exit codes: 0 success, 1 validation or quality failure, 2 backend failure,
64 usage or configuration error.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click

from . import __version__
from .agents import AgentError, build_story_plan
from .backends.client import BackendError, handle_for
from .backends.server import MockServer
from .backends.service import MockBackendService, geometry_from_config
from .config import ConfigError, RunConfig, apply_overrides, apply_pairs, load_config
from .dataset import DatasetError, run_dataset_pipeline
from .metrics import MetricsError, build_report
from .pipeline import MuxError, PlanInvalid, run_pipeline
from .schema import (
    PlanParseError,
    StorySpec,
    parse_plan,
    serialize_plan,
    validate_plan,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_BACKEND = 2
EXIT_USAGE = 64


class ValidationFailed(Exception):
    """Marks a command whose subject failed a check; maps to exit 1."""


def _config_options(fn):
    fn = click.option(
        "--endpoint", "endpoints", multiple=True, metavar="SEAT=URL",
        help="Remote backend URL for one seat (or 'all=URL'). Repeatable.",
    )(fn)
    fn = click.option(
        "--backend", type=click.Choice(["mock", "remote"]), default=None,
        help="Backend family; 'remote' needs endpoints.",
    )(fn)
    fn = click.option("--strict/--no-strict", "strict", default=None,
                      help="Escalate range warnings to errors.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Run seed.")(fn)
    fn = click.option(
        "--config", "config_path", type=click.Path(), default=None,
        help="Flat key=value config file (falls back to INFSTORY_CONFIG).",
    )(fn)
    return fn


def _resolve_config(config_path, seed, strict, backend, endpoints, **extra) -> RunConfig:
    config = load_config(config_path)
    if endpoints:
        pairs = {}
        for item in endpoints:
            if "=" not in item:
                raise ConfigError(f"--endpoint expects SEAT=URL, got {item!r}")
            seat, url = item.split("=", 1)
            pairs[f"endpoint.{seat.strip()}"] = url.strip()
        config = apply_pairs(config, pairs)
    overrides = {"seed": seed, "strict": strict, "backend": backend}
    overrides.update(extra)
    return apply_overrides(config, **overrides)


def _service_for(config: RunConfig):
    if config.backend == "mock":
        return MockBackendService(geometry_from_config(config))
    return None


def _load_plan(plan_file: str):
    path = Path(plan_file)
    if not path.exists():
        raise click.UsageError(f"plan file not found: {plan_file}")
    try:
        return parse_plan(path.read_text())
    except PlanParseError as exc:
        for error in exc.errors:
            click.echo(f"schema {error.path}: expected {error.expected}, "
                       f"found {error.found}", err=True)
        raise ValidationFailed(f"{plan_file} failed schema validation") from exc


@click.group()
@click.version_option(version=__version__, prog_name="infstory")
def cli():
    """Plan, render, and evaluate long-form storytelling videos."""


# ---------------------------------------------------------------------------


@cli.command()
@_config_options
@click.option("--story", default=None, help="One-line story description.")
@click.option("--character", "characters", multiple=True, metavar="NAME=DESCRIPTION",
              help="Recurring character. Repeatable.")
@click.option("--story-file", type=click.Path(), default=None,
              help="JSON file with description and characters.")
@click.option("--out", "out_path", default="plan.json", show_default=True)
@click.option("--trace-dir", default=None,
              help="Directory for per-attempt agent traces.")
def plan(config_path, seed, strict, backend, endpoints, story, characters,
         story_file, out_path, trace_dir):
    """Draft a full story plan through the agent stages."""
    config = _resolve_config(config_path, seed, strict, backend, endpoints)
    if story_file:
        raw = Path(story_file)
        if not raw.exists():
            raise click.UsageError(f"story file not found: {story_file}")
        spec = StorySpec.model_validate(json.loads(raw.read_text()))
    elif story:
        if not characters:
            raise click.UsageError("--story needs at least one --character")
        parsed = []
        for item in characters:
            if "=" not in item:
                raise click.UsageError(f"--character expects NAME=DESCRIPTION, got {item!r}")
            name, description = item.split("=", 1)
            parsed.append({"name": name.strip(), "description": description.strip()})
        spec = StorySpec.model_validate({"description": story, "characters": parsed})
    else:
        raise click.UsageError("give either --story-file or --story with --character")
    llm = handle_for("llm", config, _service_for(config))
    story_plan, traces = build_story_plan(
        spec, llm, config.seed, strict=config.strict, trace_dir=trace_dir
    )
    Path(out_path).write_text(serialize_plan(story_plan))
    retries = sum(1 for t in traces if not t.accepted)
    click.echo(
        f"plan written to {out_path}: {len(story_plan.chapters)} chapters, "
        f"{len(story_plan.locations)} locations, {len(story_plan.scenes)} scenes, "
        f"{len(story_plan.shots)} shots ({retries} rejected attempts)"
    )


@cli.command()
@_config_options
@click.argument("plan_file")
def validate(config_path, seed, strict, backend, endpoints, plan_file):
    """Check a plan file against every structural rule."""
    config = _resolve_config(config_path, seed, strict, backend, endpoints)
    story_plan = _load_plan(plan_file)
    report = validate_plan(story_plan, strict=config.strict)
    click.echo(report.summary())
    if not report.ok:
        raise ValidationFailed(
            f"{plan_file}: {len(report.errors)} error(s), "
            f"{len(report.warnings)} warning(s)"
        )


@cli.command()
@_config_options
@click.argument("plan_file")
@click.option("--out", "out_root", default=None, help="Parent directory for runs.")
@click.option("--run-id", default=None)
@click.option("--jobs", type=int, default=None, help="Parallel keyframe workers.")
@click.option("--mux", default=None,
              help="External muxer template with {frames_dir} {fps} {out}.")
@click.option("--frame-count", type=int, default=None, help="Frames per clip.")
@click.option("--background-injection/--no-background-injection",
              "background_injection", default=None,
              help="Pin one backdrop per location (on by default).")
def render(config_path, seed, strict, backend, endpoints, plan_file, out_root,
           run_id, jobs, mux, frame_count, background_injection):
    """Render a plan into clips and a stitched frame sequence."""
    config = _resolve_config(
        config_path, seed, strict, backend, endpoints,
        out_root=out_root, jobs=jobs, mux=mux, frame_count=frame_count,
        background_injection=background_injection,
    )
    story_plan = _load_plan(plan_file)
    result = run_pipeline(story_plan, config, run_id=run_id)
    click.echo(f"run directory: {result.run_dir}")
    click.echo(
        f"stitched {result.stitched_frames} frames across "
        f"{len(result.manifest['scenes'])} scenes "
        f"({len(result.manifest['calls'])} backend calls, "
        f"{result.resumed_steps} reused from disk)"
    )


@cli.command()
@click.argument("run_dir")
@click.option("--encoder", type=click.Choice(["grid", "hist"]), default="grid",
              show_default=True)
@click.option("--out", "out_dir", default=None,
              help="Report directory (default: RUN_DIR/report).")
@click.option("--figures/--no-figures", default=True, show_default=True)
def metrics(run_dir, encoder, out_dir, figures):
    """Score a finished run and write the report bundle."""
    if not (Path(run_dir) / "manifest.json").exists():
        raise click.UsageError(f"no manifest.json under {run_dir}")
    report = build_report(run_dir, encoder_name=encoder, out_dir=out_dir,
                          make_figures=figures)
    data = report.data
    click.echo(f"report: {report.report_dir}")
    click.echo(
        f"encoder={data['encoder']} proxy={data['proxy_metrics']} "
        f"mean_drift={data['totals']['mean_drift']} "
        f"max_seam_step={data['totals']['max_seam_step']}"
    )
    for path in report.files:
        click.echo(f"  wrote {path}")
    if not data["ok"]:
        raise ValidationFailed("metrics found continuity violations")
    click.echo("all continuity checks passed")


# ---------------------------------------------------------------------------


@cli.group()
def dataset():
    """Synthetic transition-training dataset stages."""


def _dataset_common(fn):
    fn = click.option("--per-batch", type=int, default=25, show_default=True,
                      help="Variations per batch (smaller for smoke runs).")(fn)
    fn = click.option("--scale", type=float, default=1.0, show_default=True,
                      help="Fraction of the full corpus (batch count).")(fn)
    fn = click.option("--out", "out_dir", required=True,
                      help="Dataset output directory.")(fn)
    return fn


def _echo_stats(stats: dict) -> None:
    for key in ("flavors", "variations", "prompts", "clips", "passed", "failed",
                "pass_rate", "manifest_rows"):
        if key in stats:
            click.echo(f"{key}: {stats[key]}")


@dataset.command("gen")
@_config_options
@_dataset_common
def dataset_gen(config_path, seed, strict, backend, endpoints, out_dir, scale,
                per_batch):
    """Stages 1-3: flavors, variations, prompts, and rendered clips."""
    config = _resolve_config(config_path, seed, strict, backend, endpoints)
    result = run_dataset_pipeline(config, out_dir, scale=scale,
                                  per_batch=per_batch, until="clips")
    _echo_stats(result.stats)


@dataset.command("filter")
@_config_options
@_dataset_common
def dataset_filter(config_path, seed, strict, backend, endpoints, out_dir, scale,
                   per_batch):
    """Stage 4: the zero-tolerance figure-count filter."""
    config = _resolve_config(config_path, seed, strict, backend, endpoints)
    result = run_dataset_pipeline(config, out_dir, scale=scale,
                                  per_batch=per_batch, until="verdicts")
    _echo_stats(result.stats)


@dataset.command("manifest")
@_config_options
@_dataset_common
@click.option("--rows", type=int, default=None,
              help="Manifest size (default: largest balanced size).")
def dataset_manifest(config_path, seed, strict, backend, endpoints, out_dir,
                     scale, per_batch, rows):
    """Stage 5: assemble the balanced training manifest and stats."""
    config = _resolve_config(config_path, seed, strict, backend, endpoints)
    result = run_dataset_pipeline(config, out_dir, scale=scale,
                                  per_batch=per_batch, rows=rows)
    _echo_stats(result.stats)


@dataset.command("stats")
@click.option("--out", "out_dir", required=True, help="Dataset directory.")
def dataset_stats(out_dir):
    """Print the stats of an assembled dataset."""
    stats_path = Path(out_dir) / "stats.json"
    if not stats_path.exists():
        raise click.UsageError(f"no stats.json under {out_dir}; run 'dataset manifest'")
    stats = json.loads(stats_path.read_text())
    _echo_stats(stats)
    for category, row in sorted(stats.get("per_category", {}).items()):
        click.echo(
            f"  {category}: planned={row['planned']} passed={row['passed']} "
            f"manifest={row['manifest_rows']}"
        )


# ---------------------------------------------------------------------------


@cli.command("mock-serve")
@_config_options
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=0,
              help="TCP port (0 picks a free one).")
@click.option("--ready-file", default=None,
              help="Write the bound URL here once listening.")
def mock_serve(config_path, seed, strict, backend, endpoints, host, port,
               ready_file):
    """Serve the deterministic mock backends over HTTP."""
    config = _resolve_config(config_path, seed, strict, backend, endpoints)
    service = MockBackendService(geometry_from_config(config))
    with MockServer(service, host=host, port=port) as server:
        if ready_file:
            Path(ready_file).write_text(server.base_url)
        click.echo(f"mock backends listening on {server.base_url}")
        click.echo("POST /v1/<seat>, GET /v1/health; Ctrl-C to stop")
        try:
            while True:
                time.sleep(3600)
        except KeyboardInterrupt:
            click.echo("stopping")


# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False, prog_name="infstory")
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        return 130
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return EXIT_USAGE
    except (ValidationFailed, PlanInvalid) as exc:
        click.echo(str(exc), err=True)
        return EXIT_VALIDATION
    except (BackendError, AgentError, DatasetError, MuxError, MetricsError) as exc:
        click.echo(f"backend failure: {exc}", err=True)
        return EXIT_BACKEND
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
