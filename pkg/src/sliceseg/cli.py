"""Command line entry points: serve, run, cache admin, predictor listing."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import ServiceConfig
from .errors import EngineError
from .native.predictor import NativePredictor
from .predictor.bridge import probe_bridge
from .predictor.cache import EmbeddingCache
from .predictor.registry import PredictorRegistry

_common_options = [
    click.option("--data-root", type=click.Path(path_type=Path),
                 envvar="SLICESEG_DATA_ROOT", default=None,
                 help="Directory for volumes, sessions and the cache."),
    click.option("--cache-root", type=click.Path(path_type=Path),
                 envvar="SLICESEG_CACHE_ROOT", default=None,
                 help="Embedding cache directory (default: <data-root>/cache)."),
    click.option("--cache-budget", type=int, envvar="SLICESEG_CACHE_BUDGET",
                 default=None, help="Embedding cache byte budget."),
    click.option("--bridge-command", envvar="SLICESEG_BRIDGE_COMMAND",
                 default=None, help="Command launching an external model bridge."),
    click.option("--tolerance-fraction", type=float,
                 envvar="SLICESEG_TOLERANCE_FRACTION", default=None,
                 help="Native predictor intensity tolerance (0, 1]."),
    click.option("--max-region-fraction", type=float,
                 envvar="SLICESEG_MAX_REGION_FRACTION", default=None,
                 help="Native predictor region size cap (0, 1]."),
]


def _with_options(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn
    return wrap


@click.group()
def main():
    """Prompt-based 3D volume segmentation with slice propagation."""


@main.command()
@click.option("--host", envvar="SLICESEG_HOST", default=None)
@click.option("--port", type=int, envvar="SLICESEG_PORT", default=None)
@click.option("--ui-root", type=click.Path(path_type=Path),
              envvar="SLICESEG_UI_ROOT", default=None,
              help="Static web UI directory to serve at /ui.")
@_with_options(_common_options)
def serve(host, port, ui_root, **kwargs):
    """Start the HTTP service."""
    import uvicorn

    from .service.app import create_app

    config = ServiceConfig.from_env(host=host, port=port, ui_root=ui_root, **kwargs)
    uvicorn.run(create_app(config), host=config.host, port=config.port)


@main.command()
@click.option("--volume", "volume_path", required=True,
              type=click.Path(path_type=Path), help="Input NIfTI/NRRD volume.")
@click.option("--prompts", "prompt_path", required=True,
              type=click.Path(path_type=Path), help="Prompt file (JSON).")
@click.option("--output", "output_path", required=True,
              type=click.Path(path_type=Path),
              help="Labelmap output (.nrrd, .nii or .nii.gz).")
@click.option("--predictor", "predictor_id", default="native")
@click.option("--mode", type=click.Choice(["all", "left", "right"]), default="all")
@click.option("--from-slice", type=int, default=None)
@click.option("--report", "report_path", type=click.Path(path_type=Path),
              default=None, help="Write the JSON run report here.")
@click.option("--reference", "reference_path", type=click.Path(path_type=Path),
              default=None, help="Reference labelmap for dice scoring.")
@_with_options(_common_options)
def run(volume_path, prompt_path, output_path, predictor_id, mode, from_slice,
        report_path, reference_path, data_root, cache_root, cache_budget,
        bridge_command, tolerance_fraction, max_region_fraction):
    """Run one batch segmentation from a prompt file."""
    from .batch import BatchSpec, run_batch

    spec = BatchSpec(
        volume_path=volume_path, prompt_path=prompt_path,
        output_path=output_path, predictor_id=predictor_id, mode=mode,
        from_slice=from_slice, report_path=report_path,
        reference_path=reference_path,
        tolerance_fraction=0.1 if tolerance_fraction is None else tolerance_fraction,
        max_region_fraction=1.0 if max_region_fraction is None else max_region_fraction,
        cache_root=cache_root, bridge_command=bridge_command,
    )
    result = run_batch(spec)
    if result.error:
        click.echo(f"error: {result.error}", err=True)
    elif result.report:
        click.echo(json.dumps(result.report, indent=1))
    sys.exit(result.exit_code)


def _open_cache(cache_root, cache_budget) -> EmbeddingCache:
    config = ServiceConfig.from_env(cache_root=cache_root, cache_budget=cache_budget)
    return EmbeddingCache(config.cache_root, config.cache_budget)


@main.group()
def cache():
    """Embedding cache administration."""


@cache.command("stats")
@_with_options(_common_options)
def cache_stats(cache_root, cache_budget, **_):
    try:
        stats = _open_cache(cache_root, cache_budget).stats()
    except EngineError as exc:
        click.echo(f"error: {exc.message}", err=True)
        sys.exit(4)
    click.echo(json.dumps({
        "entries": stats.entries, "bytes": stats.total_bytes,
        "budget": stats.budget_bytes,
    }, indent=1))


@cache.command("gc")
@click.option("--budget", type=int, default=None,
              help="One-off budget override for this collection.")
@_with_options(_common_options)
def cache_gc(budget, cache_root, cache_budget, **_):
    try:
        store = _open_cache(cache_root, cache_budget)
        evicted = store.gc(budget)
        stats = store.stats()
    except EngineError as exc:
        click.echo(f"error: {exc.message}", err=True)
        sys.exit(4)
    click.echo(json.dumps({
        "evicted": evicted, "entries": stats.entries, "bytes": stats.total_bytes,
    }, indent=1))


@cache.command("clear")
@_with_options(_common_options)
def cache_clear(cache_root, cache_budget, **_):
    try:
        removed = _open_cache(cache_root, cache_budget).clear()
    except EngineError as exc:
        click.echo(f"error: {exc.message}", err=True)
        sys.exit(4)
    click.echo(json.dumps({"removed": removed}))


@main.command()
@_with_options(_common_options)
def predictors(bridge_command, tolerance_fraction, max_region_fraction, **_):
    """List available predictors, probing the bridge when configured."""
    registry = PredictorRegistry(NativePredictor())
    client = None
    if bridge_command:
        try:
            client, bridge_predictors = probe_bridge(bridge_command)
            for predictor in bridge_predictors:
                registry.register(predictor)
        except EngineError as exc:
            click.echo(f"bridge unavailable: {exc.message}", err=True)
    try:
        click.echo(json.dumps(
            [d.to_dict() for d in registry.descriptors()], indent=1
        ))
    finally:
        if client is not None:
            client.close()
