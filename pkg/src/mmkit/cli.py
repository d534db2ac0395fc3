"""Command-line entry points: train, evaluate, download, list.

Exit codes: 0 success, 1 configuration/validation problems, 2 runtime
failures.  Successful train/evaluate print the final metrics as one JSON
line on stdout; everything human-oriented goes to stderr.
"""

import logging
import sys

import click

from .config import build_run_config
from .data.builders import build_dataset
from .errors import (
    ConfigParseError,
    InvalidNamespaceError,
    KeyMissingError,
    MalformedOptionError,
    NotFoundError,
    TypeConflictError,
    ValidationError,
)
from .models import build_model_from_run_config, model_types_for
from .registry import registry
from .runners import setup_runner
from .tasks import setup_task
from .utils import dumps_record, resolve_cache_root, set_seed, sha256_file

VALIDATION_ERRORS = (
    ValidationError,
    ConfigParseError,
    MalformedOptionError,
    TypeConflictError,
    NotFoundError,
    InvalidNamespaceError,
    KeyMissingError,
)


def _execute(fn):
    try:
        fn()
        return 0
    except VALIDATION_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except Exception as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


def _collect_options(options, seed):
    pairs = []
    for opt in options:
        pairs.extend(opt.split())
    if seed is not None:
        pairs.append(f"run.seed={seed}")
    return pairs


def _load_cfg(cfg_path, pairs):
    try:
        return build_run_config(cfg_path, pairs)
    except FileNotFoundError as exc:
        raise ValidationError([f"config file not found: {exc}"]) from exc


def _assemble(cfg):
    """Build (task, model, splits) for the first configured dataset."""
    set_seed(int(cfg.run.get("seed", 42)))
    names = sorted(cfg.datasets)
    splits = build_dataset(names[0], cfg)
    model = build_model_from_run_config(cfg)
    task = setup_task(cfg)
    return task, model, splits


def _train_with_cfg(cfg):
    task, model, splits = _assemble(cfg)
    runner = setup_runner(cfg, task, model, splits)
    result = runner.train()
    record = result.to_record() if result is not None else {}
    click.echo(dumps_record(record))


@click.group()
def main():
    """Desk-scale multimodal training and evaluation toolkit."""
    logging.basicConfig(level=logging.INFO, stream=sys.stderr)


@main.command("train")
@click.option("--cfg-path", required=True)
@click.option("--options", multiple=True, help="dotted-path overrides, k=v (repeatable)")
@click.option("--seed", type=int, default=None, help="alias for run.seed")
def train_command(cfg_path, options, seed):
    def run():
        cfg = _load_cfg(cfg_path, _collect_options(options, seed))
        _train_with_cfg(cfg)

    sys.exit(_execute(run))


@main.command("evaluate")
@click.option("--cfg-path", required=True)
@click.option("--options", multiple=True)
@click.option("--seed", type=int, default=None)
def evaluate_command(cfg_path, options, seed):
    def run():
        pairs = _collect_options(options, seed) + ["run.evaluate=true"]
        cfg = _load_cfg(cfg_path, pairs)
        if not cfg.get("model.checkpoint"):
            raise RuntimeError("evaluate mode requires model.checkpoint to be set")
        _train_with_cfg(cfg)

    sys.exit(_execute(run))


@main.command("download")
@click.argument("dataset_names", nargs=-1, required=True)
def download_command(dataset_names):
    def run():
        from .data.download import download_and_cache

        cache_root = resolve_cache_root()
        for name in dataset_names:
            builder_cls = registry.lookup("dataset_builder", name)
            builder = builder_cls({})
            card = builder.card()
            dataset_dir = cache_root / card.name
            cached = {
                spec.name
                for spec in card.splits
                if (dataset_dir / f"{spec.name}.ann").is_file()
                and sha256_file(dataset_dir / f"{spec.name}.ann") == spec.sha256
            }
            manifest = download_and_cache(card, cache_root)
            builder.prepare_media(cache_root)
            for split_name in sorted(manifest):
                status = "cached" if split_name in cached else "fetched"
                click.echo(f"{name}/{split_name}: {status}")

    sys.exit(_execute(run))


@main.command("list")
@click.argument("namespace")
def list_command(namespace):
    def run():
        names = registry.list_names(namespace)
        if namespace == "model":
            for name in names:
                click.echo(f"{name}: {', '.join(model_types_for(name))}")
        else:
            for name in names:
                click.echo(name)

    sys.exit(_execute(run))


if __name__ == "__main__":
    main()
