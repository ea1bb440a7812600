"""Command-line experiment runner.

Subcommands: ``run`` executes an experiment config, ``sweep`` drives its
sweep section explicitly, ``validate`` checks a config without running
anything, and ``oracle`` recomputes the brute-force reference fixtures.
Exit codes: 0 success, 2 config error, 3 numerical failure, 4 partial
sweep (some points failed; completed points and the manifest are kept).
"""
from __future__ import annotations

import sys

import click
import yaml

from .config import (
    apply_overrides,
    canonical_dict,
    config_from_dict,
    config_hash,
    parse_config_file,
)
from .errors import ConfigError, GkpFloquetError
from .experiments import execute, run_oracle

_seed_option = click.option(
    "--seed", type=click.IntRange(0, 2 ** 64 - 1), default=None,
    help="Override master_seed.")
_out_option = click.option(
    "--out", type=click.Path(file_okay=False), default=None,
    help="Output directory (defaults to the config's output_dir).")
_override_option = click.option(
    "--override", "overrides", multiple=True, metavar="KEY=VALUE",
    help="Override a config field by dotted path (repeatable).")
_workers_option = click.option(
    "--workers", type=click.IntRange(min=1), default=1,
    help="Worker processes for sweep points.")


def _build(config_path, seed, overrides, default_raw=None):
    raw = parse_config_file(config_path) if config_path else dict(default_raw)
    raw = apply_overrides(raw, overrides)
    if seed is not None:
        raw["master_seed"] = seed
    return config_from_dict(raw, source=config_path or "<defaults>")


def _fail(code: int, message: str):
    click.echo(message, err=True)
    sys.exit(code)


@click.group()
@click.version_option(package_name="gkpfloquet")
def main():
    """Floquet GKP state engineering: experiments and figure data."""


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@_seed_option
@_out_option
@_workers_option
@_override_option
def run(config_path, seed, out, workers, overrides):
    """Execute the experiment described by a config file."""
    try:
        config = _build(config_path, seed, overrides)
    except ConfigError as exc:
        _fail(2, f"config error: {exc}")
    try:
        status = execute(config, out_dir=out, workers=workers)
    except ConfigError as exc:
        _fail(2, f"config error: {exc}")
    except GkpFloquetError as exc:
        _fail(3, f"numerical failure in {config.experiment}: {exc}")
    if status:
        _fail(status, f"{config.experiment}: some sweep points failed; "
                      f"see manifest.json")
    click.echo(f"{config.experiment} complete (config {config_hash(config)})")


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@_seed_option
@_out_option
@_workers_option
@_override_option
def sweep(config_path, seed, out, workers, overrides):
    """Run a config's sweep section point by point."""
    try:
        config = _build(config_path, seed, overrides)
    except ConfigError as exc:
        _fail(2, f"config error: {exc}")
    try:
        status = execute(config, out_dir=out, workers=workers, force_sweep=True)
    except ConfigError as exc:
        _fail(2, f"config error: {exc}")
    except GkpFloquetError as exc:
        _fail(3, f"numerical failure in {config.experiment}: {exc}")
    if status:
        _fail(status, f"{config.experiment}: some sweep points failed; "
                      f"see manifest.json")
    click.echo(f"sweep complete (config {config_hash(config)})")


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@_seed_option
@_override_option
def validate(config_path, seed, overrides):
    """Check a config file and echo its resolved canonical form."""
    try:
        config = _build(config_path, seed, overrides)
    except ConfigError as exc:
        _fail(2, f"config error: {exc}")
    click.echo(f"ok: {config.experiment} (config {config_hash(config)})")
    click.echo(yaml.safe_dump(canonical_dict(config), sort_keys=True), nl=False)


@main.command()
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Optional config for model/integrator settings.")
@_seed_option
@_out_option
@_override_option
def oracle(config_path, seed, out, overrides):
    """Recompute the brute-force reference values and record fixtures."""
    try:
        config = _build(config_path, seed, overrides,
                        default_raw={"experiment": "floquet-scan",
                                     "output_dir": "runs/oracle"})
    except ConfigError as exc:
        _fail(2, f"config error: {exc}")
    try:
        run_oracle(config, out_dir=out)
    except GkpFloquetError as exc:
        _fail(3, f"numerical failure in oracle: {exc}")
    click.echo(f"oracle fixtures written (config {config_hash(config)})")


if __name__ == "__main__":
    main()
