from pathlib import Path

import click

from .. import synthetic
from ..config import load_config
from ..pipeline import run_pipeline
from .command_factory import emit, handle_errors, json_option


@click.command("pipeline")
@click.argument("config_path", type=click.Path(dir_okay=False, path_type=Path))
@click.option(
    "--output-dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="Overrides [output] dir.",
)
@click.option("--seed", type=int, default=None, help="Overrides every seed.")
@click.option(
    "--set",
    "overrides",
    multiple=True,
    metavar="SECTION.KEY=VALUE",
    help="Overrides one config value; repeatable.",
)
@json_option
@handle_errors
def pipeline(config_path, output_dir, seed, overrides, as_json):
    """Run every stage from archived posts to model tables as configured."""
    config = load_config(config_path, list(overrides), output_dir, seed)
    result = run_pipeline(config)
    emit(
        result.manifest.dict(),
        as_json,
        f"Wrote {len(result.written)} files to {config.output.dir}\n"
        + "\n".join(f"  {name}: {count}" for name, count in result.manifest.counts.items()),
    )


@click.command("make-fixture")
@click.argument("directory", type=click.Path(file_okay=False, path_type=Path))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--n-posts", type=int, default=2000, show_default=True)
@json_option
@handle_errors
def make_fixture(directory, seed, n_posts, as_json):
    """Write a synthetic input set and config.toml that 'civic pipeline' can run."""
    paths = synthetic.make_fixture(directory, seed, n_posts)
    emit(
        {role: str(path) for role, path in paths.items()},
        as_json,
        f"Wrote the fixture to {directory}; run: civic pipeline {paths['config']}",
    )
