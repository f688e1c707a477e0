"""Command-line entry point."""

import logging

import click

from .core import utility as util
from .core.commands import attention, classify, demographics, fit, fuse, ingest, pipeline, topics


@click.group()
@click.option(
    "-v",
    "--verbose",
    count=True,
    help="Log progress (-v for INFO, -vv for DEBUG); defaults to CIVIC_LOG_LEVEL.",
)
@click.version_option(util.VERSION, prog_name="civic")
def cli(verbose):
    """Mine archived geotagged posts for transport attitudes and model who voices them."""
    if verbose:
        level = logging.DEBUG if verbose > 1 else logging.INFO
    else:
        level = getattr(logging, util.LOG_LEVEL.val, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


cli.add_command(ingest.ingest)
cli.add_command(demographics.demo_train)
cli.add_command(demographics.demo_predict)
cli.add_command(demographics.demo_evaluate)
cli.add_command(topics.topics)
cli.add_command(classify.classify)
cli.add_command(classify.sentiment)
cli.add_command(fuse.fuse)
cli.add_command(fit.fit)
cli.add_command(fit.report)
cli.add_command(attention.attention)
cli.add_command(pipeline.pipeline)
cli.add_command(pipeline.make_fixture)

if __name__ == "__main__":
    cli()
