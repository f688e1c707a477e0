"""Shared options, error handling and output helpers for the commands."""

import functools
import sys
from pathlib import Path

import click

from .. import utility as util
from ..exceptions import CivicError
from ..ingest import (
    KeywordSet,
    filter_by_date,
    load_token_file,
    parse_posts,
    prepare_documents,
    relevance_filter,
)

json_option = click.option(
    "--json",
    "as_json",
    is_flag=True,
    help="Print machine-readable JSON on stdout.",
)
seed_option = click.option("--seed", type=int, default=0, show_default=True)
existing_file = click.Path(exists=True, dir_okay=False, path_type=Path)


def posts_options(func):
    """Adds the options that turn a post archive into relevant tokenized documents."""
    options = [
        click.argument("posts", type=existing_file),
        click.option(
            "--keywords",
            type=existing_file,
            default=util.DEFAULT_KEYWORDS,
            show_default=True,
        ),
        click.option(
            "--stopwords",
            type=existing_file,
            default=util.DEFAULT_STOPWORDS,
            show_default=True,
        ),
        click.option("--start", type=click.DateTime(), default=None),
        click.option("--end", type=click.DateTime(), default=None),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def handle_errors(func):
    """Prints library errors on stderr and exits with the error's exit code (1 for stage errors, 2 for configuration)."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except CivicError as exc:
            click.echo(f"Error: {exc.detail}", err=True)
            sys.exit(exc.exit_code)

    return wrapper


def emit(result, as_json: bool, text: str):
    """Prints `result` as JSON when requested, otherwise the human-readable text."""
    if as_json:
        click.echo(util.dump_json(result).decode(), nl=False)
    else:
        click.echo(text)


def relevant_documents(posts: Path, keywords: Path, stopwords: Path, start, end):
    """
    Parses, date-filters, tokenizes and keyword-filters an archive.

    Returns the parse result and the (record, document) pairs that pass the filters.
    """
    parsed = parse_posts(posts)
    records = filter_by_date(parsed.records, start, end)
    stopword_set = load_token_file(stopwords)
    keyword_set = KeywordSet(keywords=load_token_file(keywords))
    docs = prepare_documents(records, stopword_set)
    kept = [
        (record, doc)
        for record, doc in zip(records, docs)
        if relevance_filter(doc, keyword_set)
    ]
    return parsed, kept
