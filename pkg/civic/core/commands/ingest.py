from pathlib import Path

import click

from ..utility import write_json
from .command_factory import (
    emit,
    handle_errors,
    json_option,
    posts_options,
    relevant_documents,
)


@click.command("ingest")
@posts_options
@click.option(
    "--output",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Write the relevant tokenized documents as JSON.",
)
@json_option
@handle_errors
def ingest(posts, keywords, stopwords, start, end, output, as_json):
    """Parse, clean, tokenize and keyword-filter an archived post export."""
    parsed, kept = relevant_documents(posts, keywords, stopwords, start, end)
    if output is not None:
        write_json([doc.dict() for _, doc in kept], output)

    result = {
        "parsed": len(parsed.records),
        "rejected": len(parsed.issues),
        "relevant": len(kept),
        "issues": [issue.dict() for issue in parsed.issues],
    }
    emit(
        result,
        as_json,
        f"Parsed {result['parsed']} posts ({result['rejected']} rejected); "
        f"{result['relevant']} relevant.",
    )
