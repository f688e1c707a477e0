from pathlib import Path

import click
import pandas as pd

from .. import classify as text
from .. import utility as util
from ..ingest import load_token_file
from .command_factory import (
    emit,
    existing_file,
    handle_errors,
    json_option,
    posts_options,
    relevant_documents,
    seed_option,
)

output_option = click.option(
    "--output",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Write the per-post results as CSV.",
)


@click.command("classify")
@posts_options
@click.option("--labeled", type=existing_file, required=True, help="Training CSV text,label.")
@click.option("--holdout-fraction", type=float, default=0.3, show_default=True)
@output_option
@seed_option
@json_option
@handle_errors
def classify(
    posts, keywords, stopwords, start, end, labeled, holdout_fraction, output, seed, as_json
):
    """Assign each relevant post one of the four topic categories."""
    stopword_set = load_token_file(stopwords)
    examples = text.load_labeled_categories(labeled, stopword_set)
    train, held_out = text.holdout_split(examples, holdout_fraction, seed)

    categorizer = text.NaiveBayesCategorizer.train(train)
    report = text.evaluate_text(categorizer, held_out)

    _, kept = relevant_documents(posts, keywords, stopwords, start, end)
    rows = []
    for _, doc in kept:
        category, posterior = categorizer.classify(doc)
        rows.append(
            {
                "post_id": doc.post_id,
                "category": int(category),
                "posterior": float(posterior[int(category)]),
            }
        )
    frame = pd.DataFrame(rows, columns=["post_id", "category", "posterior"])
    if output is not None:
        frame.to_csv(output, index=False, float_format="%.6f", lineterminator="\n")

    proportions = text.category_proportions(frame["category"]) if rows else {}
    result = {
        "evaluation": report.dict(),
        "proportions": {c.display_name: share for c, share in proportions.items()},
    }
    lines = [f"Held-out accuracy {report.accuracy:.3f}, macro F1 {report.macro_f1:.3f}"]
    lines += [f"  {c.display_name}: {share:.3f}" for c, share in proportions.items()]
    emit(result, as_json, "\n".join(lines))


@click.command("sentiment")
@posts_options
@click.option(
    "--lexicon",
    type=existing_file,
    default=util.DEFAULT_LEXICON,
    show_default=True,
    help="Lexicon CSV word,polarity.",
)
@output_option
@json_option
@handle_errors
def sentiment(posts, keywords, stopwords, start, end, lexicon, output, as_json):
    """Label each relevant post positive, neutral or negative by lexicon polarity sums."""
    lexicon_model = text.load_lexicon(lexicon)
    _, kept = relevant_documents(posts, keywords, stopwords, start, end)
    frame = pd.DataFrame(
        [
            {
                "post_id": doc.post_id,
                "score": text.sentiment_score(doc, lexicon_model),
                "sentiment": text.score_sentiment(doc, lexicon_model).value,
            }
            for _, doc in kept
        ],
        columns=["post_id", "score", "sentiment"],
    )
    if output is not None:
        frame.to_csv(output, index=False, lineterminator="\n")

    proportions = text.sentiment_proportions(frame["sentiment"]) if len(frame) else {}
    result = {"proportions": {s.value: share for s, share in proportions.items()}}
    emit(
        result,
        as_json,
        "\n".join(f"{s.value}: {share:.3f}" for s, share in proportions.items()),
    )
