from pathlib import Path

import click
import pandas as pd

from .. import demographics as dem
from .. import geo
from ..exceptions import ConfigurationError
from ..geocoder import geocoder_from_env
from ..ingest import parse_posts
from ..models import CategoryLabel, SentimentLabel
from ..utility import write_json
from .command_factory import emit, existing_file, handle_errors, json_option


def read_labels(categories: Path, sentiments: Path) -> dict:
    """Joins the classify and sentiment CSV outputs into post_id -> (category, sentiment)."""
    category_frame = pd.read_csv(categories, dtype={"post_id": str})
    sentiment_frame = pd.read_csv(sentiments, dtype={"post_id": str})
    for frame, path, column in (
        (category_frame, categories, "category"),
        (sentiment_frame, sentiments, "sentiment"),
    ):
        if not {"post_id", column}.issubset(frame.columns):
            raise ConfigurationError(f"{path}: expected the columns post_id,{column}")
    merged = category_frame.merge(sentiment_frame, on="post_id", how="inner")
    return {
        row.post_id: (CategoryLabel(int(row.category)), SentimentLabel(row.sentiment))
        for row in merged.itertuples(index=False)
    }


@click.command("fuse")
@click.argument("posts", type=existing_file)
@click.option("--categories", type=existing_file, required=True, help="CSV written by 'civic classify'.")
@click.option("--sentiments", type=existing_file, required=True, help="CSV written by 'civic sentiment'.")
@click.option("--gender-model", type=existing_file, required=True)
@click.option("--race-model", type=existing_file, default=None)
@click.option("--polygons", type=existing_file, required=True, help="GeoJSON block groups.")
@click.option("--attributes", type=existing_file, required=True, help="Block-group attribute CSV.")
@click.option("--min-score", type=float, default=0.0, show_default=True)
@click.option(
    "--use-geocoder",
    is_flag=True,
    help="Ask the geocoder at CIVIC_GEOCODER_URL before the local polygons.",
)
@click.option(
    "--output",
    type=click.Path(dir_okay=False, path_type=Path),
    required=True,
    help="JSON file for the fused observations.",
)
@json_option
@handle_errors
def fuse(
    posts,
    categories,
    sentiments,
    gender_model,
    race_model,
    polygons,
    attributes,
    min_score,
    use_geocoder,
    output,
    as_json,
):
    """Join labelled posts with inferred demographics and block-group attributes."""
    labels = read_labels(categories, sentiments)
    records = [r for r in parse_posts(posts).records if r.post_id in labels]
    gender = dem.load_model(gender_model)
    race = dem.load_model(race_model) if race_model is not None else None
    demographics = {
        r.post_id: dem.infer_demographics(gender, race, r.display_name, min_score)
        for r in records
    }

    observations, coverage = geo.fuse(
        records,
        labels,
        demographics,
        geo.load_polygons(polygons),
        geo.load_attributes(attributes),
        geocoder_from_env() if use_geocoder else None,
    )
    write_json([obs.dict() for obs in observations], output)

    emit(
        coverage.dict(),
        as_json,
        f"Fused {coverage.fused} of {coverage.n_posts} posts "
        f"({coverage.unlocated} outside all block groups, {coverage.unmatched} unmatched).",
    )
