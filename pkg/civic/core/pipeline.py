"""Runs every stage from archived posts to model tables and records a manifest of the run."""

import logging
import platform
from collections import Counter
from contextlib import contextmanager
from importlib import metadata
from pathlib import Path
from typing import Any

from pydantic import BaseModel

from . import classify
from . import demographics as dem
from . import geo, reporting, topics
from .choice import fit_models
from .config import INPUT_PATH_FIELDS, RunConfig
from .exceptions import CivicError, ConfigurationError, StageError
from .geocoder import geocoder_from_env
from .ingest import (
    KeywordSet,
    filter_by_date,
    load_token_file,
    parse_posts,
    prepare_documents,
    relevance_filter,
)
from .models import CATEGORY_DISPLAY_NAMES, CategoryLabel, RecordIssue, SentimentLabel
from .utility import VERSION, file_digest, write_json

logger = logging.getLogger(__name__)

LIBRARIES = (
    "numpy",
    "pandas",
    "scipy",
    "scikit-learn",
    "pydantic",
    "orjson",
    "httpx",
    "click",
    "tomli",
)


class Manifest(BaseModel):
    """Everything needed to reproduce and audit a run; contains no timestamps."""

    package_version: str
    python_version: str
    libraries: dict[str, str]
    seeds: dict[str, int]
    inputs: dict[str, str]
    counts: dict[str, int]
    issues: dict[str, int]
    name_metrics: dict[str, float] = {}
    topics: dict[str, Any] = {}
    text_metrics: dict[str, float] = {}
    completed_stages: list[str] = []
    failed_stage: str = ""


class PipelineResult(BaseModel):
    manifest: Manifest
    written: list[Path]


def library_versions() -> dict[str, str]:
    versions = {}
    for name in LIBRARIES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "not installed"
    return versions


def input_digests(config: RunConfig) -> dict[str, str]:
    """SHA-256 of every configured input file, keyed by field name."""
    return {
        name: file_digest(getattr(config.inputs, name))
        for name in INPUT_PATH_FIELDS
        if getattr(config.inputs, name) is not None
    }


@contextmanager
def stage(name: str, manifest: Manifest):
    """
    Records `name` as the failed stage for any exception raised inside it.

    Library, value and file errors are re-raised as a StageError; configuration errors pass through.
    """
    logger.info("Stage %s started", name)
    try:
        yield
    except ConfigurationError:
        manifest.failed_stage = name
        raise
    except CivicError as exc:
        manifest.failed_stage = name
        raise StageError(name, exc.detail) from exc
    except (ValueError, OSError) as exc:
        manifest.failed_stage = name
        raise StageError(name, str(exc)) from exc
    except BaseException:
        manifest.failed_stage = name
        raise
    manifest.completed_stages.append(name)


def _train_name_model(path: Path, algorithm, task, config: RunConfig, metrics: dict):
    examples = dem.load_name_examples(path)
    train, test = dem.split_train_test(
        examples, config.demographics.train_fraction, config.seeds.split
    )
    hyperparams = config.demographics.hyperparams or None
    model = dem.train(
        train, algorithm, hyperparams, seed=config.seeds.names, task=task
    )
    report = dem.evaluate(model, test)
    metrics[f"{task}_accuracy"] = report.accuracy
    metrics[f"{task}_macro_f1"] = report.macro_f1
    return model


def stats_columns(observations: list) -> dict[str, list[float]]:
    """Columns of the descriptive statistics table computed over fused observations."""
    attributes = [obs.attributes for obs in observations]
    columns = {
        CATEGORY_DISPLAY_NAMES[CategoryLabel.PUBLIC_TRANSPORT_INFRASTRUCTURE]: [
            float(obs.category == CategoryLabel.PUBLIC_TRANSPORT_INFRASTRUCTURE)
            for obs in observations
        ],
        CATEGORY_DISPLAY_NAMES[CategoryLabel.SOCIOECONOMIC_DISPARITY]: [
            float(obs.category == CategoryLabel.SOCIOECONOMIC_DISPARITY)
            for obs in observations
        ],
        "Transport Accessibility": [
            float(obs.category == CategoryLabel.ACCESSIBILITY) for obs in observations
        ],
    }
    for sentiment in SentimentLabel:
        columns[f"{sentiment.value.capitalize()} Sentiment"] = [
            float(obs.sentiment == sentiment) for obs in observations
        ]
    columns.update(
        {
            "Percent unemployed": [a.percent_unemployed for a in attributes],
            "Median income": [a.median_income for a in attributes],
            "Identified as disadvantaged": [float(a.disadvantaged) for a in attributes],
            "Expected agricultural loss rate (percentile)": [
                a.agri_loss_pctile for a in attributes
            ],
            "Expected building loss rate (percentile)": [
                a.building_loss_pctile for a in attributes
            ],
            "Energy burden (percentile)": [a.energy_burden_pctile for a in attributes],
            "PM2.5 in the air (percentile)": [a.pm25_pctile for a in attributes],
            "Diesel particulate matter exposure (percentile)": [
                a.diesel_pctile for a in attributes
            ],
            "Traffic proximity and volume (percentile)": [
                a.traffic_pctile for a in attributes
            ],
            "Is low income and high percent of residents that are not higher ed students?": [
                float(a.low_income_nonstudent) for a in attributes
            ],
        }
    )
    return columns


def run_pipeline(config: RunConfig) -> PipelineResult:
    """
    Runs ingest, filter, demographics, topics, classify, sentiment, fuse, fit and report in order.

    Outputs are written to config.output.dir as each stage finishes, so a failing stage leaves
    the earlier outputs in place; manifest.json is written in every case.

    Parameters
    ----------
    config : RunConfig
        Validated configuration.

    Returns
    -------
    PipelineResult
        The manifest and the written report files.

    Raises
    ------
    StageError
        A stage failed; the message starts with the stage name.
    ConfigurationError
        An input turned out to be unusable as configured.
    """
    output_dir = config.output.dir
    output_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(
        package_version=VERSION,
        python_version=platform.python_version(),
        libraries=library_versions(),
        seeds=config.seeds.dict(),
        inputs=input_digests(config),
        counts={},
        issues={},
    )
    counts = manifest.counts
    issues: list[RecordIssue] = []
    written: list[Path] = []

    try:
        with stage("ingest", manifest):
            parsed = parse_posts(config.inputs.posts)
            issues += parsed.issues
            counts["parsed"] = len(parsed.records)
            counts["rejected"] = len(parsed.issues)

        with stage("filter", manifest):
            records = filter_by_date(
                parsed.records, config.inputs.start, config.inputs.end
            )
            counts["in_date_window"] = len(records)
            stopwords = load_token_file(config.inputs.stopwords)
            keywords = KeywordSet(keywords=load_token_file(config.inputs.keywords))
            docs = prepare_documents(records, stopwords)
            kept = [
                (record, doc)
                for record, doc in zip(records, docs)
                if relevance_filter(doc, keywords)
            ]
            records = [record for record, _ in kept]
            docs = [doc for _, doc in kept]
            counts["filtered"] = len(records)

        with stage("demographics", manifest):
            gender_model = _train_name_model(
                config.inputs.names_gender,
                config.demographics.gender_algorithm,
                "gender",
                config,
                manifest.name_metrics,
            )
            race_model = None
            if config.inputs.names_race is not None:
                race_model = _train_name_model(
                    config.inputs.names_race,
                    config.demographics.race_algorithm,
                    "race",
                    config,
                    manifest.name_metrics,
                )
            demographics = {
                record.post_id: dem.infer_demographics(
                    gender_model,
                    race_model,
                    record.display_name,
                    config.demographics.min_score,
                )
                for record in records
            }
            counts["female"] = sum(female for female, _ in demographics.values())
            counts["race_unknown"] = sum(
                race == "unknown" for _, race in demographics.values()
            )

        with stage("topics", manifest):
            corpus = topics.build_corpus(docs, config.topics.min_doc_freq)
            settings = config.topics
            if settings.k_min == settings.k_max:
                best_k, scores = settings.k_min, []
            else:
                best_k, scores = topics.select_k(
                    corpus,
                    settings.k_min,
                    settings.k_max,
                    settings.alpha,
                    settings.beta,
                    settings.iterations,
                    config.seeds.lda,
                    settings.top_n,
                )
            lda = topics.fit_lda(
                corpus,
                best_k,
                settings.alpha,
                settings.beta,
                settings.iterations,
                config.seeds.lda,
            )
            score = topics.coherence(lda, corpus, settings.top_n)
            manifest.topics = {
                "K": best_k,
                "coherence": score.value,
                "coherence_by_k": {str(k): value for k, value in scores},
            }
            counts["corpus_documents"] = len(corpus.docs)
            counts["vocabulary"] = len(corpus.vocabulary)
            write_json(topics.dump_model(lda), output_dir / "topics_model.json")
            topics.top_words_frame(lda, settings.top_n).to_csv(
                output_dir / "topics_top_words.csv",
                index=False,
                float_format="%.6f",
                lineterminator="\n",
            )
            written += [output_dir / "topics_model.json", output_dir / "topics_top_words.csv"]

        with stage("classify", manifest):
            labeled = classify.load_labeled_categories(
                config.inputs.labeled_categories, stopwords
            )
            train, held_out = classify.holdout_split(
                labeled, config.classify.holdout_fraction, config.seeds.classify
            )
            categorizer = classify.NaiveBayesCategorizer.train(train, config.classify.alpha)
            text_report = classify.evaluate_text(categorizer, held_out)
            manifest.text_metrics = {
                "accuracy": text_report.accuracy,
                "macro_precision": text_report.macro_precision,
                "macro_recall": text_report.macro_recall,
                "macro_f1": text_report.macro_f1,
            }
            classified = [categorizer.classify(doc) for doc in docs]
            counts["classified"] = len(classified)

        with stage("sentiment", manifest):
            lexicon = classify.load_lexicon(config.inputs.lexicon)
            sentiments = [classify.score_sentiment(doc, lexicon) for doc in docs]

        with stage("fuse", manifest):
            polygons = geo.load_polygons(config.inputs.polygons)
            table = geo.load_attributes(config.inputs.attributes)
            geocoder = geocoder_from_env() if config.fusion.use_geocoder else None
            labels = {
                doc.post_id: (category, sentiment)
                for doc, (category, _), sentiment in zip(docs, classified, sentiments)
            }
            observations, coverage = geo.fuse(
                records, labels, demographics, polygons, table, geocoder
            )
            issues += coverage.issues
            counts["located"] = coverage.located
            counts["unlocated"] = coverage.unlocated
            counts["unmatched"] = coverage.unmatched
            counts["fused"] = coverage.fused

        with stage("fit", manifest):
            fits = fit_models(observations, config.logit_specs)
            for name, result in fits.items():
                write_json(result.dict(), output_dir / f"fit_{name}.json")
                written.append(output_dir / f"fit_{name}.json")

        with stage("report", manifest):
            gender = reporting.categorical_summary(
                ("Female" if obs.female else "Other" for obs in observations), "Gender"
            )
            race = reporting.categorical_summary(
                (obs.race.capitalize() for obs in observations), "Race"
            )
            written += reporting.write_reports(
                output_dir,
                stats=reporting.descriptive_stats(stats_columns(observations)),
                categorical=gender + race,
                crosstab=reporting.topic_sentiment_crosstab(
                    (category, sentiment)
                    for (category, _), sentiment in zip(classified, sentiments)
                ),
                model_tables={
                    name: reporting.ModelTable.from_fit(result)
                    for name, result in fits.items()
                },
                classifications=reporting.classifications_frame(
                    [doc.post_id for doc in docs],
                    [category for category, _ in classified],
                    [float(posterior[int(category)]) for category, posterior in classified],
                    sentiments,
                ),
            )
    finally:
        manifest.issues = dict(sorted(Counter(issue.stage for issue in issues).items()))
        write_json(manifest.dict(), output_dir / "manifest.json")

    return PipelineResult(manifest=manifest, written=written)
