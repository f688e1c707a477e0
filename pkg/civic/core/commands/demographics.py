from pathlib import Path

import click

from .. import demographics as dem
from ..models import MetricsReport
from .command_factory import (
    emit,
    existing_file,
    handle_errors,
    json_option,
    seed_option,
)

task_option = click.option(
    "--task",
    type=click.Choice(["gender", "race"]),
    default="gender",
    show_default=True,
)


def format_metrics(report: MetricsReport) -> str:
    lines = [
        f"accuracy {report.accuracy:.3f}, macro F1 {report.macro_f1:.3f} "
        f"on {report.n_evaluated} names"
    ]
    for label, metrics in report.per_label.items():
        lines.append(
            f"  {label}: precision {metrics.precision:.3f}, recall {metrics.recall:.3f}, "
            f"F1 {metrics.f1:.3f}, support {metrics.support}"
        )
    if report.oob_accuracy is not None:
        lines.append(f"  out-of-bag accuracy {report.oob_accuracy:.3f}")
    return "\n".join(lines)


@click.command("demo-train")
@click.argument("names", type=existing_file)
@click.argument("model_out", type=click.Path(dir_okay=False, path_type=Path))
@task_option
@click.option(
    "--algorithm",
    type=click.Choice(dem.ALGORITHMS),
    default="naive_bayes",
    show_default=True,
)
@click.option("--train-fraction", type=float, default=0.7, show_default=True)
@click.option(
    "--cv",
    "folds",
    type=int,
    default=None,
    help="Also report pooled k-fold cross-validation with this many folds.",
)
@seed_option
@json_option
@handle_errors
def demo_train(names, model_out, task, algorithm, train_fraction, folds, seed, as_json):
    """Train a name classifier on a name,label CSV and save it as JSON."""
    examples = dem.load_name_examples(names)
    train, test = dem.split_train_test(examples, train_fraction, seed)
    model = dem.train(train, algorithm, seed=seed, task=task)
    dem.save_model(model, model_out)

    report = dem.evaluate(model, test)
    result = {"holdout": report.dict()}
    text = format_metrics(report)
    if folds is not None:
        cv_report = dem.cross_validate(examples, folds, algorithm, seed=seed, task=task)
        result["cross_validation"] = cv_report.dict()
        text += f"\n{folds}-fold cross-validation: " + format_metrics(cv_report)
    emit(result, as_json, text)


@click.command("demo-predict")
@click.argument("model_path", type=existing_file)
@click.argument("names", nargs=-1, required=True)
@json_option
@handle_errors
def demo_predict(model_path, names, as_json):
    """Predict the label of one or more names with a saved model."""
    model = dem.load_model(model_path)
    predictions = []
    for name in names:
        label, score = dem.predict(model, name)
        predictions.append({"name": name, "label": label, "score": score})
    emit(
        predictions,
        as_json,
        "\n".join(f"{p['name']}: {p['label']} ({p['score']:.3f})" for p in predictions),
    )


@click.command("demo-evaluate")
@click.argument("model_path", type=existing_file)
@click.argument("names", type=existing_file)
@json_option
@handle_errors
def demo_evaluate(model_path, names, as_json):
    """Evaluate a saved model on a name,label CSV."""
    model = dem.load_model(model_path)
    report = dem.evaluate(model, dem.load_name_examples(names))
    emit(report.dict(), as_json, format_metrics(report))
