"""Test the command-line interface."""

import orjson
import pandas as pd
import pytest
from click.testing import CliRunner

from civic.core import utility as util
from civic.main import cli


@pytest.fixture()
def runner():
    return CliRunner(mix_stderr=False)


@pytest.fixture()
def posts_args(fixture_dir):
    return [
        str(fixture_dir / "posts.jsonl"),
        "--keywords",
        str(fixture_dir / "keywords.txt"),
        "--stopwords",
        str(fixture_dir / "stopwords.txt"),
    ]


def test_version(runner):
    result = runner.invoke(cli, ["--version"])

    assert result.exit_code == 0
    assert util.VERSION in result.output


def test_ingest_json(runner, posts_args):
    """Test that --json prints the parse and filter counts as JSON."""
    result = runner.invoke(cli, ["ingest", *posts_args, "--json"])

    assert result.exit_code == 0
    summary = orjson.loads(result.stdout)
    assert summary["parsed"] == 2000
    assert summary["rejected"] == 3
    assert 0 < summary["relevant"] < 2000


def test_missing_input_file_is_a_usage_error(runner, tmp_path):
    result = runner.invoke(cli, ["ingest", str(tmp_path / "absent.jsonl")])

    assert result.exit_code == 2


def test_pipeline_missing_polygons_exits_with_config_error(runner, fixture_dir, tmp_path):
    """Test that a configured input that does not exist exits with code 2 and names the field."""
    result = runner.invoke(
        cli,
        [
            "pipeline",
            str(fixture_dir / "config.toml"),
            "--set",
            'inputs.polygons="missing.geojson"',
            "--output-dir",
            str(tmp_path),
        ],
    )

    assert result.exit_code == 2
    assert "polygons: not found" in result.stderr


def test_pipeline_bad_override_exits_with_config_error(runner, fixture_dir, tmp_path):
    result = runner.invoke(
        cli, ["pipeline", str(fixture_dir / "config.toml"), "--set", "topics"]
    )

    assert result.exit_code == 2
    assert "section.key=value" in result.stderr


def test_pipeline_stage_failure_exits_with_code_1(runner, fixture_dir, tmp_path):
    """Test that a failing stage exits with code 1, names the stage and still writes the manifest."""
    result = runner.invoke(
        cli,
        [
            "pipeline",
            str(fixture_dir / "config.toml"),
            "--set",
            "topics.k_min=100000",
            "--set",
            "topics.k_max=100000",
            "--output-dir",
            str(tmp_path),
        ],
    )

    assert result.exit_code == 1
    assert "Error: topics:" in result.stderr
    manifest = orjson.loads((tmp_path / "manifest.json").read_bytes())
    assert manifest["failed_stage"] == "topics"
    assert manifest["completed_stages"] == ["ingest", "filter", "demographics"]


def test_pipeline_empty_lexicon_names_the_stage(runner, fixture_dir, tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")

    result = runner.invoke(
        cli,
        [
            "pipeline",
            str(fixture_dir / "config.toml"),
            "--set",
            f'inputs.lexicon="{empty}"',
            "--output-dir",
            str(tmp_path / "run"),
        ],
    )

    assert result.exit_code == 1
    assert "Error: sentiment:" in result.stderr


def test_demographics_commands(runner, fixture_dir, tmp_path):
    """Test training a name model, then predicting and evaluating with the saved file."""
    model_path = tmp_path / "gender.json"

    trained = runner.invoke(
        cli,
        ["demo-train", str(fixture_dir / "names_gender.csv"), str(model_path), "--cv", "5", "--json"],
    )
    predicted = runner.invoke(cli, ["demo-predict", str(model_path), "Lana", "Bodo", "--json"])
    evaluated = runner.invoke(
        cli, ["demo-evaluate", str(model_path), str(fixture_dir / "names_gender.csv")]
    )

    assert trained.exit_code == 0
    report = orjson.loads(trained.stdout)
    assert report["holdout"]["accuracy"] >= 0.95
    assert len(report["cross_validation"]["fold_scores"]) == 5
    assert [p["label"] for p in orjson.loads(predicted.stdout)] == ["Female", "Male"]
    assert evaluated.exit_code == 0
    assert evaluated.stdout.startswith("accuracy")


def test_topics_command(runner, posts_args, tmp_path):
    result = runner.invoke(
        cli,
        [
            "topics",
            *posts_args,
            "--k-min", "2",
            "--k-max", "3",
            "--iterations", "10",
            "--output-dir", str(tmp_path),
            "--json",
        ],
    )

    assert result.exit_code == 0, result.stderr
    summary = orjson.loads(result.stdout)
    assert summary["K"] in (2, 3)
    assert set(summary["coherence_by_k"]) == {"2", "3"}
    assert len(summary["top_words"]) == summary["K"]
    assert (tmp_path / "topics_top_words.csv").is_file()


@pytest.fixture()
def fit_report(tmp_path):
    path = tmp_path / "fit_access.json"
    path.write_bytes(
        orjson.dumps(
            {
                "outcome_name": "Transport Accessibility",
                "feature_names": ["Constant", "Female"],
                "beta": [-1.25, 0.5],
                "std_errors": [0.1, 0.25],
                "t_stats": [-12.5, 2.0],
                "p_values": [0.0, 0.0455],
                "ll": -100.0,
                "ll_null": -138.629,
                "ll_intercept": -120.0,
                "rho_sq": 0.279,
                "adjusted_rho_sq": 0.264,
                "n_obs": 200,
                "iterations": 5,
                "converged": True,
            }
        )
    )
    return path


def test_report_markdown(runner, fit_report):
    result = runner.invoke(cli, ["report", str(fit_report)])

    assert result.exit_code == 0
    assert result.stdout.startswith("### Transport Accessibility\n")
    assert "| Constant | -1.250 | -12.500 |" in result.stdout


def test_report_json(runner, fit_report):
    result = runner.invoke(cli, ["report", str(fit_report), "--json"])

    assert result.exit_code == 0, result.stderr
    (table,) = orjson.loads(result.stdout)
    assert table["outcome"] == "Transport Accessibility"
    assert table["N"] == 200
    assert [row["variable"] for row in table["rows"]] == ["Constant", "Female"]


def test_make_fixture_json(runner, tmp_path):
    result = runner.invoke(
        cli, ["make-fixture", str(tmp_path / "demo"), "--n-posts", "50", "--json"]
    )

    assert result.exit_code == 0, result.stderr
    paths = orjson.loads(result.stdout)
    assert paths["config"] == str(tmp_path / "demo" / "config.toml")
    assert (tmp_path / "demo" / "posts.jsonl").is_file()


def test_attention_command(runner, tmp_path):
    path = tmp_path / "attention.json"
    path.write_bytes(
        orjson.dumps(
            {
                "Y": [[1.0], [0.0]],
                "heads": [{"W_q": [[1.0]], "W_k": [[1.0]], "W_v": [[1.0]]}],
            }
        )
    )

    result = runner.invoke(cli, ["attention", str(path), "--json"])

    assert result.exit_code == 0
    weights = orjson.loads(result.stdout)["weights"][0]
    assert weights[0] == pytest.approx([0.7311, 0.2689], abs=1e-4)
    assert weights[1] == pytest.approx([0.5, 0.5])


def test_step_by_step_workflow(runner, fixture_dir, posts_args, tmp_path):
    """Test classify, sentiment, fuse, fit and report run one after another on the synthetic inputs."""
    categories = tmp_path / "categories.csv"
    sentiments = tmp_path / "sentiments.csv"
    fused = tmp_path / "fused.json"
    models = tmp_path / "models"

    steps = [
        ["classify", *posts_args, "--labeled", str(fixture_dir / "labeled_categories.csv"), "--output", str(categories)],
        ["sentiment", *posts_args, "--lexicon", str(fixture_dir / "lexicon.csv"), "--output", str(sentiments)],
        ["demo-train", str(fixture_dir / "names_gender.csv"), str(tmp_path / "gender.json")],
        ["demo-train", str(fixture_dir / "names_race.csv"), str(tmp_path / "race.json"), "--task", "race"],
        [
            "fuse",
            str(fixture_dir / "posts.jsonl"),
            "--categories", str(categories),
            "--sentiments", str(sentiments),
            "--gender-model", str(tmp_path / "gender.json"),
            "--race-model", str(tmp_path / "race.json"),
            "--polygons", str(fixture_dir / "block_groups.geojson"),
            "--attributes", str(fixture_dir / "block_group_attributes.csv"),
            "--output", str(fused),
        ],
        ["fit", str(fused), "--output-dir", str(models)],
    ]
    for args in steps:
        result = runner.invoke(cli, args)
        assert result.exit_code == 0, f"{args[0]}: {result.stderr}"

    report = runner.invoke(cli, ["report", str(models / "fit_accessibility.json")])

    assert len(pd.read_csv(categories)) == len(pd.read_csv(sentiments))
    assert len(orjson.loads(fused.read_bytes())) > 1000
    assert report.exit_code == 0
    assert report.stdout.startswith("### Transport Accessibility\n")
    assert "| Constant |" in report.stdout
    assert (models / "model_infrastructure.csv").is_file()
