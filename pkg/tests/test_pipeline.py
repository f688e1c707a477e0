"""Test the end-to-end pipeline on the synthetic inputs."""

import orjson
import pytest

from civic.core import synthetic
from civic.core.config import apply_override, load_config
from civic.core.exceptions import ConfigurationError, StageError
from civic.core.pipeline import run_pipeline

MODEL_TABLES = [
    f"model_{name}.{suffix}"
    for name in ("accessibility", "socioeconomic", "infrastructure")
    for suffix in ("csv", "json", "md")
]


@pytest.fixture(scope="module")
def first_run(fixture_dir, tmp_path_factory):
    config = load_config(
        fixture_dir / "config.toml", output_dir=tmp_path_factory.mktemp("run1")
    )
    return config, run_pipeline(config)


def test_pipeline_writes_every_output(first_run):
    config, result = first_run
    output_dir = config.output.dir

    for name in MODEL_TABLES + [
        "manifest.json",
        "stats.csv",
        "categorical.csv",
        "crosstab.csv",
        "classifications.csv",
        "topics_model.json",
        "topics_top_words.csv",
        "fit_accessibility.json",
    ]:
        assert (output_dir / name).is_file(), name
    assert result.manifest.completed_stages == [
        "ingest",
        "filter",
        "demographics",
        "topics",
        "classify",
        "sentiment",
        "fuse",
        "fit",
        "report",
    ]


def test_manifest_counts_are_consistent(first_run):
    """Test that every post is accounted for from parsing to fusion."""
    config, result = first_run
    counts = result.manifest.counts
    manifest = orjson.loads((config.output.dir / "manifest.json").read_bytes())

    assert counts["parsed"] == 2000
    assert counts["rejected"] == 3
    assert counts["filtered"] <= counts["in_date_window"] <= counts["parsed"]
    assert counts["classified"] == counts["filtered"]
    assert counts["located"] + counts["unlocated"] == counts["classified"]
    assert counts["fused"] == counts["located"] - counts["unmatched"]
    assert counts["unmatched"] == 0
    assert result.manifest.issues == {"ingest": 3}
    assert manifest["counts"] == counts
    assert manifest["topics"]["K"] == 4
    assert set(manifest["inputs"]) >= {"posts", "polygons", "attributes"}


def test_pipeline_fits_recover_model_shapes(first_run):
    config, _ = first_run
    sizes = {}
    for name in ("accessibility", "socioeconomic", "infrastructure"):
        fit = orjson.loads((config.output.dir / f"fit_{name}.json").read_bytes())
        assert fit["converged"]
        assert fit["ll_null"] < fit["ll"] < 0
        sizes[name] = len(fit["beta"])

    assert sizes == {"accessibility": 16, "socioeconomic": 15, "infrastructure": 11}


def test_crosstab_total_matches_classified_posts(first_run):
    config, result = first_run
    rows = (config.output.dir / "crosstab.csv").read_text().splitlines()[1:]

    total = sum(int(count) for row in rows for count in row.split(",")[1:])

    assert len(rows) == 4
    assert total == result.manifest.counts["classified"]


def test_rerun_is_byte_identical(first_run, fixture_dir, tmp_path):
    """Test that the same inputs and seeds reproduce every model table and the manifest exactly."""
    config, _ = first_run
    second = load_config(fixture_dir / "config.toml", output_dir=tmp_path)

    run_pipeline(second)

    for name in MODEL_TABLES + ["manifest.json", "topics_top_words.csv"]:
        assert (tmp_path / name).read_bytes() == (config.output.dir / name).read_bytes(), name


def test_load_config_resolves_paths_and_seed(fixture_dir):
    config = load_config(fixture_dir / "config.toml", seed=9)

    assert config.inputs.posts == (fixture_dir / "posts.jsonl").absolute()
    assert config.output.dir == (fixture_dir / "output").absolute()
    assert set(config.seeds.dict().values()) == {9}
    assert [spec.name for spec in config.logit_specs] == [
        "accessibility",
        "socioeconomic",
        "infrastructure",
    ]


def test_load_config_rejects_invalid_value(fixture_dir):
    with pytest.raises(ConfigurationError, match="train_fraction"):
        load_config(
            fixture_dir / "config.toml", ["demographics.train_fraction=1.5"]
        )


def test_load_config_rejects_inverted_topic_range(fixture_dir):
    with pytest.raises(ConfigurationError, match="k_max"):
        load_config(fixture_dir / "config.toml", ["topics.k_min=5", "topics.k_max=3"])


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigurationError, match="not found"):
        load_config(tmp_path / "config.toml")


@pytest.mark.parametrize(
    "assignment, expected",
    [
        ("topics.k_min=3", {"topics": {"k_min": 3}}),
        ("fusion.use_geocoder=true", {"fusion": {"use_geocoder": True}}),
        ("output.dir=results", {"output": {"dir": "results"}}),
    ],
)
def test_apply_override(assignment, expected):
    document = {}

    apply_override(document, assignment)

    assert document == expected


def test_configured_models_replace_defaults(tmp_path):
    """Test that [models.<name>] sections replace the three default models."""
    paths = synthetic.make_fixture(tmp_path, n_posts=300)
    with open(paths["config"], "a") as f:
        f.write(
            "\n[models.access]\n"
            'outcome_name = "Transport Accessibility"\n'
            "target_category = 2\n"
            "features = [\n"
            '  { name = "Female", kind = "dummy", field = "female", level = "1" },\n'
            '  { name = "Traffic", kind = "scaled", field = "traffic_pctile", divisor = 100 },\n'
            "]\n"
        )

    config = load_config(paths["config"])

    assert [spec.name for spec in config.logit_specs] == ["access"]
    assert config.logit_specs[0].feature_names == ["Constant", "Female", "Traffic"]


def test_unreadable_input_fails_the_stage_that_reads_it(fixture_dir, tmp_path):
    """Test that an empty lexicon file fails the sentiment stage by name and is recorded in the manifest."""
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    config = load_config(
        fixture_dir / "config.toml",
        [f'inputs.lexicon="{empty}"'],
        output_dir=tmp_path / "run",
    )

    with pytest.raises(StageError, match="^sentiment: .*unreadable CSV"):
        run_pipeline(config)

    manifest = orjson.loads((tmp_path / "run" / "manifest.json").read_bytes())
    assert manifest["failed_stage"] == "sentiment"
    assert manifest["completed_stages"][-1] == "classify"
