"""Test the descriptive, crosstab and model tables and their renderings."""

import orjson
import pytest

from civic.core import reporting
from civic.core.exceptions import ReportFormatError
from civic.core.models import CategoryLabel, SentimentLabel


@pytest.fixture()
def model_table():
    """The head of the published accessibility model."""
    return reporting.ModelTable(
        outcome_name="Transport Accessibility",
        n_obs=36098,
        ll_full=-4659.241,
        ll_null=-25021.22,
        adjusted_rho_sq=0.8131,
        rows=[
            reporting.ModelRow(variable="Constant", parameter=-3.96214, t_stat=-36.3297),
            reporting.ModelRow(variable="Female (1=Female, 0= Other)", parameter=0.2104, t_stat=4.02),
            reporting.ModelRow(variable="Sentiment: Neutral", parameter=-0.0001, t_stat=-0.0002),
        ],
    )


@pytest.mark.parametrize(
    "count, expected",
    [(13061, 36.182), (31431, 87.071), (2780, 7.701)],
)
def test_categorical_percentages(count, expected):
    """Test that level percentages are 100 * count / N rounded to three decimals."""
    column = ["yes"] * count + ["no"] * (36098 - count)

    table = reporting.categorical_summary(column, variable="Female")
    percentages = {row.level: row.percentage for row in table.rows}

    assert percentages["yes"] == expected
    assert sum(row.count for row in table.rows) == 36098


def test_categorical_levels_by_descending_count():
    table = reporting.categorical_summary(["b", "a", "c", "c", "a"], variable="v")

    assert [row.level for row in table.rows] == ["a", "c", "b"]


def test_descriptive_stats_use_sample_deviation():
    table = reporting.descriptive_stats({"x": [0, 1, 1], "single": [5.0]})
    x, single = table.rows

    assert x.mean == pytest.approx(2 / 3)
    assert x.std_dev == pytest.approx(0.57735, abs=1e-5)
    assert (x.min, x.max) == (0.0, 1.0)
    assert single.std_dev == 0.0


def test_descriptive_stats_reject_empty_column():
    with pytest.raises(ValueError, match="empty"):
        reporting.descriptive_stats({"x": []})


def test_crosstab_counts_are_conserved():
    """Test that the 4 x 3 crosstab margins add up to the number of labelled posts."""
    pairs = [
        (CategoryLabel.ACCESSIBILITY, SentimentLabel.negative),
        (CategoryLabel.ACCESSIBILITY, SentimentLabel.negative),
        (CategoryLabel.OTHERS, SentimentLabel.positive),
        (CategoryLabel.PUBLIC_TRANSPORT_INFRASTRUCTURE, SentimentLabel.neutral),
    ]

    crosstab = reporting.topic_sentiment_crosstab(pairs)

    assert crosstab.column_labels == ["positive", "neutral", "negative"]
    assert crosstab.row_labels[0] == "Public Transport Infrastructure"
    assert crosstab.counts[2] == [0, 0, 2]
    assert crosstab.total == sum(crosstab.column_margins) == 4
    assert crosstab.row_margins == [1, 0, 2, 1]


def test_model_table_markdown(model_table):
    text = reporting.render(model_table, "markdown").decode()

    assert text.startswith("### Transport Accessibility\n")
    assert "| Constant | -3.962 | -36.330 |" in text
    assert "| Number of observations | 36098 |  |" in text
    assert "| Sentiment: Neutral | 0.000 | 0.000 |" in text


def test_model_table_json(model_table):
    document = orjson.loads(reporting.render(model_table, "json"))

    assert document["N"] == 36098
    assert document["LL(full)"] == -4659.241
    assert document["LL(null)"] == -25021.22
    assert document["adjusted_rho_squared"] == 0.813
    assert document["rows"][0] == {"variable": "Constant", "parameter": -3.962, "t-stat": -36.33}
    assert document["unrounded"]["parameter"][0] == -3.96214


def test_model_table_csv_reads_back(model_table):
    """Test that a CSV model table parses back to the same values at three decimals."""
    content = reporting.render(model_table, "csv")

    parsed = reporting.parse_model_table_csv(content, model_table.outcome_name)

    assert content.decode().splitlines()[0] == "variable,parameter,t-stat"
    assert parsed.n_obs == 36098
    assert parsed.adjusted_rho_sq == 0.813
    assert [row.variable for row in parsed.rows] == [row.variable for row in model_table.rows]
    assert parsed.rows[0].parameter == -3.962


def test_parse_model_table_csv_rejects_other_tables():
    with pytest.raises(ReportFormatError):
        reporting.parse_model_table_csv(b"a,b\n1,2\n")
    with pytest.raises(ReportFormatError, match="unreadable CSV"):
        reporting.parse_model_table_csv(b"")


def test_render_is_deterministic(model_table):
    for format in reporting.FORMATS:
        assert reporting.render(model_table, format) == reporting.render(model_table, format)


def test_render_unknown_format(model_table):
    with pytest.raises(ReportFormatError, match="Unknown table format 'html'"):
        reporting.render(model_table, "html")


def test_write_reports(tmp_path, model_table):
    written = reporting.write_reports(
        tmp_path,
        stats=reporting.descriptive_stats({"x": [1, 2]}),
        crosstab=reporting.topic_sentiment_crosstab([]),
        model_tables={"accessibility": model_table},
    )

    assert [path.name for path in written] == [
        "stats.csv",
        "crosstab.csv",
        "model_accessibility.csv",
        "model_accessibility.json",
        "model_accessibility.md",
    ]
    assert (tmp_path / "crosstab.csv").read_text().startswith("category,positive,neutral,negative\n")
