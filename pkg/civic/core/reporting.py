"""Descriptive statistics, crosstab and model tables rendered as CSV, JSON or Markdown."""

import io
from collections import Counter
from pathlib import Path
from typing import Iterable, Literal, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, validator

from .choice import LogitFit
from .exceptions import ReportFormatError
from .models import CategoryLabel, SentimentLabel
from .utility import dump_json, read_string_csv

Format = Literal["csv", "json", "markdown"]
FORMATS = ("csv", "json", "markdown")
SUFFIXES = {"csv": "csv", "json": "json", "markdown": "md"}

N_ROW = "Number of observations"
LL_FULL_ROW = "Log-likelihood value of full model"
LL_NULL_ROW = "Log-likelihood value of null model"
RHO_ROW = "Adjusted Rho-squared value against null model"
MODEL_COLUMNS = ["variable", "parameter", "t-stat"]


def fmt3(value: float) -> str:
    """Fixed 3-decimal formatting; negative zero prints as 0.000."""
    text = f"{value:.3f}"
    return "0.000" if text == "-0.000" else text


class StatRow(BaseModel):
    variable: str
    mean: float
    std_dev: float
    min: float
    max: float


class StatTable(BaseModel):
    """Mean, sample standard deviation, minimum and maximum per variable."""

    rows: list[StatRow]

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                [r.variable, fmt3(r.mean), fmt3(r.std_dev), fmt3(r.min), fmt3(r.max)]
                for r in self.rows
            ],
            columns=["variable", "mean", "std_dev", "min", "max"],
        )

    def json_obj(self) -> dict:
        return {"rows": [row.dict() for row in self.rows]}


class CategoryRow(BaseModel):
    variable: str
    level: str
    count: int
    percentage: float


class CategoricalTable(BaseModel):
    """Level counts and percentages (3 decimals) of categorical variables."""

    rows: list[CategoryRow]

    def __add__(self, other: "CategoricalTable") -> "CategoricalTable":
        return CategoricalTable(rows=self.rows + other.rows)

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                [r.variable, r.level, str(r.count), fmt3(r.percentage)]
                for r in self.rows
            ],
            columns=["variable", "level", "count", "percentage"],
        )

    def json_obj(self) -> dict:
        return {"rows": [row.dict() for row in self.rows]}


class CrossTab(BaseModel):
    """Counts of posts per (category, sentiment); rows follow CategoryLabel order, columns SentimentLabel order."""

    row_labels: list[str]
    column_labels: list[str]
    counts: list[list[int]]

    @validator("counts")
    def check_nonnegative(cls, v):
        if any(count < 0 for row in v for count in row):
            raise ValueError("counts must be non-negative")
        return v

    @property
    def row_margins(self) -> list[int]:
        return [sum(row) for row in self.counts]

    @property
    def column_margins(self) -> list[int]:
        return [sum(column) for column in zip(*self.counts)]

    @property
    def total(self) -> int:
        return sum(self.row_margins)

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [[label] + [str(c) for c in row] for label, row in zip(self.row_labels, self.counts)],
            columns=["category"] + self.column_labels,
        )

    def json_obj(self) -> dict:
        return {
            "row_labels": self.row_labels,
            "column_labels": self.column_labels,
            "counts": self.counts,
            "total": self.total,
        }


class ModelRow(BaseModel):
    variable: str
    parameter: float
    t_stat: float


class ModelTable(BaseModel):
    """A fitted binary logit laid out as the published model table: fit header then one row per coefficient."""

    outcome_name: str
    n_obs: int
    ll_full: float
    ll_null: float
    adjusted_rho_sq: float
    rows: list[ModelRow]

    @classmethod
    def from_fit(cls, fit: LogitFit) -> "ModelTable":
        return cls(
            outcome_name=fit.outcome_name,
            n_obs=fit.n_obs,
            ll_full=fit.ll,
            ll_null=fit.ll_null,
            adjusted_rho_sq=fit.adjusted_rho_sq,
            rows=[
                ModelRow(variable=name, parameter=beta, t_stat=t)
                for name, beta, t in zip(fit.feature_names, fit.beta, fit.t_stats)
            ],
        )

    def frame(self) -> pd.DataFrame:
        header = [
            [N_ROW, str(self.n_obs), ""],
            [LL_FULL_ROW, fmt3(self.ll_full), ""],
            [LL_NULL_ROW, fmt3(self.ll_null), ""],
            [RHO_ROW, fmt3(self.adjusted_rho_sq), ""],
        ]
        body = [[r.variable, fmt3(r.parameter), fmt3(r.t_stat)] for r in self.rows]
        return pd.DataFrame(header + body, columns=MODEL_COLUMNS)

    def json_obj(self) -> dict:
        return {
            "outcome": self.outcome_name,
            "N": self.n_obs,
            "LL(full)": round(self.ll_full, 3),
            "LL(null)": round(self.ll_null, 3),
            "adjusted_rho_squared": round(self.adjusted_rho_sq, 3),
            "rows": [
                {
                    "variable": r.variable,
                    "parameter": round(r.parameter, 3),
                    "t-stat": round(r.t_stat, 3),
                }
                for r in self.rows
            ],
            "unrounded": {
                "LL(full)": self.ll_full,
                "LL(null)": self.ll_null,
                "adjusted_rho_squared": self.adjusted_rho_sq,
                "parameter": [r.parameter for r in self.rows],
                "t-stat": [r.t_stat for r in self.rows],
            },
        }


Table = Union[StatTable, CategoricalTable, CrossTab, ModelTable]


def descriptive_stats(columns: Mapping[str, Sequence[float]]) -> StatTable:
    """
    Per-column mean, sample standard deviation (N - 1 denominator), minimum and maximum.

    A single-value column has standard deviation 0.
    """
    rows = []
    for variable, values in columns.items():
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            raise ValueError(f"column '{variable}' is empty")
        std_dev = float(values.std(ddof=1)) if values.size > 1 else 0.0
        rows.append(
            StatRow(
                variable=variable,
                mean=float(values.mean()),
                std_dev=std_dev,
                min=float(values.min()),
                max=float(values.max()),
            )
        )
    return StatTable(rows=rows)


def categorical_summary(column: Iterable, variable: str = "") -> CategoricalTable:
    """
    Counts each level and its percentage 100 * count / N rounded to 3 decimals.

    Levels are ordered by descending count, then by level name.
    """
    counts = Counter(str(value) for value in column)
    total = sum(counts.values())
    if total == 0:
        raise ValueError("cannot summarise an empty column")
    ordered = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return CategoricalTable(
        rows=[
            CategoryRow(
                variable=variable,
                level=level,
                count=count,
                percentage=round(100 * count / total, 3),
            )
            for level, count in ordered
        ]
    )


def topic_sentiment_crosstab(
    labels: Iterable[tuple[CategoryLabel, SentimentLabel]]
) -> CrossTab:
    """4 x 3 counts of (category, sentiment) pairs in fixed order: categories 0-3 by positive, neutral, negative."""
    categories = list(CategoryLabel)
    sentiments = list(SentimentLabel)
    counts = np.zeros((len(categories), len(sentiments)), dtype=np.int64)
    for category, sentiment in labels:
        counts[
            categories.index(CategoryLabel(category)),
            sentiments.index(SentimentLabel(sentiment)),
        ] += 1
    return CrossTab(
        row_labels=[c.display_name for c in categories],
        column_labels=[s.value for s in sentiments],
        counts=counts.tolist(),
    )


def _markdown(frame: pd.DataFrame) -> str:
    lines = [
        "| " + " | ".join(frame.columns) + " |",
        "|" + "|".join(" --- " for _ in frame.columns) + "|",
    ]
    lines += ["| " + " | ".join(row) + " |" for row in frame.itertuples(index=False)]
    return "\n".join(lines) + "\n"


def render(table: Table, format: Format) -> bytes:
    """
    Renders a table deterministically.

    Parameters
    ----------
    table : StatTable, CategoricalTable, CrossTab or ModelTable
        Table to render.
    format : {"csv", "json", "markdown"}
        Output format.

    Returns
    -------
    bytes
        UTF-8 text with numbers at 3 decimals (JSON additionally keeps unrounded values where they exist).
    """
    if format == "csv":
        return table.frame().to_csv(index=False, lineterminator="\n").encode()
    if format == "json":
        return dump_json(table.json_obj())
    if format == "markdown":
        text = _markdown(table.frame())
        if isinstance(table, ModelTable):
            text = f"### {table.outcome_name}\n\n" + text
        return text.encode()
    raise ReportFormatError(
        f"Unknown table format '{format}'. Choose one of {', '.join(FORMATS)}."
    )


def parse_model_table_csv(content: bytes, outcome_name: str = "") -> ModelTable:
    """Reads a model table back from its CSV rendering."""
    df = read_string_csv(io.BytesIO(content), ReportFormatError)
    if list(df.columns) != MODEL_COLUMNS:
        raise ReportFormatError(
            f"a model table CSV needs the columns {', '.join(MODEL_COLUMNS)}"
        )
    header = dict(zip(df["variable"][:4], df["parameter"][:4]))
    try:
        return ModelTable(
            outcome_name=outcome_name,
            n_obs=int(header[N_ROW]),
            ll_full=float(header[LL_FULL_ROW]),
            ll_null=float(header[LL_NULL_ROW]),
            adjusted_rho_sq=float(header[RHO_ROW]),
            rows=[
                ModelRow(variable=v, parameter=float(p), t_stat=float(t))
                for v, p, t in df.iloc[4:].itertuples(index=False)
            ],
        )
    except KeyError as exc:
        raise ReportFormatError(f"the model table CSV lacks the {exc} row") from exc


def classifications_frame(
    post_ids: Sequence[str],
    categories: Sequence[CategoryLabel],
    posteriors: Sequence[float],
    sentiments: Sequence[SentimentLabel],
) -> pd.DataFrame:
    """Per-post output: post_id, category id, posterior of that category, sentiment."""
    return pd.DataFrame(
        {
            "post_id": list(post_ids),
            "category": [int(c) for c in categories],
            "posterior": list(posteriors),
            "sentiment": [SentimentLabel(s).value for s in sentiments],
        }
    )


def write_reports(
    output_dir: Path,
    stats: Optional[StatTable] = None,
    categorical: Optional[CategoricalTable] = None,
    crosstab: Optional[CrossTab] = None,
    model_tables: Optional[Mapping[str, ModelTable]] = None,
    classifications: Optional[pd.DataFrame] = None,
) -> list[Path]:
    """
    Writes stats.csv, categorical.csv, crosstab.csv, classifications.csv and model_<name>.{csv,json,md}
    for whichever tables are given; returns the written paths in order.
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    written = []

    def write(name: str, content: bytes):
        path = output_dir / name
        path.write_bytes(content)
        written.append(path)

    if stats is not None:
        write("stats.csv", render(stats, "csv"))
    if categorical is not None:
        write("categorical.csv", render(categorical, "csv"))
    if crosstab is not None:
        write("crosstab.csv", render(crosstab, "csv"))
    if classifications is not None:
        write(
            "classifications.csv",
            classifications.to_csv(
                index=False, float_format="%.6f", lineterminator="\n"
            ).encode(),
        )
    for name, table in (model_tables or {}).items():
        for format in FORMATS:
            write(f"model_{name}.{SUFFIXES[format]}", render(table, format))
    return written
