"""Run configuration: a TOML file validated into pydantic models, with command-line overrides."""

from datetime import datetime
from pathlib import Path
from typing import Optional

import tomli
from pydantic import BaseModel, Field, ValidationError, validator

from . import utility as util
from .demographics import ALGORITHMS, Algorithm
from .exceptions import ConfigurationError
from .geo import DEFAULT_LOGIT_SPECS
from .models import CategoryLabel, FeatureSpec, LogitSpec

INPUT_PATH_FIELDS = (
    "posts",
    "names_gender",
    "names_race",
    "polygons",
    "attributes",
    "keywords",
    "stopwords",
    "lexicon",
    "labeled_categories",
)


class InputsConfig(BaseModel):
    posts: Path
    names_gender: Path
    names_race: Optional[Path] = None
    polygons: Path
    attributes: Path
    labeled_categories: Path
    keywords: Path = util.DEFAULT_KEYWORDS
    stopwords: Path = util.DEFAULT_STOPWORDS
    lexicon: Path = util.DEFAULT_LEXICON
    start: Optional[datetime] = None
    end: Optional[datetime] = None


class SeedsConfig(BaseModel):
    """Every random draw of a run comes from one of these."""

    split: int = 0
    names: int = 0
    lda: int = 0
    classify: int = 0


class DemographicsConfig(BaseModel):
    gender_algorithm: Algorithm = "naive_bayes"
    race_algorithm: Algorithm = "naive_bayes"
    train_fraction: float = Field(0.7, gt=0, lt=1)
    min_score: float = Field(0.0, ge=0, le=1)
    hyperparams: dict[str, float] = {}

    @validator("gender_algorithm", "race_algorithm", pre=True)
    def check_algorithm(cls, v):
        if v not in ALGORITHMS:
            raise ValueError(f"must be one of {', '.join(ALGORITHMS)}")
        return v


class TopicsConfig(BaseModel):
    k_min: int = Field(2, ge=1)
    k_max: int = Field(10, ge=1)
    alpha: float = Field(1.0, gt=0)
    beta: float = Field(0.01, gt=0)
    iterations: int = Field(200, ge=1)
    top_n: int = Field(10, ge=2)
    min_doc_freq: int = Field(1, ge=1)

    @validator("k_max")
    def check_k_range(cls, v, values):
        if "k_min" in values and v < values["k_min"]:
            raise ValueError("must not be smaller than k_min")
        return v


class ClassifyConfig(BaseModel):
    alpha: float = Field(1.0, gt=0)
    holdout_fraction: float = Field(0.3, gt=0, lt=1)


class FusionConfig(BaseModel):
    use_geocoder: bool = False


class ModelConfig(BaseModel):
    outcome_name: str
    target_category: CategoryLabel
    features: list[FeatureSpec]


class OutputConfig(BaseModel):
    dir: Path = Path("output")


class RunConfig(BaseModel):
    """A complete, validated pipeline configuration. Input paths are absolute after loading."""

    inputs: InputsConfig
    seeds: SeedsConfig = SeedsConfig()
    demographics: DemographicsConfig = DemographicsConfig()
    topics: TopicsConfig = TopicsConfig()
    classify: ClassifyConfig = ClassifyConfig()
    fusion: FusionConfig = FusionConfig()
    models: dict[str, ModelConfig] = {}
    output: OutputConfig = OutputConfig()

    @property
    def logit_specs(self) -> list[LogitSpec]:
        """Configured models in file order, or the three default models when none are configured."""
        if not self.models:
            return list(DEFAULT_LOGIT_SPECS)
        return [
            LogitSpec(name=name, **model.dict())
            for name, model in self.models.items()
        ]


def _parse_override_value(raw: str):
    try:
        return tomli.loads(f"value = {raw}")["value"]
    except tomli.TOMLDecodeError:
        return raw


def apply_override(document: dict, assignment: str):
    """Applies one 'section.key=value' assignment; the value is read as TOML, falling back to a plain string."""
    key, sep, raw = assignment.partition("=")
    if not sep or not key.strip():
        raise ConfigurationError(
            f"{assignment}: overrides must look like section.key=value"
        )
    *sections, leaf = [part.strip() for part in key.split(".")]
    node = document
    for section in sections:
        node = node.setdefault(section, {})
        if not isinstance(node, dict):
            raise ConfigurationError(f"{key}: '{section}' is not a section")
    node[leaf] = _parse_override_value(raw.strip())


def _format_validation_error(exc: ValidationError) -> str:
    first = exc.errors()[0]
    location = ".".join(str(loc) for loc in first["loc"] if loc != "__root__")
    return f"{location}: {first['msg']}"


def load_config(
    path: Path,
    overrides: Optional[list[str]] = None,
    output_dir: Optional[Path] = None,
    seed: Optional[int] = None,
) -> RunConfig:
    """
    Loads and validates a run configuration.

    Relative paths resolve against the directory of the config file. Flags win over file values:
    `overrides` are 'section.key=value' assignments, `output_dir` replaces [output] dir and `seed` replaces every seed.

    Parameters
    ----------
    path : Path
        TOML configuration file.
    overrides : list of str, optional
        Assignments applied after reading the file.
    output_dir : Path, optional
        Output directory override.
    seed : int, optional
        Value for every seed.

    Returns
    -------
    RunConfig

    Raises
    ------
    ConfigurationError
        The file is missing or invalid, or an input file does not exist. The message starts with the field name.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config: {path} not found")
    try:
        with open(path, "rb") as f:
            document = tomli.load(f)
    except tomli.TOMLDecodeError as exc:
        raise ConfigurationError(f"config: {exc}") from exc

    for assignment in overrides or []:
        apply_override(document, assignment)
    if seed is not None:
        document["seeds"] = {name: seed for name in SeedsConfig.__fields__}

    try:
        config = RunConfig.parse_obj(document)
    except ValidationError as exc:
        raise ConfigurationError(_format_validation_error(exc)) from exc

    base = path.parent.absolute()
    inputs = config.inputs.copy(
        update={
            name: base / getattr(config.inputs, name)
            for name in INPUT_PATH_FIELDS
            if getattr(config.inputs, name) is not None
        }
    )
    output = OutputConfig(dir=Path(output_dir) if output_dir else base / config.output.dir)
    config = config.copy(update={"inputs": inputs, "output": output})

    check_inputs_exist(config)
    return config


def check_inputs_exist(config: RunConfig):
    """Raises ConfigurationError('<field>: not found') for the first configured input path that does not exist."""
    for name in INPUT_PATH_FIELDS:
        value = getattr(config.inputs, name)
        if value is not None and not value.is_file():
            raise ConfigurationError(f"{name}: not found")
