"""Data models."""

import re
import unicodedata
from datetime import datetime, timezone
from enum import Enum, IntEnum
from typing import Literal, Optional

from pydantic import BaseModel, Field, constr, root_validator, validator

LETTERS = "abcdefghijklmnopqrstuvwxyz"
TOKEN_REGEX = re.compile(r"^[a-z]+$")
GEOID_REGEX = r"^\d{12}$"
UNKNOWN = "unknown"


class PostRecord(BaseModel):
    """One geotagged post with author metadata, read from an archived JSONL or CSV export."""

    post_id: constr(strip_whitespace=True, min_length=1) = Field(
        ..., alias="id"
    )
    user_id: str
    display_name: str = Field("", alias="name")
    profile_description: str = Field("", alias="description")
    text: str
    latitude: float = Field(..., alias="lat")
    longitude: float = Field(..., alias="lon")
    timestamp: datetime = Field(..., alias="created_at")

    class Config:
        allow_population_by_field_name = True
        allow_mutation = False

    @validator("display_name", "profile_description", pre=True)
    def convert_missing_text_to_empty(cls, v):
        """CSV exports leave empty cells as NaN/None; treat them as empty strings."""
        if v is None or (isinstance(v, float) and v != v):
            return ""
        return v

    @validator("latitude")
    def check_latitude_range(cls, v):
        if not -90.0 <= v <= 90.0:
            raise ValueError("latitude out of range")
        return v

    @validator("longitude")
    def check_longitude_range(cls, v):
        if not -180.0 <= v <= 180.0:
            raise ValueError("longitude out of range")
        return v

    @validator("timestamp")
    def convert_timestamp_to_utc(cls, v):
        """Naive timestamps are taken to be UTC already; aware ones are converted."""
        if v.tzinfo is None:
            return v.replace(tzinfo=timezone.utc)
        return v.astimezone(timezone.utc)


class TokenizedDoc(BaseModel):
    """Lowercase alphabetic tokens of one post, stopwords removed, in original order."""

    post_id: str
    tokens: list[str]

    @validator("tokens", each_item=True)
    def check_token_alphabet(cls, v):
        if not TOKEN_REGEX.match(v):
            raise ValueError(f"token '{v}' is not lowercase alphabetic")
        return v


class RecordIssue(BaseModel):
    """A tolerated record-level problem, collected instead of aborting a stage."""

    stage: str
    message: str
    line: Optional[int] = None
    post_id: Optional[str] = None


def normalize_name(name: str) -> str:
    """Lowercases a name, folds accents (é -> e) and drops every character outside a-z."""
    folded = unicodedata.normalize("NFKD", name).lower()
    return "".join(ch for ch in folded if ch in LETTERS)


class NameExample(BaseModel):
    """A labelled first or last name used to train a demographic classifier."""

    name: str
    label: str

    @validator("name")
    def check_name_has_letters(cls, v):
        if not normalize_name(v):
            raise ValueError("empty name")
        return v


class LabelMetrics(BaseModel):
    precision: float
    recall: float
    f1: float
    support: int


class MetricsReport(BaseModel):
    """
    Classification metrics for one evaluation.

    The confusion matrix is indexed [truth][predicted] in the order of `labels`.
    """

    labels: list[str]
    accuracy: float
    per_label: dict[str, LabelMetrics]
    confusion: list[list[int]]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    fold_scores: Optional[list[float]] = None
    oob_accuracy: Optional[float] = None

    @property
    def n_evaluated(self) -> int:
        return sum(sum(row) for row in self.confusion)


class CategoryLabel(IntEnum):
    """Topic category of a post; the integer values are the published label ids."""

    PUBLIC_TRANSPORT_INFRASTRUCTURE = 0
    SOCIOECONOMIC_DISPARITY = 1
    ACCESSIBILITY = 2
    OTHERS = 3

    @property
    def display_name(self) -> str:
        return CATEGORY_DISPLAY_NAMES[self]


CATEGORY_DISPLAY_NAMES = {
    CategoryLabel.PUBLIC_TRANSPORT_INFRASTRUCTURE: "Public Transport Infrastructure",
    CategoryLabel.SOCIOECONOMIC_DISPARITY: "Socioeconomic Disparity",
    CategoryLabel.ACCESSIBILITY: "Accessibility",
    CategoryLabel.OTHERS: "Others",
}


class SentimentLabel(str, Enum):
    positive = "positive"
    neutral = "neutral"
    negative = "negative"


class BlockGroupAttributes(BaseModel):
    """Socioeconomic and environmental attributes of one census block group."""

    geoid: constr(regex=GEOID_REGEX)
    per_capita_income: float = Field(..., ge=0)
    median_income: float = Field(..., ge=0)
    percent_unemployed: float = Field(..., ge=0, le=100)
    poverty_rate: float = Field(..., ge=0, le=100)
    mean_travel_time: float = Field(..., ge=0)
    hs_completion: float = Field(..., ge=0, le=100)
    pm25_pctile: float = Field(..., ge=0, le=100)
    diesel_pctile: float = Field(..., ge=0, le=100)
    traffic_pctile: float = Field(..., ge=0, le=100)
    agri_loss_pctile: float = Field(..., ge=0, le=100)
    building_loss_pctile: float = Field(..., ge=0, le=100)
    energy_burden_pctile: float = Field(..., ge=0, le=100)
    disadvantaged: bool
    low_income_nonstudent: bool

    class Config:
        allow_mutation = False


class FusedObservation(BaseModel):
    """A post joined with its inferred demographics, labels and block-group attributes."""

    post_id: str
    category: CategoryLabel
    sentiment: SentimentLabel
    female: Literal[0, 1]
    race: str = UNKNOWN
    geoid: Optional[str] = None
    attributes: Optional[BlockGroupAttributes] = None

    @root_validator(skip_on_failure=True)
    def check_attributes_match_geoid(cls, values):
        attributes = values.get("attributes")
        if attributes is not None and attributes.geoid != values.get(
            "geoid"
        ):
            raise ValueError("attributes must belong to the located geoid")
        return values


class FeatureSpec(BaseModel):
    """
    One design-matrix column derived from a fused observation.

    kind:
    - indicator: 1 if field > threshold (strict), else 0
    - scaled: field / divisor
    - dummy: 1 if field equals level (case-insensitive), else 0
    """

    name: str
    kind: Literal["indicator", "scaled", "dummy"]
    field: str
    threshold: Optional[float] = None
    divisor: Optional[float] = None
    level: Optional[str] = None

    @root_validator(skip_on_failure=True)
    def check_kind_parameters(cls, values):
        kind = values["kind"]
        if kind == "indicator" and values.get("threshold") is None:
            raise ValueError("indicator features need a threshold")
        if kind == "scaled" and not values.get("divisor"):
            raise ValueError("scaled features need a nonzero divisor")
        if kind == "dummy" and values.get("level") is None:
            raise ValueError("dummy features need a level")
        return values


class LogitSpec(BaseModel):
    """A binary logit model: which category is the outcome and which features enter (intercept always added)."""

    name: str
    outcome_name: str
    target_category: CategoryLabel
    features: list[FeatureSpec]

    @validator("features")
    def check_unique_feature_names(cls, v):
        names = [feature.name for feature in v]
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        if "Constant" in names:
            raise ValueError("'Constant' is reserved for the intercept")
        return v

    @property
    def feature_names(self) -> list[str]:
        return ["Constant"] + [feature.name for feature in self.features]
