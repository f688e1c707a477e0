"""Point-in-polygon block-group assignment, attribute joins and model feature derivation."""

import logging
import warnings
from enum import Enum
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from pydantic import BaseModel, PrivateAttr, ValidationError, constr, validator

from .exceptions import (
    ConfigurationError,
    GeocoderError,
    GeoFusionError,
    UnmatchedBlockGroupError,
)
from .models import (
    GEOID_REGEX,
    BlockGroupAttributes,
    CategoryLabel,
    FeatureSpec,
    FusedObservation,
    LogitSpec,
    PostRecord,
    RecordIssue,
    SentimentLabel,
)
from .utility import load_json, read_string_csv

logger = logging.getLogger(__name__)

STAGE = "fuse"
EDGE_TOLERANCE = 1e-12
OBSERVATION_FIELDS = ("female", "race", "sentiment", "category")

Ring = list[tuple[float, float]]


class BlockGroupPolygon(BaseModel):
    """
    One polygon of a block group: the first ring is the outer boundary, later rings are holes.

    Vertices are (longitude, latitude); rings are implicitly closed.
    """

    geoid: constr(regex=GEOID_REGEX)
    rings: list[Ring]
    _edges: list[tuple[np.ndarray, np.ndarray]] = PrivateAttr()
    _bbox: tuple[float, float, float, float] = PrivateAttr()

    @validator("rings")
    def check_rings(cls, v):
        if not v:
            raise ValueError("a polygon needs at least an outer ring")
        closed = []
        for ring in v:
            ring = [(float(x), float(y)) for x, y in ring]
            if len(ring) > 1 and ring[0] == ring[-1]:
                ring = ring[:-1]
            if len(set(ring)) < 3:
                raise ValueError("each ring needs at least 3 distinct vertices")
            closed.append(ring)
        return closed

    def __init__(self, **data):
        super().__init__(**data)
        self._edges = []
        for ring in self.rings:
            start = np.asarray(ring)
            self._edges.append((start, np.roll(start, -1, axis=0)))
        outer = np.asarray(self.rings[0])
        self._bbox = (*outer.min(axis=0), *outer.max(axis=0))

    def in_bbox(self, x: float, y: float) -> bool:
        min_x, min_y, max_x, max_y = self._bbox
        return min_x <= x <= max_x and min_y <= y <= max_y

    def on_boundary(self, x: float, y: float) -> bool:
        """True if the point lies on an edge or vertex of any ring."""
        for a, b in self._edges:
            ab = b - a
            ap = np.array([x, y]) - a
            cross = ab[:, 0] * ap[:, 1] - ab[:, 1] * ap[:, 0]
            dot = (ab * ap).sum(axis=1)
            length_sq = (ab * ab).sum(axis=1)
            scale = np.maximum(length_sq, 1.0)
            on_edge = (
                (np.abs(cross) <= EDGE_TOLERANCE * scale)
                & (dot >= -EDGE_TOLERANCE)
                & (dot <= length_sq + EDGE_TOLERANCE)
            )
            if on_edge.any():
                return True
        return False

    def contains(self, x: float, y: float) -> bool:
        """Even-odd ray casting over all rings (so holes are subtracted); boundary points count as inside."""
        if not self.in_bbox(x, y):
            return False
        if self.on_boundary(x, y):
            return True
        crossings = 0
        for a, b in self._edges:
            straddles = (a[:, 1] > y) != (b[:, 1] > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                x_cross = (b[:, 0] - a[:, 0]) * (y - a[:, 1]) / (
                    b[:, 1] - a[:, 1]
                ) + a[:, 0]
            crossings += int(np.count_nonzero(straddles & (x < x_cross)))
        return crossings % 2 == 1


class CoverageReport(BaseModel):
    """How many posts could be placed in a block group with attributes."""

    n_posts: int
    located: int
    unlocated: int
    unmatched: int
    fused: int
    issues: list[RecordIssue]


def locate(
    lat: float, lon: float, polygons: Sequence[BlockGroupPolygon]
) -> Optional[str]:
    """
    Returns the GEOID of the first polygon containing the point, or None.

    Parameters
    ----------
    lat : float
        Latitude in degrees.
    lon : float
        Longitude in degrees.
    polygons : sequence of BlockGroupPolygon
        Candidate polygons, tested in order.

    Returns
    -------
    str or None
        GEOID of the containing block group.
    """
    for polygon in polygons:
        if polygon.contains(lon, lat):
            return polygon.geoid
    return None


def locate_with_fallback(
    lat: float,
    lon: float,
    polygons: Sequence[BlockGroupPolygon],
    geocoder: Optional[Callable[[float, float], str]] = None,
) -> Optional[str]:
    """Asks the remote geocoder first when one is given and falls back to `locate` on any geocoder error."""
    if geocoder is not None:
        try:
            return geocoder(lat, lon)
        except GeocoderError as exc:
            warnings.warn(
                f"Remote geocoding of ({lat}, {lon}) failed ({exc.detail}). "
                "Falling back to the local block-group polygons."
            )
    return locate(lat, lon, polygons)


def _polygon_parts(geometry: dict) -> list[list[Ring]]:
    geometry_type = geometry.get("type")
    coordinates = geometry.get("coordinates")
    if geometry_type == "Polygon":
        return [coordinates]
    if geometry_type == "MultiPolygon":
        return list(coordinates)
    raise ValueError(f"unsupported geometry type '{geometry_type}'")


def load_polygons(path: Path) -> list[BlockGroupPolygon]:
    """
    Reads block-group polygons from a GeoJSON FeatureCollection.

    Each feature needs properties.GEOID and a Polygon or MultiPolygon geometry;
    every part of a MultiPolygon becomes its own BlockGroupPolygon with the shared GEOID.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"{path}: not found")
    collection = load_json(path)
    if collection.get("type") != "FeatureCollection":
        raise GeoFusionError(f"{path}: expected a GeoJSON FeatureCollection")

    polygons = []
    for index, feature in enumerate(collection.get("features", [])):
        try:
            geoid = str(feature["properties"]["GEOID"])
            for rings in _polygon_parts(feature["geometry"]):
                polygons.append(BlockGroupPolygon(geoid=geoid, rings=rings))
        except (KeyError, TypeError, ValueError) as exc:
            raise GeoFusionError(f"{path}: feature {index}: {exc}") from exc

    logger.info("Loaded %d block-group polygons from %s", len(polygons), path)
    return polygons


def load_attributes(path: Path) -> dict[str, BlockGroupAttributes]:
    """Reads the block-group attribute CSV keyed by geoid; duplicate or invalid rows are load-time errors."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"{path}: not found")
    df = read_string_csv(path, GeoFusionError)

    table = {}
    for row_number, row in enumerate(df.to_dict("records"), start=2):
        try:
            attributes = BlockGroupAttributes.parse_obj(row)
        except ValidationError as exc:
            raise GeoFusionError(f"{path}: line {row_number}: {exc}") from exc
        if attributes.geoid in table:
            raise GeoFusionError(
                f"{path}: duplicate geoid '{attributes.geoid}' on line {row_number}"
            )
        table[attributes.geoid] = attributes
    return table


def join_attributes(
    geoid: str, table: Mapping[str, BlockGroupAttributes]
) -> BlockGroupAttributes:
    """Exact-key lookup of a block group's attributes."""
    try:
        return table[geoid]
    except KeyError as exc:
        raise UnmatchedBlockGroupError(
            f"unmatched block group '{geoid}'"
        ) from exc


def check_recipe(features: Sequence[FeatureSpec]):
    """Raises GeoFusionError if a feature reads a field that neither observations nor attributes have."""
    known = set(OBSERVATION_FIELDS) | set(BlockGroupAttributes.__fields__)
    for feature in features:
        if feature.field not in known:
            raise GeoFusionError(
                f"feature '{feature.name}' references unknown field '{feature.field}'"
            )


def _field_value(obs: FusedObservation, field: str):
    if field in OBSERVATION_FIELDS:
        value = getattr(obs, field)
    else:
        value = getattr(obs.attributes, field)
    if isinstance(value, Enum):
        value = value.value
    return value


def derive_features(
    obs: FusedObservation, recipe: Sequence[FeatureSpec]
) -> dict[str, float]:
    """
    Computes the named design columns of one observation.

    indicator: 1.0 if field > threshold (strict) else 0.0; scaled: field / divisor;
    dummy: 1.0 if str(field) equals level (case-insensitive) else 0.0.
    """
    if obs.attributes is None:
        raise GeoFusionError(f"post '{obs.post_id}' has no block-group attributes")
    check_recipe(recipe)

    values = {}
    for feature in recipe:
        value = _field_value(obs, feature.field)
        if feature.kind == "indicator":
            values[feature.name] = float(float(value) > feature.threshold)
        elif feature.kind == "scaled":
            values[feature.name] = float(value) / feature.divisor
        else:
            values[feature.name] = float(
                str(value).lower() == feature.level.lower()
            )
    return values


def fuse(
    posts: Sequence[PostRecord],
    labels: Mapping[str, tuple[CategoryLabel, SentimentLabel]],
    demographics: Mapping[str, tuple[int, str]],
    polygons: Sequence[BlockGroupPolygon],
    table: Mapping[str, BlockGroupAttributes],
    geocoder: Optional[Callable[[float, float], str]] = None,
) -> tuple[list[FusedObservation], CoverageReport]:
    """
    Joins labelled posts with their demographics and block-group attributes.

    Posts outside every polygon, or located in a block group missing from the attribute table,
    are excluded and counted; the latter also produce a RecordIssue.

    Parameters
    ----------
    posts : sequence of PostRecord
        Posts to place, in output order. Posts without labels are skipped.
    labels : mapping
        post_id -> (category, sentiment).
    demographics : mapping
        post_id -> (female, race).
    polygons : sequence of BlockGroupPolygon
        Block-group geometry.
    table : mapping
        geoid -> BlockGroupAttributes.
    geocoder : callable, optional
        Remote lookup (lat, lon) -> geoid tried before the polygons.

    Returns
    -------
    tuple of (list of FusedObservation, CoverageReport)
    """
    observations = []
    issues = []
    n_posts = located = unlocated = unmatched = 0
    for post in posts:
        if post.post_id not in labels:
            continue
        n_posts += 1
        geoid = locate_with_fallback(
            post.latitude, post.longitude, polygons, geocoder
        )
        if geoid is None:
            unlocated += 1
            continue
        located += 1
        try:
            attributes = join_attributes(geoid, table)
        except UnmatchedBlockGroupError as exc:
            unmatched += 1
            issues.append(
                RecordIssue(stage=STAGE, post_id=post.post_id, message=exc.detail)
            )
            continue

        category, sentiment = labels[post.post_id]
        female, race = demographics[post.post_id]
        observations.append(
            FusedObservation(
                post_id=post.post_id,
                category=category,
                sentiment=sentiment,
                female=female,
                race=race,
                geoid=geoid,
                attributes=attributes,
            )
        )

    if issues:
        warnings.warn(
            f"{len(issues)} located post(s) fell in block groups missing from the attribute table "
            "and were excluded. Check that the polygons and the attribute table cover the same block groups."
        )
    report = CoverageReport(
        n_posts=n_posts,
        located=located,
        unlocated=unlocated,
        unmatched=unmatched,
        fused=len(observations),
        issues=issues,
    )
    logger.info(
        "Fused %d of %d posts (%d outside all block groups, %d unmatched)",
        report.fused,
        n_posts,
        unlocated,
        unmatched,
    )
    return observations, report


def _indicator(name: str, field: str, threshold: float = 0.01) -> FeatureSpec:
    return FeatureSpec(name=name, kind="indicator", field=field, threshold=threshold)


def _dummy(name: str, field: str, level: str) -> FeatureSpec:
    return FeatureSpec(name=name, kind="dummy", field=field, level=level)


FEMALE = _dummy("Female (1=Female, 0= Other)", "female", "1")
WHITE = _dummy("Race: White (1=White, 0=Other)", "race", "white")
ASIAN = _dummy("Race: Asian (1=Asian, 0=Other)", "race", "asian")
NEUTRAL = _dummy("Sentiment: Neutral", "sentiment", "neutral")
NEGATIVE = _dummy("Sentiment: Negative", "sentiment", "negative")
UNEMPLOYED = _indicator(
    "Percent unemployed greater than 0.01(%)", "percent_unemployed"
)
MEDIAN_INCOME = _indicator(
    "Median Income more than 50,000 ($) (1=Yes, 0=No)", "median_income", 50000
)
DISADVANTAGED = _indicator(
    "Identified as disadvantaged (1=Yes, 0=No)", "disadvantaged", 0
)
TRAFFIC = FeatureSpec(
    name="Traffic proximity and volume (percentile)",
    kind="scaled",
    field="traffic_pctile",
    divisor=100,
)
AGRI_LOSS = _indicator(
    "Expected agricultural loss rate greater than 0.01 (Natural Hazards Risk Index) (1=Yes, 0=No)",
    "agri_loss_pctile",
)
BUILDING_LOSS = _indicator(
    "Expected building loss rate greater than 0.01 (Natural Hazards Risk Index) (1=Yes, 0=No)",
    "building_loss_pctile",
)
ENERGY_BURDEN = _indicator(
    "Energy burden greater than 0.01 (percentile) (1=Yes, 0=No)",
    "energy_burden_pctile",
)
PM25 = _indicator("PM2.5 in the air greater than 0.01 (1=Yes, 0=No)", "pm25_pctile")
DIESEL = _indicator(
    "Diesel particulate matter exposure greater than 0.01 (1=Yes, 0=No)",
    "diesel_pctile",
)
LOW_INCOME_NONSTUDENT = _indicator(
    "Is low income and high percentage of residents that are not higher ed students? (1=Yes, 0=No)",
    "low_income_nonstudent",
    0,
)

DEFAULT_LOGIT_SPECS = [
    LogitSpec(
        name="accessibility",
        outcome_name="Transport Accessibility",
        target_category=CategoryLabel.ACCESSIBILITY,
        features=[
            FEMALE,
            WHITE,
            ASIAN,
            NEUTRAL,
            NEGATIVE,
            UNEMPLOYED,
            MEDIAN_INCOME,
            DISADVANTAGED,
            TRAFFIC,
            AGRI_LOSS,
            BUILDING_LOSS,
            ENERGY_BURDEN,
            PM25,
            DIESEL,
            LOW_INCOME_NONSTUDENT,
        ],
    ),
    LogitSpec(
        name="socioeconomic",
        outcome_name="Socioeconomic Disparity",
        target_category=CategoryLabel.SOCIOECONOMIC_DISPARITY,
        features=[
            FEMALE,
            WHITE,
            ASIAN,
            NEUTRAL,
            NEGATIVE,
            UNEMPLOYED,
            MEDIAN_INCOME,
            DISADVANTAGED,
            TRAFFIC,
            AGRI_LOSS,
            BUILDING_LOSS,
            ENERGY_BURDEN,
            PM25,
            DIESEL,
        ],
    ),
    LogitSpec(
        name="infrastructure",
        outcome_name="Public Transport Infrastructure",
        target_category=CategoryLabel.PUBLIC_TRANSPORT_INFRASTRUCTURE,
        features=[
            FEMALE,
            WHITE,
            ASIAN,
            NEUTRAL,
            UNEMPLOYED,
            MEDIAN_INCOME,
            DISADVANTAGED,
            AGRI_LOSS,
            PM25,
            DIESEL,
        ],
    ),
]
