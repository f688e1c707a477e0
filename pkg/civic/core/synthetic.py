"""Deterministic synthetic inputs: posts, name lists, labelled texts, lexicon and block groups."""

from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np
import orjson
import pandas as pd

from .models import CategoryLabel, NameExample
from .utility import write_json

FEMALE_SYLLABLES = ["la", "na", "li", "ni", "ya", "sa", "el", "ia", "ly", "ne", "sy", "le"]
MALE_SYLLABLES = ["bo", "do", "ko", "ru", "to", "mu", "dor", "kur", "bru", "tom"]
# Letter sets are disjoint across labels, so names are separable by letter counts.
RACE_SYLLABLES = {
    "White": ["wel", "son", "nes", "low", "sel", "won", "lew", "ons"],
    "Asian": ["kim", "hai", "mak", "kai", "ham", "mih", "hak", "ima"],
    "Black": ["jub", "rut", "bur", "tur", "jut", "bru", "ubr", "rub"],
    "Hispanic": ["pyz", "gyd", "cyv", "dyz", "zyp", "vyg", "cyd", "gyp"],
}
RACE_SHARES = {"White": 0.55, "Asian": 0.2, "Black": 0.1, "Hispanic": 0.15}

TOPIC_WORDS = {
    CategoryLabel.PUBLIC_TRANSPORT_INFRASTRUCTURE: [
        "station", "platform", "signal", "track", "tunnel",
        "bridge", "repair", "construction", "escalator", "delay",
    ],
    CategoryLabel.SOCIOECONOMIC_DISPARITY: [
        "fare", "rent", "wage", "poverty", "afford",
        "income", "inequality", "eviction", "jobs", "cost",
    ],
    CategoryLabel.ACCESSIBILITY: [
        "wheelchair", "elevator", "ramp", "disabled", "stroller",
        "accessible", "mobility", "curb", "paratransit", "seniors",
    ],
    CategoryLabel.OTHERS: [
        "pizza", "music", "weather", "game", "movie",
        "coffee", "concert", "birthday", "sunset", "weekend",
    ],
}
CATEGORY_WEIGHTS = [0.3, 0.3, 0.2, 0.2]
KEYWORDS = ["subway", "bus", "train", "transit", "mta", "commute", "ferry"]
POSITIVE_WORDS = ["great", "love", "clean", "fast", "happy", "thanks", "reliable", "smooth"]
NEGATIVE_WORDS = ["terrible", "hate", "dirty", "slow", "broken", "crowded", "late", "unsafe"]
STOPWORDS = ["the", "a", "an", "and", "is", "to", "of", "in", "on", "at", "my", "this", "again", "so"]
NOISE = ["https://t.co/x{n}", "&amp;", "{n}", ":)", "<b>wow</b>", "#nyc"]

N_BLOCK_GROUPS = 12
GRID_COLUMNS = 4
CELL = 0.01
ORIGIN = (-74.0, 40.70)
# Per block-group indicator on/off values; block group 0 has none switched on,
# block group k + 1 only indicator k, and the last two have all of them.
INDICATORS = [
    ("percent_unemployed", 2.5, 0.0),
    ("median_income", 85000.0, 42000.0),
    ("disadvantaged", True, False),
    ("agri_loss_pctile", 12.0, 0.0),
    ("building_loss_pctile", 20.0, 0.0),
    ("energy_burden_pctile", 35.0, 0.0),
    ("pm25_pctile", 50.0, 0.0),
    ("diesel_pctile", 95.0, 0.0),
    ("low_income_nonstudent", True, False),
]
START = datetime(2020, 3, 19, tzinfo=timezone.utc)
END = datetime(2022, 5, 15, tzinfo=timezone.utc)


def block_group_geoid(index: int) -> str:
    return f"36061{index:07d}"


def make_name(syllables: list[str], rng: np.random.Generator) -> str:
    parts = rng.choice(syllables, size=int(rng.integers(2, 4)))
    return "".join(parts).capitalize()


def gender_examples(n: int, seed: int = 0) -> list[NameExample]:
    """Balanced, letter-separable Female/Male first names."""
    rng = np.random.default_rng(seed)
    return [
        NameExample(
            name=make_name(FEMALE_SYLLABLES if i % 2 == 0 else MALE_SYLLABLES, rng),
            label="Female" if i % 2 == 0 else "Male",
        )
        for i in range(n)
    ]


def race_examples(n: int, seed: int = 0) -> list[NameExample]:
    """Balanced, letter-separable last names over four race labels."""
    rng = np.random.default_rng(seed)
    races = list(RACE_SYLLABLES)
    return [
        NameExample(
            name=make_name(RACE_SYLLABLES[races[i % 4]], rng),
            label=races[i % 4],
        )
        for i in range(n)
    ]


def topic_text(
    category: CategoryLabel, rng: np.random.Generator, sentiment_word: str = ""
) -> str:
    words = [str(rng.choice(KEYWORDS))]
    words += list(rng.choice(TOPIC_WORDS[category], size=3, replace=False))
    words += list(rng.choice(STOPWORDS, size=2))
    if sentiment_word:
        words.append(sentiment_word)
    rng.shuffle(words)
    if rng.random() < 0.3:
        words.append(str(rng.choice(NOISE)).format(n=int(rng.integers(10, 99))))
    return " ".join(words).capitalize()


def block_group_cell(index: int) -> tuple[float, float]:
    column, row = index % GRID_COLUMNS, index // GRID_COLUMNS
    return ORIGIN[0] + CELL * column, ORIGIN[1] + CELL * row


def block_group_features() -> dict:
    """GeoJSON for the 12 grid cells; cell 0 has a hole and the last cell is a two-part MultiPolygon."""
    features = []
    for index in range(N_BLOCK_GROUPS):
        x0, y0 = block_group_cell(index)
        outer = [[x0, y0], [x0 + CELL, y0], [x0 + CELL, y0 + CELL], [x0, y0 + CELL], [x0, y0]]
        if index == 0:
            a, b = x0 + 0.4 * CELL, x0 + 0.6 * CELL
            c, d = y0 + 0.4 * CELL, y0 + 0.6 * CELL
            geometry = {
                "type": "Polygon",
                "coordinates": [outer, [[a, c], [b, c], [b, d], [a, d], [a, c]]],
            }
        elif index == N_BLOCK_GROUPS - 1:
            mid = x0 + CELL / 2
            geometry = {
                "type": "MultiPolygon",
                "coordinates": [
                    [[[x0, y0], [mid, y0], [mid, y0 + CELL], [x0, y0 + CELL], [x0, y0]]],
                    [[[mid, y0], [x0 + CELL, y0], [x0 + CELL, y0 + CELL], [mid, y0 + CELL], [mid, y0]]],
                ],
            }
        else:
            geometry = {"type": "Polygon", "coordinates": [outer]}
        features.append(
            {
                "type": "Feature",
                "properties": {"GEOID": block_group_geoid(index)},
                "geometry": geometry,
            }
        )
    return {"type": "FeatureCollection", "features": features}


def block_group_attributes() -> pd.DataFrame:
    rows = []
    for index in range(N_BLOCK_GROUPS):
        row = {
            "geoid": block_group_geoid(index),
            "per_capita_income": 30000.0 + 2500.0 * index,
            "poverty_rate": 10.0 + index,
            "mean_travel_time": 30.0 + index,
            "hs_completion": 80.0 + index,
            "traffic_pctile": 60.0 + 3.0 * index,
        }
        for k, (field, on, off) in enumerate(INDICATORS):
            switched_on = index == k + 1 or index >= N_BLOCK_GROUPS - 2
            row[field] = on if switched_on else off
        rows.append(row)
    return pd.DataFrame(rows)


def make_posts(n_posts: int, rng: np.random.Generator) -> list[dict]:
    races = list(RACE_SHARES)
    race_p = list(RACE_SHARES.values())
    span = (END - START).total_seconds()
    posts = []
    for i in range(n_posts):
        female = rng.random() < 0.4
        first = make_name(FEMALE_SYLLABLES if female else MALE_SYLLABLES, rng)
        if rng.random() < 0.1:
            name = first
        else:
            race = races[rng.choice(len(races), p=race_p)]
            name = f"{first} {make_name(RACE_SYLLABLES[race], rng)}"

        weights = np.array(CATEGORY_WEIGHTS)
        if female:
            weights[CategoryLabel.ACCESSIBILITY] *= 1.5
        category = CategoryLabel(int(rng.choice(4, p=weights / weights.sum())))

        draw = rng.random()
        sentiment_word = ""
        if draw < 0.37:
            sentiment_word = str(rng.choice(POSITIVE_WORDS))
        elif draw < 0.64:
            sentiment_word = str(rng.choice(NEGATIVE_WORDS))

        if rng.random() < 0.1:
            text = " ".join(rng.choice(TOPIC_WORDS[CategoryLabel.OTHERS], size=4))
        else:
            text = topic_text(category, rng, sentiment_word)

        if rng.random() < 0.03:
            lon, lat = -74.2, 40.5
        else:
            x0, y0 = block_group_cell(int(rng.integers(N_BLOCK_GROUPS)))
            lon = x0 + CELL * (0.05 + 0.9 * rng.random())
            lat = y0 + CELL * (0.05 + 0.9 * rng.random())

        created = START + timedelta(seconds=int(rng.random() * span))
        posts.append(
            {
                "id": f"p{i:05d}",
                "user_id": f"u{int(rng.integers(1, n_posts)):05d}",
                "name": name,
                "description": "commuter",
                "text": text,
                "lat": round(lat, 6),
                "lon": round(lon, 6),
                "created_at": created.strftime("%Y-%m-%dT%H:%M:%SZ"),
            }
        )
    return posts


def labeled_categories(per_category: int, rng: np.random.Generator) -> pd.DataFrame:
    rows = []
    for category in CategoryLabel:
        for _ in range(per_category):
            rows.append({"text": topic_text(category, rng), "label": int(category)})
    return pd.DataFrame(rows)


FIXTURE_CONFIG = """\
[inputs]
posts = "posts.jsonl"
names_gender = "names_gender.csv"
names_race = "names_race.csv"
polygons = "block_groups.geojson"
attributes = "block_group_attributes.csv"
labeled_categories = "labeled_categories.csv"
keywords = "keywords.txt"
stopwords = "stopwords.txt"
lexicon = "lexicon.csv"

[seeds]
split = {seed}
names = {seed}
lda = {seed}
classify = {seed}

[topics]
k_min = 4
k_max = 4
iterations = 30

[output]
dir = "output"
"""


def _write_csv(df: pd.DataFrame, path: Path):
    df.to_csv(path, index=False, lineterminator="\n")


def make_fixture(directory: Path, seed: int = 0, n_posts: int = 2000) -> dict[str, Path]:
    """
    Writes a complete synthetic pipeline input set and its config.toml to `directory`.

    The post archive also carries one malformed line, one out-of-range latitude and one repeated id.

    Parameters
    ----------
    directory : Path
        Target directory, created if needed.
    seed : int, optional
        Seed of every draw, by default 0.
    n_posts : int, optional
        Number of generated posts, by default 2000.

    Returns
    -------
    dict
        File role -> written path.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    paths = {
        "config": directory / "config.toml",
        "posts": directory / "posts.jsonl",
        "names_gender": directory / "names_gender.csv",
        "names_race": directory / "names_race.csv",
        "polygons": directory / "block_groups.geojson",
        "attributes": directory / "block_group_attributes.csv",
        "labeled_categories": directory / "labeled_categories.csv",
        "keywords": directory / "keywords.txt",
        "stopwords": directory / "stopwords.txt",
        "lexicon": directory / "lexicon.csv",
    }

    posts = make_posts(n_posts, rng)
    bad_latitude = dict(posts[1], id="bad-lat", lat=123.0)
    lines = [orjson.dumps(post) for post in posts]
    lines += [b'{"id": "broken", ', orjson.dumps(bad_latitude), orjson.dumps(posts[0])]
    paths["posts"].write_bytes(b"\n".join(lines) + b"\n")

    _write_csv(
        pd.DataFrame([e.dict() for e in gender_examples(400, seed)]),
        paths["names_gender"],
    )
    _write_csv(
        pd.DataFrame([e.dict() for e in race_examples(400, seed)]),
        paths["names_race"],
    )
    write_json(block_group_features(), paths["polygons"])
    _write_csv(block_group_attributes(), paths["attributes"])
    _write_csv(labeled_categories(60, rng), paths["labeled_categories"])
    paths["keywords"].write_text("\n".join(KEYWORDS) + "\n")
    paths["stopwords"].write_text("\n".join(STOPWORDS) + "\n")
    _write_csv(
        pd.DataFrame(
            [{"word": w, "polarity": 1} for w in POSITIVE_WORDS]
            + [{"word": w, "polarity": -1} for w in NEGATIVE_WORDS]
        ),
        paths["lexicon"],
    )
    paths["config"].write_text(FIXTURE_CONFIG.format(seed=seed))
    return paths
