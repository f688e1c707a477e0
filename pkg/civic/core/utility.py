"""Environment variables, shared constants and small file helpers."""

import hashlib
import os
from collections import namedtuple
from pathlib import Path

import orjson
import pandas as pd

from .exceptions import CivicError

VERSION = "0.1.0"

EnvVar = namedtuple("EnvVar", ["name", "val"])

GEOCODER_URL = EnvVar(
    "CIVIC_GEOCODER_URL", os.environ.get("CIVIC_GEOCODER_URL")
)
GEOCODER_TIMEOUT = EnvVar(
    "CIVIC_GEOCODER_TIMEOUT",
    float(os.environ.get("CIVIC_GEOCODER_TIMEOUT", 5.0)),
)
LOG_LEVEL = EnvVar(
    "CIVIC_LOG_LEVEL", os.environ.get("CIVIC_LOG_LEVEL", "WARNING").upper()
)

DEFAULT_VOCAB_DIR = Path(__file__).absolute().parents[2] / "vocab"
DEFAULT_STOPWORDS = DEFAULT_VOCAB_DIR / "stopwords.txt"
DEFAULT_KEYWORDS = DEFAULT_VOCAB_DIR / "keywords.txt"
DEFAULT_LEXICON = DEFAULT_VOCAB_DIR / "sentiment_lexicon.csv"

JSON_OPTIONS = (
    orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY
)


def load_json(path: Path) -> dict:
    """
    Loads a JSON document.

    Parameters
    ----------
    path : Path
        Path to JSON file.
    """
    with open(path, "rb") as f:
        return orjson.loads(f.read())


def dump_json(obj) -> bytes:
    """Serializes an object deterministically (sorted keys, 2-space indent, trailing newline)."""
    return orjson.dumps(obj, option=JSON_OPTIONS) + b"\n"


def write_json(obj, path: Path):
    """Writes an object as deterministic JSON to a file."""
    with open(path, "wb") as f:
        f.write(dump_json(obj))


def file_digest(path: Path) -> str:
    """Returns the SHA-256 hex digest of a file's contents."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def read_string_csv(source, error: type[CivicError]) -> pd.DataFrame:
    """
    Reads a CSV with every column as str and empty cells as "".

    An empty or unparseable file raises `error` naming the source.
    """
    try:
        return pd.read_csv(source, dtype=str, keep_default_na=False)
    except (pd.errors.EmptyDataError, pd.errors.ParserError, UnicodeDecodeError) as exc:
        name = source if isinstance(source, (str, Path)) else "CSV input"
        raise error(f"{name}: unreadable CSV ({exc})") from exc
