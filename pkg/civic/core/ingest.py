"""Reading archived posts, text cleaning, tokenization and keyword relevance filtering."""

import html
import logging
import re
import warnings
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Literal, Optional

import orjson
from pydantic import BaseModel, ValidationError, validator

from .exceptions import ConfigurationError, IngestError
from .models import TOKEN_REGEX, PostRecord, RecordIssue, TokenizedDoc
from .utility import read_string_csv

logger = logging.getLogger(__name__)

STAGE = "ingest"
REQUIRED_FIELDS = [
    "id",
    "user_id",
    "name",
    "description",
    "text",
    "lat",
    "lon",
    "created_at",
]

HTML_TAG_REGEX = re.compile(r"<[^>]*>")
URL_REGEX = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
NON_LETTER_REGEX = re.compile(r"[^A-Za-z\s]")
WHITESPACE_REGEX = re.compile(r"\s+")


class KeywordSet(BaseModel):
    """Lowercase tokens that mark a post as relevant."""

    keywords: frozenset[str]

    @validator("keywords", pre=True)
    def lowercase_keywords(cls, v):
        return frozenset(str(k).strip().lower() for k in v if str(k).strip())

    def __or__(self, other: "KeywordSet") -> "KeywordSet":
        return KeywordSet(keywords=self.keywords | other.keywords)


class ParsedPosts(BaseModel):
    """Records parsed from one archive, in file order, plus the rejected lines."""

    records: list[PostRecord]
    issues: list[RecordIssue]


def _format_validation_error(exc: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(loc) for loc in err['loc'])}: {err['msg']}"
        for err in exc.errors()
    )


def _iter_jsonl_rows(path: Path) -> Iterator[tuple[int, Optional[dict], str]]:
    with open(path, "rb") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                row = orjson.loads(line)
            except orjson.JSONDecodeError as exc:
                yield line_number, None, f"malformed JSON ({exc})"
                continue
            if not isinstance(row, dict):
                yield line_number, None, "malformed line: expected a JSON object"
                continue
            yield line_number, row, ""


def _iter_csv_rows(path: Path) -> Iterator[tuple[int, Optional[dict], str]]:
    df = read_string_csv(path, IngestError)

    missing = [col for col in REQUIRED_FIELDS if col not in df.columns]
    if missing:
        raise IngestError(f"{path}: missing columns {', '.join(missing)}")

    # Line 1 is the header.
    for offset, row in enumerate(df[REQUIRED_FIELDS].to_dict("records")):
        yield offset + 2, row, ""


def parse_posts(
    path: Path, format: Optional[Literal["jsonl", "csv"]] = None
) -> ParsedPosts:
    """
    Parses an archived post export into PostRecords.

    Bad rows do not abort the read: malformed lines, invalid fields (e.g. coordinates out of range)
    and repeated post ids are collected as RecordIssues carrying the line number.

    Parameters
    ----------
    path : Path
        Path to a JSONL or CSV export with the fields id, user_id, name, description, text, lat, lon, created_at.
    format : {"jsonl", "csv"}, optional
        File format, by default inferred from the file suffix.

    Returns
    -------
    ParsedPosts
        The valid records in file order and the collected issues.
    """
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"{path}: not found")
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if format not in ("jsonl", "csv"):
        raise IngestError(f"Unsupported post archive format '{format}'.")

    rows = _iter_jsonl_rows(path) if format == "jsonl" else _iter_csv_rows(path)

    records = []
    issues = []
    seen_ids = set()
    for line_number, row, problem in rows:
        if row is None:
            issues.append(
                RecordIssue(stage=STAGE, line=line_number, message=problem)
            )
            continue
        try:
            record = PostRecord.parse_obj(row)
        except ValidationError as exc:
            issues.append(
                RecordIssue(
                    stage=STAGE,
                    line=line_number,
                    post_id=str(row.get("id")) if row.get("id") else None,
                    message=_format_validation_error(exc),
                )
            )
            continue
        if record.post_id in seen_ids:
            issues.append(
                RecordIssue(
                    stage=STAGE,
                    line=line_number,
                    post_id=record.post_id,
                    message=f"duplicate post_id '{record.post_id}'",
                )
            )
            continue
        seen_ids.add(record.post_id)
        records.append(record)

    if issues:
        warnings.warn(
            f"{len(issues)} record(s) in {path} were rejected and skipped. "
            "See the collected issues (or the run manifest) for line numbers and reasons."
        )
    logger.info("Parsed %d posts from %s", len(records), path)

    return ParsedPosts(records=records, issues=issues)


def filter_by_date(
    records: Iterable[PostRecord],
    start: Optional[datetime] = None,
    end: Optional[datetime] = None,
) -> list[PostRecord]:
    """Keeps records whose timestamp falls in the inclusive [start, end] window; either bound may be omitted."""

    def as_utc(moment: Optional[datetime]) -> Optional[datetime]:
        if moment is None or moment.tzinfo is not None:
            return moment
        return moment.replace(tzinfo=timezone.utc)

    start, end = as_utc(start), as_utc(end)
    if start is not None and end is not None and end < start:
        raise ConfigurationError("end: must not be earlier than start")

    return [
        record
        for record in records
        if (start is None or record.timestamp >= start)
        and (end is None or record.timestamp <= end)
    ]


def clean_text(raw: str) -> str:
    """
    Strips HTML tags, URLs and every character that is not a letter or whitespace
    (emoticons, digits, punctuation), then lowercases and collapses whitespace.
    """
    text = html.unescape(raw)
    text = HTML_TAG_REGEX.sub(" ", text)
    text = URL_REGEX.sub(" ", text)
    text = NON_LETTER_REGEX.sub("", text)
    return WHITESPACE_REGEX.sub(" ", text.lower()).strip()


def tokenize(cleaned: str, stopwords: set[str]) -> list[str]:
    """Splits cleaned text on whitespace and drops stopwords, preserving order."""
    return [
        token
        for token in cleaned.split()
        if TOKEN_REGEX.match(token) and token not in stopwords
    ]


def relevance_filter(doc: TokenizedDoc, keywords: KeywordSet) -> bool:
    """Returns True if any token of the document is a keyword."""
    if not keywords.keywords:
        raise ConfigurationError(
            "keywords: the keyword set is empty, so relevance filtering cannot accept any post"
        )
    return not keywords.keywords.isdisjoint(doc.tokens)


def prepare_documents(
    records: Iterable[PostRecord], stopwords: set[str]
) -> list[TokenizedDoc]:
    """Cleans and tokenizes each record's text, in record order."""
    return [
        TokenizedDoc(
            post_id=record.post_id,
            tokens=tokenize(clean_text(record.text), stopwords),
        )
        for record in records
    ]


def load_token_file(path: Path) -> set[str]:
    """
    Reads a keyword or stopword file: one token per line, UTF-8.
    Blank lines and lines starting with '#' are skipped.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"{path}: not found")
    with open(path, "r", encoding="utf-8") as f:
        return {
            line.strip().lower()
            for line in f
            if line.strip() and not line.lstrip().startswith("#")
        }
