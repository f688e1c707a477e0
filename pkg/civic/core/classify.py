"""Topic categorization of posts (multinomial naive Bayes) and lexicon-based sentiment."""

import logging
from collections import Counter
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np
from pydantic import BaseModel, validator

from .exceptions import ClassifierError, ConfigurationError
from .ingest import clean_text, tokenize
from .metrics import build_metrics_report
from .models import CategoryLabel, MetricsReport, SentimentLabel, TokenizedDoc
from .utility import read_string_csv

logger = logging.getLogger(__name__)

CATEGORY_LABELS = [str(int(category)) for category in CategoryLabel]


class TextModel(BaseModel):
    """
    Multinomial naive Bayes over the training vocabulary.

    log_likelihoods has one row per category (in CategoryLabel order) and one column per vocabulary word.
    """

    log_priors: np.ndarray
    log_likelihoods: np.ndarray
    vocabulary: list[str]
    alpha: float = 1.0

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @property
    def word_to_id(self) -> dict[str, int]:
        return {word: i for i, word in enumerate(self.vocabulary)}


class Categorizer(Protocol):
    """Anything that assigns a category and a posterior over all categories to a document."""

    def classify(self, doc: TokenizedDoc) -> tuple[CategoryLabel, np.ndarray]:
        ...


class SentimentLexicon(BaseModel):
    """Word polarities; zero polarity is not allowed."""

    polarities: dict[str, int]

    @validator("polarities")
    def check_nonzero_polarities(cls, v):
        if not v:
            raise ValueError("the lexicon is empty")
        zero = sorted(word for word, polarity in v.items() if polarity == 0)
        if zero:
            raise ValueError(f"zero polarity for {', '.join(zero)}")
        return {word.lower(): polarity for word, polarity in v.items()}


def train_text(
    labeled: Sequence[tuple[TokenizedDoc, CategoryLabel]], alpha: float = 1.0
) -> TextModel:
    """
    Trains a multinomial naive Bayes categorizer.

    Priors are the category frequencies; word probabilities are Laplace smoothed,
    (count + alpha) / (total + alpha V), over the sorted vocabulary of all training documents.

    Parameters
    ----------
    labeled : sequence of (TokenizedDoc, CategoryLabel)
        Training documents; every category must occur at least once.
    alpha : float, optional
        Smoothing constant, by default 1.0.

    Returns
    -------
    TextModel
    """
    if not labeled:
        raise ClassifierError("cannot train on an empty labeled set")
    if alpha <= 0:
        raise ClassifierError("alpha must be positive")

    doc_counts = Counter(CategoryLabel(label) for _, label in labeled)
    missing = [c.display_name for c in CategoryLabel if doc_counts[c] == 0]
    if missing:
        raise ClassifierError(
            f"no training documents for category {', '.join(missing)}"
        )

    vocabulary = sorted({token for doc, _ in labeled for token in doc.tokens})
    word_to_id = {word: i for i, word in enumerate(vocabulary)}
    word_counts = np.zeros((len(CategoryLabel), len(vocabulary)))
    for doc, label in labeled:
        for token in doc.tokens:
            word_counts[int(label), word_to_id[token]] += 1

    n_docs = len(labeled)
    log_priors = np.log(
        np.array([doc_counts[c] for c in CategoryLabel], dtype=float) / n_docs
    )
    smoothed = word_counts + alpha
    log_likelihoods = np.log(smoothed / smoothed.sum(axis=1, keepdims=True))

    logger.info(
        "Trained text categorizer on %d documents over %d words",
        n_docs,
        len(vocabulary),
    )
    return TextModel(
        log_priors=log_priors,
        log_likelihoods=log_likelihoods,
        vocabulary=vocabulary,
        alpha=alpha,
    )


def classify(model: TextModel, doc: TokenizedDoc) -> tuple[CategoryLabel, np.ndarray]:
    """
    Returns the most probable category and the posterior over all four categories.

    Out-of-vocabulary tokens are ignored, so a document without known words is decided by the priors.
    Ties go to the smallest category id.
    """
    word_to_id = model.word_to_id
    ids = [word_to_id[token] for token in doc.tokens if token in word_to_id]
    scores = model.log_priors + model.log_likelihoods[:, ids].sum(axis=1)
    posterior = np.exp(scores - scores.max())
    posterior /= posterior.sum()
    return CategoryLabel(int(np.argmax(scores))), posterior


class NaiveBayesCategorizer:
    """Categorizer backed by a trained TextModel."""

    def __init__(self, model: TextModel):
        self.model = model

    @classmethod
    def train(
        cls,
        labeled: Sequence[tuple[TokenizedDoc, CategoryLabel]],
        alpha: float = 1.0,
    ) -> "NaiveBayesCategorizer":
        return cls(train_text(labeled, alpha))

    def classify(self, doc: TokenizedDoc) -> tuple[CategoryLabel, np.ndarray]:
        return classify(self.model, doc)


def evaluate_text(
    categorizer: Categorizer,
    held_out: Sequence[tuple[TokenizedDoc, CategoryLabel]],
) -> MetricsReport:
    """Accuracy, per-category metrics and the 4 x 4 confusion matrix (labels '0'..'3') on held-out documents."""
    if not held_out:
        raise ClassifierError("cannot evaluate an empty held-out set")
    truth = [str(int(label)) for _, label in held_out]
    predicted = [str(int(categorizer.classify(doc)[0])) for doc, _ in held_out]
    return build_metrics_report(truth, predicted, CATEGORY_LABELS)


def sentiment_score(doc: TokenizedDoc, lexicon: SentimentLexicon) -> int:
    """Sum of the polarities of the document's tokens found in the lexicon."""
    return sum(lexicon.polarities.get(token, 0) for token in doc.tokens)


def score_sentiment(doc: TokenizedDoc, lexicon: SentimentLexicon) -> SentimentLabel:
    """Positive for a positive score, negative for a negative one, neutral at zero."""
    score = sentiment_score(doc, lexicon)
    if score > 0:
        return SentimentLabel.positive
    if score < 0:
        return SentimentLabel.negative
    return SentimentLabel.neutral


def category_proportions(labels: Iterable[CategoryLabel]) -> dict[CategoryLabel, float]:
    """Share of posts per category, all four categories included."""
    counts = Counter(CategoryLabel(label) for label in labels)
    total = sum(counts.values())
    if total == 0:
        raise ClassifierError("no labels to summarise")
    return {category: counts[category] / total for category in CategoryLabel}


def sentiment_proportions(
    labels: Iterable[SentimentLabel],
) -> dict[SentimentLabel, float]:
    """Share of posts per sentiment, all three sentiments included."""
    counts = Counter(SentimentLabel(label) for label in labels)
    total = sum(counts.values())
    if total == 0:
        raise ClassifierError("no labels to summarise")
    return {sentiment: counts[sentiment] / total for sentiment in SentimentLabel}


def load_labeled_categories(
    path: Path, stopwords: set[str]
) -> list[tuple[TokenizedDoc, CategoryLabel]]:
    """
    Reads a labelled training CSV with columns text,label (label 0-3).

    Each row becomes a TokenizedDoc with post_id 'row-<n>'.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"{path}: not found")
    df = read_string_csv(path, ClassifierError)
    missing = [col for col in ("text", "label") if col not in df.columns]
    if missing:
        raise ConfigurationError(f"{path}: missing columns {', '.join(missing)}")

    labeled = []
    for row_number, (text, label) in enumerate(
        zip(df["text"], df["label"]), start=1
    ):
        try:
            category = CategoryLabel(int(label))
        except ValueError as exc:
            raise ClassifierError(
                f"{path}: row {row_number} has invalid label '{label}'"
            ) from exc
        doc = TokenizedDoc(
            post_id=f"row-{row_number}",
            tokens=tokenize(clean_text(text), stopwords),
        )
        labeled.append((doc, category))
    return labeled


def load_lexicon(path: Path) -> SentimentLexicon:
    """Reads a sentiment lexicon CSV with columns word,polarity (nonzero integers)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"{path}: not found")
    df = read_string_csv(path, ClassifierError)
    if list(df.columns[:2]) != ["word", "polarity"]:
        raise ConfigurationError(f"{path}: expected columns word,polarity")
    try:
        polarities = {
            word.strip(): int(polarity)
            for word, polarity in zip(df["word"], df["polarity"])
            if word.strip()
        }
        return SentimentLexicon(polarities=polarities)
    except ValueError as exc:
        raise ClassifierError(f"{path}: {exc}") from exc


def holdout_split(
    labeled: Sequence[tuple[TokenizedDoc, CategoryLabel]], fraction: float, seed: int
) -> tuple[list, list]:
    """Seeded (train, held_out) split with round(fraction * N) held-out documents, at least one on each side."""
    if len(labeled) < 2:
        raise ClassifierError("at least two labelled documents are needed for a holdout split")
    n_test = min(max(round(fraction * len(labeled)), 1), len(labeled) - 1)
    permutation = np.random.default_rng(seed).permutation(len(labeled))
    held_out = [labeled[i] for i in permutation[:n_test]]
    train = [labeled[i] for i in permutation[n_test:]]
    return train, held_out
