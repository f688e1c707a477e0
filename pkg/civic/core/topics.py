"""Latent Dirichlet Allocation by collapsed Gibbs sampling, UMass coherence and topic-count selection."""

import logging
from collections import Counter
from typing import Callable, NamedTuple, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, validator

from .exceptions import TopicModelError
from .models import TokenizedDoc

logger = logging.getLogger(__name__)

DEFAULT_BETA = 0.01
DEFAULT_TOP_N = 10
TIE_TOLERANCE = 1e-9


class Corpus(BaseModel):
    """Documents as word-id sequences over a vocabulary; empty documents are excluded."""

    vocabulary: list[str]
    docs: list[list[int]]
    post_ids: list[str]

    @validator("docs")
    def check_docs_nonempty(cls, v):
        if any(len(doc) == 0 for doc in v):
            raise ValueError("empty documents must be excluded from a corpus")
        return v

    @property
    def word_to_id(self) -> dict[str, int]:
        return {word: i for i, word in enumerate(self.vocabulary)}

    @property
    def n_tokens(self) -> int:
        return sum(len(doc) for doc in self.docs)

    def presence_matrix(self) -> np.ndarray:
        """D x V boolean matrix: does word w occur in document d."""
        presence = np.zeros((len(self.docs), len(self.vocabulary)), dtype=bool)
        for d, doc in enumerate(self.docs):
            presence[d, doc] = True
        return presence


class TopicModel(BaseModel):
    """
    State of a fitted LDA model: the final Gibbs sample of topic assignments and the count matrices.

    n_kw is K x V topic-word counts, n_dk is D x K document-topic counts.
    """

    K: int
    alpha: float
    beta: float
    seed: int
    iterations: int
    vocabulary: list[str]
    assignments: list[np.ndarray]
    n_kw: np.ndarray
    n_dk: np.ndarray

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    def phi(self) -> np.ndarray:
        """Topic-word distributions (n_kw + beta) / (n_k + V beta), one row per topic."""
        V = self.n_kw.shape[1]
        return (self.n_kw + self.beta) / (
            self.n_kw.sum(axis=1, keepdims=True) + V * self.beta
        )

    def theta(self) -> np.ndarray:
        """Document-topic distributions (n_dk + alpha) / (n_d + K alpha), one row per document."""
        return (self.n_dk + self.alpha) / (
            self.n_dk.sum(axis=1, keepdims=True) + self.K * self.alpha
        )


class GibbsState(NamedTuple):
    """Live sampler state handed to the per-sweep callback (do not mutate)."""

    assignments: list[np.ndarray]
    n_kw: np.ndarray
    n_dk: np.ndarray
    n_k: np.ndarray


class CoherenceScore(BaseModel):
    value: float
    per_topic: list[float]
    top_n: int


def build_corpus(docs: list[TokenizedDoc], min_doc_freq: int = 1) -> Corpus:
    """
    Builds a corpus over the tokens appearing in at least `min_doc_freq` documents.

    Word ids follow first appearance; documents left without tokens are dropped.
    """
    document_frequency = Counter()
    for doc in docs:
        document_frequency.update(set(doc.tokens))

    word_to_id = {}
    id_docs, post_ids = [], []
    for doc in docs:
        ids = []
        for token in doc.tokens:
            if document_frequency[token] < min_doc_freq:
                continue
            if token not in word_to_id:
                word_to_id[token] = len(word_to_id)
            ids.append(word_to_id[token])
        if ids:
            id_docs.append(ids)
            post_ids.append(doc.post_id)

    if not word_to_id:
        raise TopicModelError(
            f"the vocabulary is empty (no token appears in at least {min_doc_freq} documents)"
        )

    logger.info(
        "Built corpus of %d documents over %d words (dropped %d documents)",
        len(id_docs),
        len(word_to_id),
        len(docs) - len(id_docs),
    )
    return Corpus(
        vocabulary=list(word_to_id), docs=id_docs, post_ids=post_ids
    )


def fit_lda(
    corpus: Corpus,
    K: int,
    alpha: Optional[float] = None,
    beta: float = DEFAULT_BETA,
    iterations: int = 200,
    seed: int = 0,
    on_sweep: Optional[Callable[[int, GibbsState], None]] = None,
) -> TopicModel:
    """
    Fits LDA by collapsed Gibbs sampling.

    Each sweep removes every token from the counts in turn and redraws its topic from
    (n_dk + alpha) (n_kw + beta) / (n_k + V beta). All draws come from one seeded generator,
    so the same corpus, parameters and seed give identical assignments.

    Parameters
    ----------
    corpus : Corpus
        Documents to model.
    K : int
        Number of topics.
    alpha : float, optional
        Document-topic smoothing, by default 50 / K.
    beta : float, optional
        Topic-word smoothing, by default 0.01.
    iterations : int, optional
        Number of Gibbs sweeps, by default 200.
    seed : int, optional
        Seed of the sampler, by default 0.
    on_sweep : callable, optional
        Called as on_sweep(iteration, state) after every sweep.

    Returns
    -------
    TopicModel
        The model at the final sample.
    """
    if K < 1:
        raise TopicModelError("K must be at least 1")
    if alpha is None:
        alpha = 50.0 / K
    if alpha <= 0 or beta <= 0:
        raise TopicModelError("alpha and beta must be positive")
    if iterations < 1:
        raise TopicModelError("iterations must be at least 1")
    if K > corpus.n_tokens:
        raise TopicModelError(
            f"K={K} exceeds the number of tokens in the corpus ({corpus.n_tokens})"
        )

    rng = np.random.default_rng(seed)
    V = len(corpus.vocabulary)
    D = len(corpus.docs)
    n_kw = np.zeros((K, V), dtype=np.int64)
    n_dk = np.zeros((D, K), dtype=np.int64)
    n_k = np.zeros(K, dtype=np.int64)

    assignments = []
    for d, doc in enumerate(corpus.docs):
        z = rng.integers(0, K, size=len(doc))
        assignments.append(z)
        np.add.at(n_kw, (z, doc), 1)
        np.add.at(n_dk[d], z, 1)
        np.add.at(n_k, z, 1)

    state = GibbsState(assignments, n_kw, n_dk, n_k)
    v_beta = V * beta
    for iteration in range(iterations):
        for d, doc in enumerate(corpus.docs):
            z = assignments[d]
            doc_topics = n_dk[d]
            for i, w in enumerate(doc):
                k = z[i]
                doc_topics[k] -= 1
                n_kw[k, w] -= 1
                n_k[k] -= 1

                weights = (
                    (doc_topics + alpha) * (n_kw[:, w] + beta) / (n_k + v_beta)
                )
                cumulative = np.cumsum(weights)
                k = int(
                    np.searchsorted(
                        cumulative, rng.random() * cumulative[-1], side="right"
                    )
                )
                k = min(k, K - 1)

                z[i] = k
                doc_topics[k] += 1
                n_kw[k, w] += 1
                n_k[k] += 1

        if on_sweep is not None:
            on_sweep(iteration, state)
        if (iteration + 1) % 50 == 0:
            logger.info("LDA K=%d: finished sweep %d/%d", K, iteration + 1, iterations)

    return TopicModel(
        K=K,
        alpha=alpha,
        beta=beta,
        seed=seed,
        iterations=iterations,
        vocabulary=corpus.vocabulary,
        assignments=assignments,
        n_kw=n_kw,
        n_dk=n_dk,
    )


def top_words(model: TopicModel, topic: int, n: int) -> list[tuple[str, float]]:
    """The n most probable words of a topic; ties in probability go to the smaller word id. n is capped at V."""
    if not 0 <= topic < model.K:
        raise TopicModelError(f"topic {topic} is outside 0..{model.K - 1}")
    phi_k = model.phi()[topic]
    order = np.lexsort((np.arange(len(phi_k)), -phi_k))[:n]
    return [(model.vocabulary[w], float(phi_k[w])) for w in order]


def format_top_words(words: list[tuple[str, float]]) -> str:
    """Renders top words as 'station (0.131), line (0.112)'."""
    return ", ".join(f"{word} ({probability:.3f})" for word, probability in words)


def coherence(
    model: TopicModel, corpus: Corpus, top_n: int = DEFAULT_TOP_N
) -> CoherenceScore:
    """
    UMass coherence of every topic.

    For a topic's top words w_1..w_n (descending probability) the score is the sum over i > j of
    log((D(w_i, w_j) + 1) / D(w_j)), where D counts training documents containing the word(s).
    The overall value is the mean over topics.
    """
    if top_n < 2:
        raise TopicModelError("coherence needs top_n >= 2")

    presence = corpus.presence_matrix().astype(np.int64)
    word_to_id = corpus.word_to_id
    per_topic = []
    for topic in range(model.K):
        ids = [word_to_id[word] for word, _ in top_words(model, topic, top_n)]
        sub = presence[:, ids]
        co_occurrence = sub.T @ sub
        doc_frequency = np.diag(co_occurrence)
        score = 0.0
        for i in range(1, len(ids)):
            for j in range(i):
                score += np.log(
                    (co_occurrence[i, j] + 1) / doc_frequency[j]
                )
        per_topic.append(float(score))

    return CoherenceScore(
        value=float(np.mean(per_topic)), per_topic=per_topic, top_n=top_n
    )


def select_k(
    corpus: Corpus,
    k_min: int,
    k_max: int,
    alpha: Optional[float] = None,
    beta: float = DEFAULT_BETA,
    iterations: int = 200,
    seed: int = 0,
    top_n: int = DEFAULT_TOP_N,
) -> tuple[int, list[tuple[int, float]]]:
    """
    Fits every K in [k_min, k_max] with the same seed and returns the K with the highest coherence.

    Coherence values equal within a relative 1e-9 count as ties, which go to the smallest K.
    With alpha unset, each K uses its own default 50 / K.
    """
    if not 1 <= k_min <= k_max:
        raise TopicModelError("need 1 <= k_min <= k_max")

    scores = []
    best_k, best_value = None, -np.inf
    for K in range(k_min, k_max + 1):
        model = fit_lda(corpus, K, alpha, beta, iterations, seed)
        value = coherence(model, corpus, top_n).value
        scores.append((K, value))
        logger.info("K=%d: coherence %.4f", K, value)
        is_tie = np.isclose(value, best_value, rtol=TIE_TOLERANCE, atol=0.0)
        if value > best_value and not is_tie:
            best_k, best_value = K, value

    return best_k, scores


def dominant_topic(model: TopicModel, doc_index: int) -> int:
    """The most probable topic of a training document (smallest id on ties)."""
    return int(np.argmax(model.theta()[doc_index]))


def dump_model(model: TopicModel) -> dict:
    """JSON-ready dump with K, alpha, beta, seed, iterations, vocabulary and the phi matrix."""
    return {
        "K": model.K,
        "alpha": model.alpha,
        "beta": model.beta,
        "seed": model.seed,
        "iterations": model.iterations,
        "vocabulary": model.vocabulary,
        "phi": model.phi().tolist(),
    }


def top_words_frame(model: TopicModel, n: int = DEFAULT_TOP_N) -> pd.DataFrame:
    """Top words of every topic as rows (topic, rank, word, probability); ranks start at 1."""
    rows = [
        {"topic": topic, "rank": rank, "word": word, "probability": probability}
        for topic in range(model.K)
        for rank, (word, probability) in enumerate(
            top_words(model, topic, n), start=1
        )
    ]
    return pd.DataFrame(rows, columns=["topic", "rank", "word", "probability"])
