"""
Gender inference from first names and race inference from last names.

Names are represented by their 26 letter counts (the alphabet matrix). Three classifiers are
implemented directly on those counts: multinomial naive Bayes, k-nearest neighbours and a CART
decision tree, plus bootstrap-aggregated trees with out-of-bag accuracy.
"""

import logging
import warnings
from pathlib import Path
from typing import Literal, Optional

import numpy as np
import orjson
from pydantic import BaseModel, PrivateAttr, ValidationError

from . import metrics
from .exceptions import ConfigurationError, NameModelError
from .models import LETTERS, UNKNOWN, MetricsReport, NameExample, normalize_name
from .utility import dump_json, read_string_csv

logger = logging.getLogger(__name__)

LETTER_INDEX = {letter: i for i, letter in enumerate(LETTERS)}
MODEL_FORMAT_VERSION = 1

Algorithm = Literal["naive_bayes", "knn", "decision_tree", "bagged_trees"]
ALGORITHMS = ("naive_bayes", "knn", "decision_tree", "bagged_trees")

DEFAULT_HYPERPARAMS = {
    "naive_bayes": {"alpha": 1.0},
    "knn": {"k": 5},
    "decision_tree": {"max_depth": 12, "min_leaf": 5},
    "bagged_trees": {
        "max_depth": 12,
        "min_leaf": 5,
        "n_estimators": 25,
        "max_features": 5,
    },
}


class NameModel(BaseModel):
    """
    A trained gender or race classifier over letter-count features.

    `parameters` holds the JSON-ready learned state of the algorithm:
    - naive_bayes: log_priors (per label), log_likelihoods (per label, 26 letters)
    - knn: k, features (one 26-vector per training name), targets (label indices)
    - decision_tree: tree (nested nodes with letter/threshold splits and leaf class counts)
    - bagged_trees: trees, oob_accuracy
    """

    task: Literal["gender", "race"]
    algorithm: Algorithm
    labels: list[str]
    parameters: dict
    hyperparams: dict
    training_seed: int
    format_version: int = MODEL_FORMAT_VERSION

    _arrays: dict = PrivateAttr(default_factory=dict)

    class Config:
        allow_mutation = False

    def array(self, key: str) -> np.ndarray:
        """Returns (and caches) a parameter as a numpy array."""
        if key not in self._arrays:
            self._arrays[key] = np.asarray(self.parameters[key])
        return self._arrays[key]


def letter_counts(name: str) -> np.ndarray:
    """
    Counts the occurrences of each letter a-z in the normalized name.

    Raises
    ------
    NameModelError
        If the name has no alphabetic characters.
    """
    normalized = normalize_name(name)
    if not normalized:
        raise NameModelError("empty name")
    counts = np.zeros(len(LETTERS), dtype=np.int64)
    for ch in normalized:
        counts[LETTER_INDEX[ch]] += 1
    return counts


def feature_matrix(names: list[str]) -> np.ndarray:
    """Stacks the letter counts of several names into an N x 26 matrix."""
    return np.vstack([letter_counts(name) for name in names])


def split_train_test(
    data: list[NameExample], train_fraction: float = 0.7, seed: int = 0
) -> tuple[list[NameExample], list[NameExample]]:
    """
    Shuffles the examples with a seeded generator and splits them so that |train| = round(train_fraction * N).
    """
    if not 0 < train_fraction < 1:
        raise NameModelError("train_fraction must lie strictly between 0 and 1")
    n = len(data)
    if n < 2:
        raise NameModelError(
            "at least two examples are needed for a train/test split"
        )

    n_train = min(max(round(train_fraction * n), 1), n - 1)
    permutation = np.random.default_rng(seed).permutation(n)
    train = [data[i] for i in permutation[:n_train]]
    test = [data[i] for i in permutation[n_train:]]
    return train, test


# --- naive Bayes ---------------------------------------------------------


def _train_naive_bayes(X, y, n_labels, hyperparams) -> dict:
    alpha = float(hyperparams["alpha"])
    if alpha <= 0:
        raise NameModelError("naive Bayes smoothing alpha must be positive")
    class_counts = np.bincount(y, minlength=n_labels)
    letter_totals = np.vstack(
        [X[y == label].sum(axis=0) for label in range(n_labels)]
    ).astype(float)
    smoothed = letter_totals + alpha
    log_likelihoods = np.log(smoothed) - np.log(
        smoothed.sum(axis=1, keepdims=True)
    )
    log_priors = np.log(class_counts / class_counts.sum())
    return {
        "log_priors": log_priors.tolist(),
        "log_likelihoods": log_likelihoods.tolist(),
    }


def naive_bayes_posterior(model: NameModel, counts: np.ndarray) -> np.ndarray:
    """Posterior class probabilities of a naive Bayes name model for one letter-count vector."""
    joint = model.array("log_priors") + model.array("log_likelihoods") @ counts
    joint -= joint.max()
    posterior = np.exp(joint)
    return posterior / posterior.sum()


# --- k nearest neighbours ------------------------------------------------


def _train_knn(X, y, n_labels, hyperparams) -> dict:
    k = int(hyperparams["k"])
    if k < 1:
        raise NameModelError("knn needs k >= 1")
    return {"k": k, "features": X.tolist(), "targets": y.tolist()}


def _knn_votes(model: NameModel, counts: np.ndarray) -> np.ndarray:
    features = model.array("features")
    targets = model.array("targets")
    k = min(model.parameters["k"], len(targets))
    distances = np.sqrt(((features - counts) ** 2).sum(axis=1))
    nearest = np.argsort(distances, kind="stable")[:k]
    return np.bincount(targets[nearest], minlength=len(model.labels)) / k


# --- CART trees ----------------------------------------------------------


def _best_split(X, y, n_labels, candidate_letters, min_leaf):
    """Finds the (letter, threshold) split with the lowest weighted Gini impurity, or None."""
    n = len(y)
    onehot = np.eye(n_labels)[y]
    totals = onehot.sum(axis=0)
    parent_gini = 1.0 - ((totals / n) ** 2).sum()

    best = None
    best_impurity = parent_gini - 1e-12
    for letter in candidate_letters:
        order = np.argsort(X[:, letter], kind="stable")
        values = X[order, letter]
        left_counts = np.cumsum(onehot[order], axis=0)[:-1]
        left_n = np.arange(1, n)
        right_counts = totals - left_counts
        right_n = n - left_n

        valid = (
            (values[:-1] < values[1:])
            & (left_n >= min_leaf)
            & (right_n >= min_leaf)
        )
        if not valid.any():
            continue

        gini_left = 1.0 - ((left_counts / left_n[:, None]) ** 2).sum(axis=1)
        gini_right = 1.0 - ((right_counts / right_n[:, None]) ** 2).sum(
            axis=1
        )
        impurity = (left_n * gini_left + right_n * gini_right) / n
        impurity[~valid] = np.inf

        position = int(np.argmin(impurity))
        if impurity[position] < best_impurity:
            best_impurity = impurity[position]
            best = (int(letter), int(values[position]))
    return best


def _grow_tree(X, y, n_labels, depth, hyperparams, rng) -> dict:
    counts = np.bincount(y, minlength=n_labels)
    node = {"counts": counts.tolist()}
    min_leaf = int(hyperparams["min_leaf"])
    if (
        depth >= int(hyperparams["max_depth"])
        or np.count_nonzero(counts) <= 1
        or len(y) < 2 * min_leaf
    ):
        return node

    max_features = hyperparams.get("max_features")
    if max_features and rng is not None:
        candidate_letters = np.sort(
            rng.choice(len(LETTERS), size=int(max_features), replace=False)
        )
    else:
        candidate_letters = np.arange(len(LETTERS))

    split = _best_split(X, y, n_labels, candidate_letters, min_leaf)
    if split is None:
        return node

    letter, threshold = split
    goes_left = X[:, letter] <= threshold
    node["letter"] = letter
    node["threshold"] = threshold
    node["left"] = _grow_tree(
        X[goes_left], y[goes_left], n_labels, depth + 1, hyperparams, rng
    )
    node["right"] = _grow_tree(
        X[~goes_left], y[~goes_left], n_labels, depth + 1, hyperparams, rng
    )
    return node


def _leaf(tree: dict, counts: np.ndarray) -> dict:
    node = tree
    while "letter" in node:
        node = (
            node["left"]
            if counts[node["letter"]] <= node["threshold"]
            else node["right"]
        )
    return node


def tree_depth(tree: dict) -> int:
    """Depth of a grown tree; a single leaf has depth 0."""
    if "letter" not in tree:
        return 0
    return 1 + max(tree_depth(tree["left"]), tree_depth(tree["right"]))


def _train_decision_tree(X, y, n_labels, hyperparams) -> dict:
    return {"tree": _grow_tree(X, y, n_labels, 0, hyperparams, rng=None)}


def _train_bagged_trees(X, y, n_labels, hyperparams, seed) -> dict:
    rng = np.random.default_rng(seed)
    n = len(y)
    n_estimators = int(hyperparams["n_estimators"])
    trees = []
    oob_votes = np.zeros((n, n_labels), dtype=np.int64)
    for _ in range(n_estimators):
        sample = rng.integers(0, n, size=n)
        tree = _grow_tree(X[sample], y[sample], n_labels, 0, hyperparams, rng)
        trees.append(tree)

        out_of_bag = np.setdiff1d(np.arange(n), sample)
        for i in out_of_bag:
            leaf_counts = np.asarray(_leaf(tree, X[i])["counts"])
            oob_votes[i, int(np.argmax(leaf_counts))] += 1

    has_votes = oob_votes.sum(axis=1) > 0
    oob_accuracy = (
        float((oob_votes[has_votes].argmax(axis=1) == y[has_votes]).mean())
        if has_votes.any()
        else None
    )
    return {"trees": trees, "oob_accuracy": oob_accuracy}


# --- training / prediction -------------------------------------------------


def train(
    examples: list[NameExample],
    algorithm: Algorithm,
    hyperparams: Optional[dict] = None,
    seed: int = 0,
    task: Literal["gender", "race"] = "gender",
    labels: Optional[list[str]] = None,
) -> NameModel:
    """
    Trains a name classifier.

    Parameters
    ----------
    examples : list of NameExample
        Labelled names.
    algorithm : {"naive_bayes", "knn", "decision_tree", "bagged_trees"}
        Classifier to train.
    hyperparams : dict, optional
        Overrides of the algorithm's defaults (alpha; k; max_depth, min_leaf; n_estimators, max_features).
    seed : int, optional
        Seed for the randomised algorithms, by default 0.
    task : {"gender", "race"}, optional
        What the labels describe, by default "gender".
    labels : list of str, optional
        The full label set. Every label must have at least one example. By default, the labels present in `examples`.

    Returns
    -------
    NameModel
    """
    if algorithm not in ALGORITHMS:
        raise NameModelError(
            f"Unknown algorithm '{algorithm}'. Choose one of {', '.join(ALGORITHMS)}."
        )
    if not examples:
        raise NameModelError("cannot train on an empty set of examples")

    present = sorted({example.label for example in examples})
    labels = sorted(labels) if labels is not None else present
    missing = [label for label in labels if label not in present]
    if missing:
        raise NameModelError(
            f"label(s) with zero training examples: {', '.join(missing)}"
        )
    unexpected = [label for label in present if label not in labels]
    if unexpected:
        raise NameModelError(
            f"examples carry labels outside the label set: {', '.join(unexpected)}"
        )

    params = {**DEFAULT_HYPERPARAMS[algorithm], **(hyperparams or {})}
    label_index = {label: i for i, label in enumerate(labels)}
    X = feature_matrix([example.name for example in examples])
    y = np.array([label_index[example.label] for example in examples])

    if algorithm == "naive_bayes":
        parameters = _train_naive_bayes(X, y, len(labels), params)
    elif algorithm == "knn":
        parameters = _train_knn(X, y, len(labels), params)
    elif algorithm == "decision_tree":
        parameters = _train_decision_tree(X, y, len(labels), params)
    else:
        parameters = _train_bagged_trees(X, y, len(labels), params, seed)

    logger.info(
        "Trained %s %s model on %d names", task, algorithm, len(examples)
    )
    return NameModel(
        task=task,
        algorithm=algorithm,
        labels=labels,
        parameters=parameters,
        hyperparams=params,
        training_seed=seed,
    )


def class_scores(model: NameModel, name: str) -> np.ndarray:
    """
    Per-label scores for a name: posterior probabilities for naive Bayes,
    neighbour vote fractions for knn, leaf class fractions for a decision tree
    and tree vote fractions for bagged trees.
    """
    counts = letter_counts(name)
    if model.algorithm == "naive_bayes":
        return naive_bayes_posterior(model, counts)
    if model.algorithm == "knn":
        return _knn_votes(model, counts)
    if model.algorithm == "decision_tree":
        leaf_counts = np.asarray(
            _leaf(model.parameters["tree"], counts)["counts"], dtype=float
        )
        return leaf_counts / leaf_counts.sum()

    votes = np.zeros(len(model.labels))
    for tree in model.parameters["trees"]:
        votes[int(np.argmax(_leaf(tree, counts)["counts"]))] += 1
    return votes / votes.sum()


def predict(model: NameModel, name: str) -> tuple[str, float]:
    """
    Predicts the label of a name.

    Ties between labels go to the lexicographically smallest one (labels are kept sorted).

    Returns
    -------
    tuple
        The label and its score (posterior or vote fraction) in (0, 1].
    """
    scores = class_scores(model, name)
    best = int(np.argmax(scores))
    return model.labels[best], float(scores[best])


def evaluate(model: NameModel, test: list[NameExample]) -> MetricsReport:
    """Evaluates a trained model on held-out examples."""
    if not test:
        raise NameModelError("cannot evaluate on an empty test set")
    predicted = [predict(model, example.name)[0] for example in test]
    return metrics.build_metrics_report(
        [example.label for example in test],
        predicted,
        model.labels,
        oob_accuracy=model.parameters.get("oob_accuracy"),
    )


def cross_validate(
    data: list[NameExample],
    k: int = 10,
    algorithm: Algorithm = "naive_bayes",
    hyperparams: Optional[dict] = None,
    seed: int = 0,
    task: Literal["gender", "race"] = "gender",
) -> MetricsReport:
    """
    Runs seeded k-fold cross-validation.

    Every example is predicted exactly once, by the model trained on the other k-1 folds;
    metrics are pooled over all folds and the per-fold accuracies are kept in `fold_scores`.
    A fold whose training split lacks a rare label trains without it and never predicts it.
    """
    try:
        folds = metrics.kfold_indices(len(data), k, seed)
    except ValueError as exc:
        raise NameModelError(str(exc)) from exc

    labels = sorted({example.label for example in data})
    truth, predicted, fold_scores = [], [], []
    for i, test_index in enumerate(folds):
        test_set = set(test_index.tolist())
        train_examples = [
            data[j] for j in range(len(data)) if j not in test_set
        ]
        test_examples = [data[j] for j in test_index]
        model = train(train_examples, algorithm, hyperparams, seed + i, task)
        fold_predictions = [
            predict(model, example.name)[0] for example in test_examples
        ]
        fold_truth = [example.label for example in test_examples]
        fold_scores.append(
            float(np.mean([t == p for t, p in zip(fold_truth, fold_predictions)]))
        )
        truth += fold_truth
        predicted += fold_predictions

    return metrics.build_metrics_report(
        truth, predicted, labels, fold_scores=fold_scores
    )


# --- applying models to posts --------------------------------------------


def split_name(display_name: str) -> tuple[Optional[str], Optional[str]]:
    """
    Splits a display name into (first, last).

    Tokens without letters (emoji, digits) are dropped first. The first name is the first remaining token and
    the last name the last one; a single-token name has no last name.
    """
    tokens = [token for token in display_name.split() if normalize_name(token)]
    if not tokens:
        return None, None
    if len(tokens) == 1:
        return tokens[0], None
    return tokens[0], tokens[-1]


def infer_demographics(
    gender_model: NameModel,
    race_model: Optional[NameModel],
    display_name: str,
    min_score: float = 0.0,
) -> tuple[int, str]:
    """
    Infers (female, race) for a post author.

    female is 1 only for a confident "Female" prediction from the first name; anything else
    (male, no usable name, score below `min_score`) maps to 0. race is the predicted label of the last name,
    or "unknown" when there is no last name, no race model, or the score is below `min_score`.
    """
    first, last = split_name(display_name)

    female = 0
    if first is not None:
        label, score = predict(gender_model, first)
        if label.lower() == "female" and score >= min_score:
            female = 1

    race = UNKNOWN
    if last is not None and race_model is not None:
        label, score = predict(race_model, last)
        if score >= min_score:
            race = label

    return female, race


# --- persistence -----------------------------------------------------------


def save_model(model: NameModel, path: Path):
    """Writes a model as a single JSON document."""
    with open(path, "wb") as f:
        f.write(dump_json(model.dict()))


def load_model(path: Path) -> NameModel:
    """Reads a model written by save_model."""
    with open(path, "rb") as f:
        document = orjson.loads(f.read())
    version = document.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise NameModelError(
            f"{path}: unsupported name model format version {version}"
        )
    try:
        return NameModel.parse_obj(document)
    except ValidationError as exc:
        raise NameModelError(f"{path}: invalid name model ({exc})") from exc


def load_name_examples(path: Path) -> list[NameExample]:
    """
    Reads a training CSV with header name,label.
    Rows whose name has no letters are skipped with a warning.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"{path}: not found")
    df = read_string_csv(path, NameModelError)
    if not {"name", "label"}.issubset(df.columns):
        raise NameModelError(f"{path}: expected the columns name,label")

    examples = []
    skipped = 0
    for row in df[["name", "label"]].to_dict("records"):
        try:
            examples.append(NameExample(**row))
        except ValidationError:
            skipped += 1
    if skipped:
        warnings.warn(
            f"{skipped} row(s) of {path} have no alphabetic characters in the name and were skipped."
        )
    return examples

