"""Test the naive Bayes topic categorizer and lexicon sentiment."""

import numpy as np
import pytest

from civic.core import classify as text
from civic.core import synthetic
from civic.core.exceptions import ClassifierError, ConfigurationError
from civic.core.ingest import clean_text, tokenize
from civic.core.models import CategoryLabel, SentimentLabel, TokenizedDoc


def doc(*tokens, post_id="d"):
    return TokenizedDoc(post_id=post_id, tokens=list(tokens))


@pytest.fixture()
def one_word_per_category():
    return [
        (doc("bus"), CategoryLabel.PUBLIC_TRANSPORT_INFRASTRUCTURE),
        (doc("fare"), CategoryLabel.SOCIOECONOMIC_DISPARITY),
        (doc("ramp"), CategoryLabel.ACCESSIBILITY),
        (doc("pizza"), CategoryLabel.OTHERS),
    ]


@pytest.fixture()
def lexicon():
    return text.SentimentLexicon(polarities={"great": 1, "Late": -1, "broken": -2})


def test_posterior_matches_hand_computation(one_word_per_category):
    """Test Laplace smoothed likelihoods: P(bus | 0) = 2/5 and 1/5 for the other categories."""
    model = text.train_text(one_word_per_category)

    category, posterior = text.classify(model, doc("bus"))

    assert model.vocabulary == ["bus", "fare", "pizza", "ramp"]
    assert category == CategoryLabel.PUBLIC_TRANSPORT_INFRASTRUCTURE
    np.testing.assert_allclose(posterior, [0.4, 0.2, 0.2, 0.2])


def test_unknown_words_fall_back_to_priors(one_word_per_category):
    """Test that a document with no known words gets the category priors."""
    labeled = one_word_per_category + [(doc("ramp"), CategoryLabel.ACCESSIBILITY)]
    model = text.train_text(labeled)

    category, posterior = text.classify(model, doc("zebra"))

    assert category == CategoryLabel.ACCESSIBILITY
    np.testing.assert_allclose(posterior, [0.2, 0.2, 0.4, 0.2])


def test_ties_go_to_smallest_category(one_word_per_category):
    model = text.train_text(one_word_per_category)

    category, _ = text.classify(model, doc())

    assert category == CategoryLabel.PUBLIC_TRANSPORT_INFRASTRUCTURE


def test_train_needs_every_category(one_word_per_category):
    with pytest.raises(ClassifierError, match="Accessibility"):
        text.train_text(
            [pair for pair in one_word_per_category if pair[1] != CategoryLabel.ACCESSIBILITY]
        )


def test_synthetic_categories_are_learned():
    """Test held-out accuracy on generated texts whose topic words are disjoint."""
    rng = np.random.default_rng(0)
    frame = synthetic.labeled_categories(60, rng)
    labeled = [
        (
            TokenizedDoc(post_id=str(i), tokens=tokenize(clean_text(t), set(synthetic.STOPWORDS))),
            CategoryLabel(int(label)),
        )
        for i, (t, label) in enumerate(zip(frame["text"], frame["label"]))
    ]
    train, held_out = text.holdout_split(labeled, 0.3, seed=0)

    report = text.evaluate_text(text.NaiveBayesCategorizer.train(train), held_out)

    assert len(held_out) == 72
    assert report.labels == ["0", "1", "2", "3"]
    assert report.accuracy >= 0.95


def test_holdout_split_keeps_both_sides(one_word_per_category):
    train, held_out = text.holdout_split(one_word_per_category, 0.99, seed=0)

    assert len(train) == 1
    assert len(held_out) == 3


@pytest.mark.parametrize(
    "tokens, score, label",
    [
        (["great", "bus"], 1, SentimentLabel.positive),
        (["late", "broken", "great"], -2, SentimentLabel.negative),
        (["great", "late"], 0, SentimentLabel.neutral),
        (["bus"], 0, SentimentLabel.neutral),
    ],
)
def test_sentiment(lexicon, tokens, score, label):
    """Test that the sign of the summed polarities decides the sentiment label."""
    assert text.sentiment_score(doc(*tokens), lexicon) == score
    assert text.score_sentiment(doc(*tokens), lexicon) == label


def test_lexicon_rejects_zero_polarity():
    with pytest.raises(ValueError, match="zero polarity"):
        text.SentimentLexicon(polarities={"meh": 0})


def test_proportions_include_absent_labels():
    categories = text.category_proportions([0, 0, 1, 3])
    sentiments = text.sentiment_proportions(["positive", "positive", "negative", "neutral"])

    assert categories[CategoryLabel.ACCESSIBILITY] == 0.0
    assert categories[CategoryLabel.PUBLIC_TRANSPORT_INFRASTRUCTURE] == 0.5
    assert sentiments[SentimentLabel.positive] == 0.5
    assert sum(sentiments.values()) == pytest.approx(1.0)


def test_load_labeled_categories(tmp_path):
    path = tmp_path / "labeled.csv"
    path.write_text("text,label\nThe subway station,0\nRent is high,1\n")

    labeled = text.load_labeled_categories(path, {"the", "is"})

    assert labeled[0][0].post_id == "row-1"
    assert labeled[0][0].tokens == ["subway", "station"]
    assert labeled[1][1] == CategoryLabel.SOCIOECONOMIC_DISPARITY


def test_load_labeled_categories_rejects_bad_label(tmp_path):
    path = tmp_path / "labeled.csv"
    path.write_text("text,label\nsubway,7\n")

    with pytest.raises(ClassifierError, match="invalid label '7'"):
        text.load_labeled_categories(path, set())


def test_load_lexicon(tmp_path):
    path = tmp_path / "lexicon.csv"
    path.write_text("word,polarity\nGreat,1\nlate,-1\n")

    assert text.load_lexicon(path).polarities == {"great": 1, "late": -1}


def test_load_lexicon_requires_columns(tmp_path):
    path = tmp_path / "lexicon.csv"
    path.write_text("term,score\ngreat,1\n")

    with pytest.raises(ConfigurationError, match="word,polarity"):
        text.load_lexicon(path)


def test_loaders_reject_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")

    with pytest.raises(ClassifierError, match="unreadable CSV"):
        text.load_lexicon(path)
    with pytest.raises(ClassifierError, match="unreadable CSV"):
        text.load_labeled_categories(path, set())


def test_default_lexicon_loads():
    from civic.core import utility as util

    lexicon = text.load_lexicon(util.DEFAULT_LEXICON)

    assert lexicon.polarities["great"] == 1
    assert lexicon.polarities["delayed"] == -1
