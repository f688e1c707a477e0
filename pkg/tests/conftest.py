import orjson
import pytest

from civic.core import synthetic
from civic.core.models import TokenizedDoc


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory):
    """Write the synthetic pipeline input set once per session."""
    directory = tmp_path_factory.mktemp("fixture")
    synthetic.make_fixture(directory, seed=0, n_posts=2000)
    return directory


@pytest.fixture()
def write_posts(tmp_path):
    """Write a list of post dicts (or raw lines) to a JSONL archive and return its path."""

    def _write_posts(rows, name="posts.jsonl"):
        path = tmp_path / name
        lines = [
            row.encode() if isinstance(row, str) else orjson.dumps(row)
            for row in rows
        ]
        path.write_bytes(b"\n".join(lines) + b"\n")
        return path

    return _write_posts


@pytest.fixture()
def valid_post():
    """Create one valid post as it appears in an archive export."""
    return {
        "id": "1",
        "user_id": "u1",
        "name": "Maria Lopez",
        "description": "commuter",
        "text": "The <b>subway</b> is late again :( https://t.co/abc",
        "lat": 40.75,
        "lon": -73.99,
        "created_at": "2021-06-01T12:00:00Z",
    }


@pytest.fixture()
def gender_names():
    """Letter-separable Female/Male first names."""
    return synthetic.gender_examples(400, seed=1)


@pytest.fixture()
def race_names():
    """Letter-separable last names over four race labels."""
    return synthetic.race_examples(400, seed=2)


@pytest.fixture()
def two_theme_docs():
    """Documents drawn from two disjoint vocabularies, 20 per theme."""
    transit = ["subway", "bus", "train", "platform", "station"]
    food = ["pizza", "bagel", "coffee", "donut", "noodle"]
    docs = []
    for i in range(40):
        words = transit if i % 2 == 0 else food
        tokens = [words[(i + j) % 5] for j in range(6)]
        docs.append(TokenizedDoc(post_id=str(i), tokens=tokens))
    return docs
