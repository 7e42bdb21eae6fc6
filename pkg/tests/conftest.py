import numpy as np
import pytest

from eventaug.core import EmbeddingMatrix, Message
from eventaug.ingest import Corpus


def make_message(mid, text="hello world", user="u1", ts=1_600_000_000,
                 entities=(), location=None, label=None, origin=None):
    return Message(id=mid, text=text, user_id=user, timestamp=ts,
                   entities=tuple(entities), location=location, label=label,
                   origin=origin)


@pytest.fixture
def graph_corpus():
    """5 messages, 3 users, 4 case-folded entities; all counts hand-checked."""
    return Corpus(messages=(
        make_message("m1", "waves at #Sydney near Bondi Beach", "u1",
                     entities=["Sydney", "Bondi Beach"], label=0),
        make_message("m2", "sydney update", "u1", entities=["sydney"], label=0),
        make_message("m3", "storm warning", "u2", entities=["Storm"], label=1),
        make_message("m4", "quiet day", "u2", entities=[], label=1),
        make_message("m5", "flood and storm", "u3",
                     entities=["Flood", "Storm"], label=1),
    ))


@pytest.fixture
def graph_embeddings(graph_corpus):
    values = np.array([
        [1.0, 0.0, 0.0],
        [0.0, 2.0, 0.0],
        [0.0, 0.0, 4.0],
        [2.0, 2.0, 0.0],
        [0.0, 4.0, 4.0],
    ], dtype=np.float32)
    return EmbeddingMatrix(graph_corpus.ids(), values)


def random_embeddings(rng, n, dim, ids=None):
    ids = ids or [f"r{i}" for i in range(n)]
    return EmbeddingMatrix(ids, rng.normal(size=(n, dim)).astype(np.float32))
