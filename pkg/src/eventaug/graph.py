"""Heterogeneous social graph over messages, users, and entities, and the
structure-fusing aggregation that enriches message embeddings with their
neighborhoods.

The aggregator is a fixed weighted mean with L2 normalization, not a
trained network: per layer each message row becomes

    normalize(w_self * row + w_user * mean(user neighbors)
                           + w_entity * mean(entity neighbors))

where the user neighborhood is the other messages by the same author and
the entity neighborhood is the other messages sharing at least one entity.
Empty neighborhoods contribute zero, so isolated messages degrade to their
own normalized embedding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import EmbeddingMatrix
from .ingest import AlignedDataset, Corpus, location_pair, temporal_features


@dataclass(frozen=True)
class FusionParams:
    w_self: float = 1.0
    w_user: float = 0.5
    w_entity: float = 0.5
    layers: int = 1

    def __post_init__(self):
        for name, w in (("w_self", self.w_self), ("w_user", self.w_user),
                        ("w_entity", self.w_entity)):
            if not np.isfinite(w):
                raise ValueError(f"{name} must be finite")
        if self.layers < 1:
            raise ValueError(f"layers must be >= 1, got {self.layers}")


class HeteroGraph:
    """Typed-node adjacency: message-user (authored-by) and message-entity
    (mentions) edges only. Entities are keyed case-insensitively; the
    canonical casing is the first occurrence. Immutable after build."""

    def __init__(self, message_ids, message_user, user_messages,
                 entity_names, entity_messages, message_entities):
        self.message_ids: list[str] = message_ids
        self.message_user: dict[str, str] = message_user
        self.user_messages: dict[str, list[str]] = user_messages
        self.entity_names: dict[str, str] = entity_names  # key -> canonical casing
        self.entity_messages: dict[str, list[str]] = entity_messages
        self.message_entities: dict[str, list[str]] = message_entities

    @property
    def num_messages(self) -> int:
        return len(self.message_ids)

    @property
    def num_users(self) -> int:
        return len(self.user_messages)

    @property
    def num_entities(self) -> int:
        return len(self.entity_messages)

    @property
    def num_user_edges(self) -> int:
        return len(self.message_ids)  # exactly one author per message

    @property
    def num_entity_edges(self) -> int:
        return sum(len(keys) for keys in self.message_entities.values())

    def stats(self) -> dict:
        return {
            "messages": self.num_messages,
            "users": self.num_users,
            "entities": self.num_entities,
            "user_edges": self.num_user_edges,
            "entity_edges": self.num_entity_edges,
        }

    def to_json(self) -> str:
        """Inspection dump: nodes plus typed edge lists."""
        payload = {
            "nodes": {
                "messages": self.message_ids,
                "users": sorted(self.user_messages),
                "entities": [self.entity_names[k] for k in sorted(self.entity_messages)],
            },
            "edges": {
                "message_user": [[m, self.message_user[m]] for m in self.message_ids],
                "message_entity": [[m, self.entity_names[k]]
                                   for m in self.message_ids
                                   for k in self.message_entities[m]],
            },
        }
        return json.dumps(payload, sort_keys=True, indent=2)


def build_graph(corpus: Corpus) -> HeteroGraph:
    """One user node per distinct user_id, one entity node per distinct
    entity string (case-insensitive). Augmented messages connect to the same
    user and entity nodes as originals because their metadata is copied."""
    message_ids = []
    message_user = {}
    user_messages: dict[str, list[str]] = {}
    entity_names: dict[str, str] = {}
    entity_messages: dict[str, list[str]] = {}
    message_entities: dict[str, list[str]] = {}

    for m in corpus.messages:
        message_ids.append(m.id)
        message_user[m.id] = m.user_id
        user_messages.setdefault(m.user_id, []).append(m.id)
        keys = []
        for entity in m.entities:
            key = entity.lower()
            if key not in entity_names:
                entity_names[key] = entity
                entity_messages[key] = []
            if key not in keys:  # one edge per (message, entity) pair
                keys.append(key)
                entity_messages[key].append(m.id)
        message_entities[m.id] = keys
    return HeteroGraph(message_ids, message_user, user_messages,
                       entity_names, entity_messages, message_entities)


def neighborhood(graph: HeteroGraph, message_id: str):
    """(user-linked message ids, entity-linked message ids), both sorted,
    deduplicated, and excluding the query message itself."""
    if message_id not in graph.message_user:
        raise KeyError(f"unknown message id {message_id!r}")
    user = graph.message_user[message_id]
    user_linked = sorted(m for m in graph.user_messages[user] if m != message_id)
    entity_linked = set()
    for key in graph.message_entities[message_id]:
        entity_linked.update(graph.entity_messages[key])
    entity_linked.discard(message_id)
    return user_linked, sorted(entity_linked)


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return np.divide(x, norms, out=np.zeros_like(x), where=norms > 0)


def fuse(graph: HeteroGraph, message_emb: EmbeddingMatrix, corpus: Corpus,
         params: FusionParams = FusionParams()) -> EmbeddingMatrix:
    """Structure-fused message embeddings.

    The two temporal features are appended first (output dim = input dim
    + 2), then the weighted-mean aggregation runs for ``params.layers``
    rounds. Row order follows the corpus; the result is deterministic.
    """
    ids = corpus.ids()
    if message_emb.ids != ids:
        raise ValueError("embeddings must be aligned to corpus order "
                         "(use ingest.attach_embeddings)")
    x = np.concatenate(
        [message_emb.values.astype(np.float64), temporal_features(corpus)], axis=1)

    row_of = {mid: i for i, mid in enumerate(ids)}
    user_nbrs = []
    entity_nbrs = []
    for mid in ids:
        u, e = neighborhood(graph, mid)
        user_nbrs.append(np.array([row_of[m] for m in u], dtype=np.intp))
        entity_nbrs.append(np.array([row_of[m] for m in e], dtype=np.intp))

    for _ in range(params.layers):
        out = params.w_self * x
        for i in range(len(ids)):
            if user_nbrs[i].size:
                out[i] += params.w_user * x[user_nbrs[i]].mean(axis=0)
            if entity_nbrs[i].size:
                out[i] += params.w_entity * x[entity_nbrs[i]].mean(axis=0)
        x = _normalize_rows(out)
    return EmbeddingMatrix(ids, x)


def user_vectors(graph: HeteroGraph, aligned: AlignedDataset) -> EmbeddingMatrix:
    """User node vectors: mean of the user's message embeddings with the
    2-value location pair appended (zeros when no location is known).
    Used for graph inspection; fusion aggregates message rows directly."""
    emb = aligned.embeddings
    locations = {}
    for m in aligned.corpus.messages:
        if m.user_id not in locations and m.location:
            locations[m.user_id] = m.location
    users = sorted(graph.user_messages)
    out = np.zeros((len(users), emb.dim + 2))
    for i, user in enumerate(users):
        rows = np.stack([emb.row(mid) for mid in graph.user_messages[user]])
        out[i, :emb.dim] = rows.mean(axis=0)
        out[i, emb.dim:] = location_pair(locations.get(user))
    return EmbeddingMatrix(users, out)


def entity_vectors(graph: HeteroGraph, aligned: AlignedDataset) -> EmbeddingMatrix:
    """Entity node vectors: mean of the embeddings of messages mentioning
    the entity."""
    emb = aligned.embeddings
    keys = sorted(graph.entity_messages)
    out = np.zeros((len(keys), emb.dim))
    for i, key in enumerate(keys):
        rows = np.stack([emb.row(mid) for mid in graph.entity_messages[key]])
        out[i] = rows.mean(axis=0)
    return EmbeddingMatrix([graph.entity_names[k] for k in keys], out)
