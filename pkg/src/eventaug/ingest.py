"""Corpus parsing and validation, fallback entity extraction, and alignment
of externally computed text embeddings.

Corpora are JSON-Lines files, one message object per line with keys
``id, text, user_id, timestamp, entities, location?, label?, origin?``.
Text encoding happens out of process; embeddings arrive as SEDEMB01 files.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass

import numpy as np

from .core import EmbeddingMatrix, Message, Origin

SECONDS_PER_DAY = 86400


class CorpusError(ValueError):
    """Corpus-level validation failure; ``problems`` lists line-numbered issues."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class Corpus:
    """Immutable snapshot of messages. num_classes is 1 + the largest label."""

    messages: tuple[Message, ...]
    class_names: tuple[str, ...] | None = None

    def __post_init__(self):
        if not isinstance(self.messages, tuple):
            object.__setattr__(self, "messages", tuple(self.messages))
        ids = set()
        original_ids = set()
        problems = []
        for m in self.messages:
            if m.id in ids:
                problems.append(f"duplicate id {m.id!r}")
            ids.add(m.id)
            if m.origin is None:
                original_ids.add(m.id)
        for m in self.messages:
            if m.origin is not None and m.origin.source_id not in original_ids:
                problems.append(
                    f"message {m.id!r}: augmented source {m.origin.source_id!r} "
                    "is not an original message in this corpus")
        if problems:
            raise CorpusError(problems)

    @property
    def num_classes(self) -> int:
        labels = [m.label for m in self.messages if m.label is not None]
        return 1 + max(labels) if labels else 0

    def __len__(self) -> int:
        return len(self.messages)

    def ids(self) -> list[str]:
        return [m.id for m in self.messages]

    def originals(self) -> list[Message]:
        return [m for m in self.messages if m.is_original]

    def get(self, message_id: str) -> Message:
        for m in self.messages:
            if m.id == message_id:
                return m
        raise KeyError(message_id)


@dataclass(frozen=True)
class AlignedDataset:
    """A corpus plus its embedding matrix with rows in corpus order."""

    corpus: Corpus
    embeddings: EmbeddingMatrix


def _message_from_obj(obj: dict, line_no: int) -> Message:
    try:
        origin = None
        if obj.get("origin") is not None:
            origin = Origin(strategy=str(obj["origin"]["strategy"]),
                            source_id=str(obj["origin"]["source_id"]))
        label = obj.get("label")
        if label is not None:
            if not isinstance(label, int) or isinstance(label, bool):
                raise ValueError(f"label must be an integer, got {label!r}")
        return Message(
            id=str(obj["id"]),
            text=str(obj["text"]),
            user_id=str(obj["user_id"]),
            timestamp=int(obj["timestamp"]),
            entities=tuple(str(e) for e in obj.get("entities", [])),
            location=obj.get("location"),
            label=label,
            origin=origin,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"line {line_no}: {exc}") from exc


def parse_corpus(path) -> Corpus:
    """Parse a JSONL corpus, collecting every problem before failing.

    Raises CorpusError listing malformed lines (with line numbers),
    duplicate ids (citing both lines), and dangling augmented source ids.
    """
    messages = []
    problems = []
    first_line = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                problems.append(f"line {line_no}: invalid JSON ({exc.msg})")
                continue
            try:
                msg = _message_from_obj(obj, line_no)
            except ValueError as exc:
                problems.append(str(exc))
                continue
            if msg.id in first_line:
                problems.append(
                    f"line {line_no}: duplicate id {msg.id!r} (first seen on line "
                    f"{first_line[msg.id]})")
                continue
            first_line[msg.id] = line_no
            messages.append(msg)

    known_originals = {m.id for m in messages if m.origin is None}
    for m in messages:
        if m.origin is not None and m.origin.source_id not in known_originals:
            problems.append(
                f"message {m.id!r}: augmented source {m.origin.source_id!r} "
                "is not an original message")
    if problems:
        raise CorpusError(problems)
    return Corpus(messages=tuple(messages))


def write_corpus(corpus: Corpus, path) -> None:
    """Write messages as JSONL; inverse of parse_corpus for valid corpora."""
    with open(path, "w", encoding="utf-8") as fh:
        for m in corpus.messages:
            obj = {
                "id": m.id,
                "text": m.text,
                "user_id": m.user_id,
                "timestamp": m.timestamp,
                "entities": list(m.entities),
            }
            if m.location is not None:
                obj["location"] = m.location
            if m.label is not None:
                obj["label"] = m.label
            if m.origin is not None:
                obj["origin"] = {"strategy": m.origin.strategy,
                                 "source_id": m.origin.source_id}
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


_HASHTAG = re.compile(r"#(\w+)")


def _strip_token(token: str) -> str:
    return token.strip("\"'.,;:!?()[]{}<>#@&*~`|\\/")


def naive_entities(text: str) -> list[str]:
    """Fallback entity extraction when a corpus lacks annotations.

    Collects hashtag tokens (leading '#' stripped) and maximal runs of
    capitalized words, scanning left to right. Hashtags break runs.
    Deduplicated case-insensitively, first casing and first occurrence
    order preserved. Pure and deterministic.
    """
    entities: list[str] = []
    seen: set[str] = set()

    def emit(entity: str):
        key = entity.lower()
        if key not in seen:
            seen.add(key)
            entities.append(entity)

    run: list[str] = []

    def flush_run():
        if run:
            emit(" ".join(run))
            run.clear()

    for token in text.split():
        stripped = _strip_token(token)
        if token.startswith("#"):
            flush_run()
            m = _HASHTAG.match(token)
            if m:
                emit(m.group(1))
        elif stripped and stripped[0].isalpha() and stripped[0].isupper():
            run.append(stripped)
        else:
            flush_run()
    flush_run()
    return entities


def with_entities(corpus: Corpus) -> Corpus:
    """Corpus with naive entities filled in wherever a message has none."""
    out = []
    for m in corpus.messages:
        if m.entities:
            out.append(m)
        else:
            out.append(Message(id=m.id, text=m.text, user_id=m.user_id,
                               timestamp=m.timestamp,
                               entities=tuple(naive_entities(m.text)),
                               location=m.location, label=m.label,
                               origin=m.origin))
    return Corpus(messages=tuple(out), class_names=corpus.class_names)


def attach_embeddings(corpus: Corpus, emb: EmbeddingMatrix) -> AlignedDataset:
    """Re-index embedding rows to corpus order; every message id must be present."""
    if emb.dim == 0:
        raise ValueError("embedding dimensionality must be positive")
    missing = [m.id for m in corpus.messages if m.id not in emb]
    if missing:
        shown = ", ".join(repr(i) for i in missing[:10])
        more = f" (+{len(missing) - 10} more)" if len(missing) > 10 else ""
        raise ValueError(f"embeddings missing {len(missing)} corpus ids: {shown}{more}")
    return AlignedDataset(corpus=corpus, embeddings=emb.reindex(corpus.ids()))


def temporal_features(corpus: Corpus) -> np.ndarray:
    """Two temporal values per message, each min-max scaled to [0, 1].

    Column 0: whole days since the corpus minimum timestamp.
    Column 1: seconds-of-day. Constant columns scale to zeros.
    """
    ts = np.array([m.timestamp for m in corpus.messages], dtype=np.int64)
    if ts.size == 0:
        return np.zeros((0, 2), dtype=np.float64)
    days = (ts - ts.min()) // SECONDS_PER_DAY
    secs = ts % SECONDS_PER_DAY
    out = np.zeros((ts.size, 2), dtype=np.float64)
    for col, vals in enumerate((days, secs)):
        lo, hi = vals.min(), vals.max()
        if hi > lo:
            out[:, col] = (vals - lo) / (hi - lo)
    return out


def location_pair(location: str | None) -> np.ndarray:
    """Deterministic 2-value encoding of a location string, each in [0, 1].

    Derived from a sha256 digest so the encoding is stable across platforms
    and runs; zeros when the location is absent.
    """
    if not location:
        return np.zeros(2, dtype=np.float64)
    digest = hashlib.sha256(location.encode("utf-8")).digest()
    a = int.from_bytes(digest[:4], "little") / 2**32
    b = int.from_bytes(digest[4:8], "little") / 2**32
    return np.array([a, b], dtype=np.float64)
