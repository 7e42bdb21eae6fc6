"""Shared domain types, the deterministic RNG contract, splits, and the
SEDEMB01 binary embedding format.

Everything here is immutable after construction and safe to share across
threads. Random state is never shared: parallel work derives its own
:class:`RngStream` from a (seed, stream_id) pair.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, replace

import numpy as np

EMBEDDING_MAGIC = b"SEDEMB01"
MODEL_MAGIC = b"SEDMDL01"

_U32 = struct.Struct("<I")


class EmbeddingFormatError(ValueError):
    """Base class for SEDEMB01 format violations."""


class BadMagicError(EmbeddingFormatError):
    pass


class TruncatedPayloadError(EmbeddingFormatError):
    pass


class NonFinitePayloadError(EmbeddingFormatError):
    pass


@dataclass(frozen=True)
class Origin:
    """Provenance of an augmented message: which strategy produced it and
    from which original message."""

    strategy: str
    source_id: str


@dataclass(frozen=True)
class Message:
    """One social post. ``origin`` is None for original messages."""

    id: str
    text: str
    user_id: str
    timestamp: int
    entities: tuple[str, ...] = ()
    location: str | None = None
    label: int | None = None
    origin: Origin | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("message id must be nonempty")
        if self.label is not None and self.label < 0:
            raise ValueError(f"message {self.id!r}: label must be >= 0, got {self.label}")
        # tolerate lists from callers; store a hashable tuple
        if not isinstance(self.entities, tuple):
            object.__setattr__(self, "entities", tuple(self.entities))

    @property
    def is_original(self) -> bool:
        return self.origin is None

    def derive(self, new_id: str, new_text: str, origin: Origin) -> "Message":
        """New message with fresh id/text/origin; all other metadata copied."""
        return replace(self, id=new_id, text=new_text, origin=origin)


class EmbeddingMatrix:
    """Dense row-per-item float32 matrix with ids aligned to rows.

    Values are stored as 32-bit floats (matches common encoder output
    precision and halves file size). All values must be finite.
    """

    def __init__(self, ids, values):
        values = np.asarray(values, dtype=np.float32)
        if values.ndim != 2:
            raise ValueError(f"values must be 2-D, got shape {values.shape}")
        ids = list(ids)
        if len(ids) != values.shape[0]:
            raise ValueError(f"{len(ids)} ids for {values.shape[0]} rows")
        if len(set(ids)) != len(ids):
            raise ValueError("ids must be unique")
        if values.size and not np.isfinite(values).all():
            raise NonFinitePayloadError("embedding values must be finite")
        self.ids: list[str] = ids
        self.values: np.ndarray = values
        self._index = {item_id: i for i, item_id in enumerate(ids)}

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def row(self, item_id: str) -> np.ndarray:
        return self.values[self._index[item_id]]

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._index

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingMatrix):
            return NotImplemented
        return self.ids == other.ids and np.array_equal(self.values, other.values)

    def __repr__(self) -> str:
        return f"EmbeddingMatrix(rows={self.rows}, dim={self.dim})"

    def reindex(self, ids) -> "EmbeddingMatrix":
        """Rows reordered to the given id sequence (all ids must exist)."""
        ids = list(ids)
        idx = [self._index[i] for i in ids]
        return EmbeddingMatrix(ids, self.values[idx])


@dataclass(frozen=True)
class SplitSpec:
    """Train/val/test ratios (must sum to 1) plus the shuffle seed."""

    train_ratio: float = 0.7
    val_ratio: float = 0.1
    test_ratio: float = 0.2
    seed: int = 0

    def __post_init__(self):
        for name, r in (("train_ratio", self.train_ratio),
                        ("val_ratio", self.val_ratio),
                        ("test_ratio", self.test_ratio)):
            if not (0.0 < r < 1.0):
                raise ValueError(f"{name} must be in (0,1), got {r}")
        if abs(self.train_ratio + self.val_ratio + self.test_ratio - 1.0) > 1e-9:
            raise ValueError("ratios must sum to 1 within 1e-9")


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream identified by (seed, stream_id).

    The generator algorithm is pinned to numpy's PCG64 seeded through
    SeedSequence(entropy=seed, spawn_key=(stream_id, *indices)), which is
    specified bit-exactly and stable across platforms. Equal identifiers
    yield equal draw sequences on every run.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        return self.derive()

    def derive(self, *indices: int) -> np.random.Generator:
        """Independent generator for a sub-task, e.g. derive(epoch, batch)."""
        seq = np.random.SeedSequence(entropy=self.seed,
                                     spawn_key=(self.stream_id, *indices))
        return np.random.Generator(np.random.PCG64(seq))

    def substream(self, stream_id: int) -> "RngStream":
        return RngStream(seed=self.seed, stream_id=stream_id)


def split(ids, labels, spec: SplitSpec):
    """Partition ids into (train, val, test) lists.

    Deterministic shuffle by ``spec.seed``, then a contiguous partition with
    sizes floor(n * ratio); remainder rows go to train (maximizes training
    data, deterministic). Labels are only checked for alignment; the split
    is not stratified.
    """
    ids = list(ids)
    labels = list(labels)
    if len(ids) != len(labels):
        raise ValueError(f"{len(ids)} ids but {len(labels)} labels")
    n = len(ids)
    # floor of the mathematical product; the epsilon guards against cases
    # like 100 * 0.29 = 28.999999999999996
    n_train = int(math.floor(n * spec.train_ratio + 1e-9))
    n_val = int(math.floor(n * spec.val_ratio + 1e-9))
    n_test = int(math.floor(n * spec.test_ratio + 1e-9))
    n_train += n - (n_train + n_val + n_test)

    order = RngStream(spec.seed).generator().permutation(n)
    shuffled = [ids[i] for i in order]
    train = shuffled[:n_train]
    val = shuffled[n_train:n_train + n_val]
    test = shuffled[n_train + n_val:]
    return train, val, test


def write_embeddings(m: EmbeddingMatrix, path) -> None:
    """Write a matrix in SEDEMB01 format.

    Layout: magic "SEDEMB01", rows (u32 LE), dim (u32 LE), one
    length-prefixed (u32 LE) UTF-8 id per row, then rows*dim float32 LE
    row-major.
    """
    if m.values.size and not np.isfinite(m.values).all():
        raise NonFinitePayloadError("refusing to write non-finite values")
    payload = np.ascontiguousarray(m.values, dtype="<f4").tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(EMBEDDING_MAGIC)
            fh.write(_U32.pack(m.rows))
            fh.write(_U32.pack(m.dim))
            for item_id in m.ids:
                raw = item_id.encode("utf-8")
                fh.write(_U32.pack(len(raw)))
                fh.write(raw)
            fh.write(payload)
    except OSError as exc:
        raise OSError(f"cannot write embeddings to {path}: {exc}") from exc


def read_embeddings(path) -> EmbeddingMatrix:
    """Inverse of :func:`write_embeddings`; validates magic, lengths and
    finiteness with distinct error categories."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read embeddings from {path}: {exc}") from exc

    if len(blob) < 16 or blob[:8] != EMBEDDING_MAGIC:
        raise BadMagicError(
            f"{path}: expected magic {EMBEDDING_MAGIC!r}, got {blob[:8]!r}")
    rows = _U32.unpack_from(blob, 8)[0]
    dim = _U32.unpack_from(blob, 12)[0]

    offset = 16
    ids = []
    for _ in range(rows):
        if offset + 4 > len(blob):
            raise TruncatedPayloadError(f"{path}: id table truncated at byte {offset}")
        (id_len,) = _U32.unpack_from(blob, offset)
        offset += 4
        if offset + id_len > len(blob):
            raise TruncatedPayloadError(f"{path}: id table truncated at byte {offset}")
        ids.append(blob[offset:offset + id_len].decode("utf-8"))
        offset += id_len

    expected = rows * dim * 4
    actual = len(blob) - offset
    if actual != expected:
        raise TruncatedPayloadError(
            f"{path}: expected {expected} payload bytes, found {actual}")
    values = np.frombuffer(blob, dtype="<f4", count=rows * dim, offset=offset)
    values = values.reshape(rows, dim)
    if values.size and not np.isfinite(values).all():
        raise NonFinitePayloadError(f"{path}: payload contains NaN or Inf")
    return EmbeddingMatrix(ids, values)
