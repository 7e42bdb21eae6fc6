"""LLM-backed text augmentation: five strategies, deterministic offline
mocks, an on-disk response cache, and corpus-level orchestration.

Strategies (CLI spelling in parentheses):

* paraphrase (``paraphrase``) -- reword, same meaning.
* add context (``add-context``) -- expand with a short relevant detail.
* style transfer (``style-transfer``) -- change tone/formality only.
* keep entity (``keep-entity``) -- reword but leave listed entities
  untouched; outputs failing the preservation check are rejected.
* extract & rewrite (``extract-rewrite:keywords|entities|kg``) -- a
  two-stage prompt that first extracts key material, then rewrites from it.

The provider protocol is a chat-completion-style HTTP POST with JSON body
``{model, messages, max_tokens, temperature}``; any compatible endpoint
works. Mock providers are deterministic functions of the prompt, which
embeds the source text between ``<<<`` and ``>>>`` markers.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .core import Message, Origin, SplitSpec, split
from .ingest import Corpus

TEMPLATE_VERSION = "1"

SOURCE_OPEN = "<<<"
SOURCE_CLOSE = ">>>"

EXTRACT_VARIANTS = ("keywords", "entities", "knowledge_graph")

_CLI_NAMES = {
    ("paraphrase", None): "paraphrase",
    ("add_context", None): "add-context",
    ("style_transfer", None): "style-transfer",
    ("keep_entity", None): "keep-entity",
    ("extract_rewrite", "keywords"): "extract-rewrite:keywords",
    ("extract_rewrite", "entities"): "extract-rewrite:entities",
    ("extract_rewrite", "knowledge_graph"): "extract-rewrite:kg",
}
_FROM_CLI = {v: k for k, v in _CLI_NAMES.items()}


class ProviderError(RuntimeError):
    """Provider unreachable or failing after all retries."""


class AugmentationRejected(RuntimeError):
    """The response was unusable (empty, or it broke a required entity)."""


@dataclass(frozen=True)
class Strategy:
    kind: str
    variant: str | None = None

    def __post_init__(self):
        if (self.kind, self.variant) not in _CLI_NAMES:
            raise ValueError(f"unknown strategy {self.kind!r}/{self.variant!r}")

    @property
    def cli_name(self) -> str:
        return _CLI_NAMES[(self.kind, self.variant)]

    @property
    def token(self) -> str:
        """Filesystem/id-safe spelling."""
        return self.cli_name.replace(":", "-")

    @staticmethod
    def from_cli_name(name: str) -> "Strategy":
        if name not in _FROM_CLI:
            raise ValueError(
                f"unknown strategy {name!r}; expected one of {sorted(_FROM_CLI)}")
        kind, variant = _FROM_CLI[name]
        return Strategy(kind, variant)


PARAPHRASE = Strategy("paraphrase")
ADD_CONTEXT = Strategy("add_context")
STYLE_TRANSFER = Strategy("style_transfer")
KEEP_ENTITY = Strategy("keep_entity")


def extract_rewrite(variant: str) -> Strategy:
    return Strategy("extract_rewrite", variant)


ALL_STRATEGIES = (PARAPHRASE, ADD_CONTEXT, STYLE_TRANSFER, KEEP_ENTITY,
                  extract_rewrite("keywords"))


@dataclass(frozen=True)
class ProviderConfig:
    endpoint: str = ""
    model: str = "gpt-4o-mini"
    max_tokens: int = 1000
    temperature: float = 1.0
    auth_env: str = "EVENTAUG_API_TOKEN"
    max_retries: int = 3
    max_in_flight: int = 4

    def __post_init__(self):
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")


@dataclass(frozen=True)
class AugmentationRecord:
    source_id: str
    strategy: str
    prompt: str
    raw_response: str
    text: str
    model: str
    latency_ms: float
    cache_key: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @staticmethod
    def from_dict(obj: dict) -> "AugmentationRecord":
        return AugmentationRecord(**obj)


_PREAMBLE = ("You augment social media messages for event detection "
             "training data. Reply with the rewritten message only, no "
             "explanations.")

_SINGLE_STAGE = {
    "paraphrase": ("Rephrase the message below in different words and "
                   "sentence structure while keeping exactly the same "
                   "meaning."),
    "add_context": ("Expand the message below by adding one short piece of "
                    "relevant contextual information that makes it clearer; "
                    "keep the original content intact."),
    "style_transfer": ("Rewrite the message below in a clearly different "
                       "style (for example change its tone or formality) "
                       "without altering its core meaning."),
}

_EXTRACT_STEP = {
    "keywords": ("Step 1: using your background knowledge, extract the most "
                 "informative keywords from the message below."),
    "entities": ("Step 1: extract the key entities (names, locations, "
                 "dates) from the message below."),
    "knowledge_graph": ("Step 1: extract the entities in the message below "
                        "and the relationships between them as knowledge-"
                        "graph triples."),
}

_REWRITE_STEP = ("Step 2: rewrite the message as a new, differently worded "
                 "message built around what you extracted, preserving the "
                 "essential information. Reply with the rewritten message "
                 "only.")


def render_prompt(strategy: Strategy, message: Message) -> str:
    """Deterministic template fill for the given strategy.

    The source text always sits between the <<< and >>> markers.
    keep-entity prompts list the message entities verbatim in a
    do-not-change section; extract-rewrite prompts carry both the
    extraction and the rewrite instruction.
    """
    if not message.text.strip():
        raise ValueError("cannot augment an empty message")
    source = f"Message: {SOURCE_OPEN}{message.text}{SOURCE_CLOSE}"
    if strategy.kind in _SINGLE_STAGE:
        return "\n".join([_PREAMBLE, _SINGLE_STAGE[strategy.kind], source])
    if strategy.kind == "keep_entity":
        entities = ", ".join(message.entities) if message.entities else "(none)"
        instruction = ("Rewrite the message below with different wording. "
                       "The following entities must remain unchanged and "
                       f"appear verbatim in your rewrite: {entities}.")
        return "\n".join([_PREAMBLE, instruction, source])
    if strategy.kind == "extract_rewrite":
        return "\n".join([_PREAMBLE, _EXTRACT_STEP[strategy.variant],
                          _REWRITE_STEP, source])
    raise ValueError(f"unhandled strategy {strategy!r}")


_FENCE = re.compile(r"^```[a-zA-Z0-9]*\n(.*?)\n?```$", re.DOTALL)


def clean_response(raw: str) -> str:
    """Strip markdown fences and surrounding quotes, collapse whitespace."""
    text = raw.strip()
    fence = _FENCE.match(text)
    if fence:
        text = fence.group(1).strip()
    while len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        text = text[1:-1].strip()
    return re.sub(r"\s+", " ", text).strip()


def check_entity_preservation(source: Message, augmented) -> bool:
    """True iff every source entity appears case-insensitively in the
    augmented text (substring match; vacuously true without entities)."""
    text = augmented.text if isinstance(augmented, Message) else augmented
    haystack = text.lower()
    return all(entity.lower() in haystack for entity in source.entities)


class EchoProvider:
    """Deterministic mock: returns the source text embedded in the prompt."""

    def complete(self, prompt: str) -> str:
        start = prompt.find(SOURCE_OPEN)
        end = prompt.rfind(SOURCE_CLOSE)
        if start < 0 or end <= start:
            raise ProviderError("prompt carries no source markers")
        return prompt[start + len(SOURCE_OPEN):end]


class ShuffleProvider:
    """Deterministic mock keyed on the prompt hash: rotates the source words
    so the output is a different string with the same vocabulary."""

    def complete(self, prompt: str) -> str:
        source = EchoProvider().complete(prompt)
        words = source.split()
        if len(words) < 2:
            return source
        turn = int(hashlib.sha256(prompt.encode("utf-8")).hexdigest(), 16)
        k = 1 + turn % (len(words) - 1)
        return " ".join(words[k:] + words[:k])


class DropEntityProvider:
    """Fault-injection mock: echoes the source text with one entity removed,
    which must trip the keep-entity preservation check."""

    def __init__(self, entity: str):
        self.entity = entity

    def complete(self, prompt: str) -> str:
        source = EchoProvider().complete(prompt)
        pattern = re.compile(re.escape(self.entity), re.IGNORECASE)
        return pattern.sub("", source)


class FailingProvider:
    """Fault-injection mock: fails for selected source ids."""

    def __init__(self, inner, fail_when):
        self.inner = inner
        self.fail_when = fail_when

    def complete(self, prompt: str) -> str:
        if self.fail_when(prompt):
            raise ProviderError("injected failure")
        return self.inner.complete(prompt)


class HttpProvider:
    """Chat-completion-style HTTP client with bounded retries."""

    def __init__(self, config: ProviderConfig):
        if not config.endpoint:
            raise ValueError("provider endpoint not configured")
        self.config = config

    def build_payload(self, prompt: str) -> dict:
        return {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "max_tokens": self.config.max_tokens,
            "temperature": self.config.temperature,
        }

    def complete(self, prompt: str) -> str:
        body = json.dumps(self.build_payload(prompt)).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.config.auth_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        last_error = None
        for attempt in range(self.config.max_retries):
            try:
                request = urllib.request.Request(
                    self.config.endpoint, data=body, headers=headers, method="POST")
                with urllib.request.urlopen(request, timeout=60) as response:
                    payload = json.loads(response.read().decode("utf-8"))
                return payload["choices"][0]["message"]["content"]
            except (urllib.error.URLError, OSError, KeyError, IndexError,
                    json.JSONDecodeError) as exc:
                last_error = exc
                if attempt + 1 < self.config.max_retries:
                    time.sleep(min(2.0, 0.1 * 2 ** attempt))
        raise ProviderError(
            f"provider failed after {self.config.max_retries} attempts: {last_error}")


class ResponseCache:
    """One JSON file per cache key. Inserts are atomic (write + rename) so
    concurrent writers of distinct keys never corrupt each other."""

    def __init__(self, directory):
        self.directory = str(directory)
        try:
            os.makedirs(self.directory, exist_ok=True)
            probe = os.path.join(self.directory, ".write-probe")
            with open(probe, "w") as fh:
                fh.write("ok")
            os.remove(probe)
        except OSError as exc:
            raise OSError(f"cache directory {self.directory} not writable: {exc}") from exc

    def _path(self, key: str) -> str:
        return os.path.join(self.directory, f"{key}.json")

    def get(self, key: str) -> AugmentationRecord | None:
        try:
            with open(self._path(key), "r", encoding="utf-8") as fh:
                return AugmentationRecord.from_dict(json.load(fh))
        except FileNotFoundError:
            return None

    def put(self, record: AugmentationRecord) -> None:
        path = self._path(record.cache_key)
        tmp = f"{path}.tmp.{os.getpid()}.{id(record)}"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(record.to_dict(), fh, ensure_ascii=False, indent=2)
        os.replace(tmp, path)


def cache_key(strategy: Strategy, source_text: str) -> str:
    """Stable hash of (strategy descriptor, template version, source text).
    Template wording changes bump TEMPLATE_VERSION and so invalidate the
    cache."""
    blob = json.dumps([strategy.cli_name, TEMPLATE_VERSION, source_text],
                      ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def augment_message(provider, strategy: Strategy, message: Message,
                    rng=None, new_id: str | None = None) -> Message:
    """One augmented variant of an original message.

    The returned message carries a fresh id, origin=(strategy, source id),
    the cleaned response as text, and every other field copied from the
    source. Empty responses and keep-entity responses that drop an entity
    raise AugmentationRejected. ``rng`` is reserved for providers that
    sample; the bundled mocks ignore it.
    """
    if message.origin is not None:
        raise ValueError(f"message {message.id!r} is already augmented")
    prompt = render_prompt(strategy, message)
    text = clean_response(provider.complete(prompt))
    if not text:
        raise AugmentationRejected(f"{message.id}: empty response")
    if strategy.kind == "keep_entity" and not check_entity_preservation(message, text):
        raise AugmentationRejected(
            f"{message.id}: response dropped a required entity")
    if new_id is None:
        new_id = f"{message.id}__{strategy.token}_0"
    return message.derive(new_id, text,
                          Origin(strategy=strategy.cli_name, source_id=message.id))


@dataclass
class AugmentResult:
    corpus: Corpus
    originals: int
    generated: int
    skipped: int
    cache_hits: int
    provider_calls: int
    failures: list


def _run_task(task, provider, cache, model_name):
    """Worker for one (message, strategy, copy) task. Returns
    (message-or-None, failure-or-None, called_provider, cache_hit).
    Failures are (source_id, strategy, reason, kind) with kind in
    {"provider", "rejected"}."""
    message, strategy, copy_idx, new_id = task
    key = cache_key(strategy, message.text)
    record = cache.get(key) if cache is not None else None
    called = False
    if record is None:
        prompt = render_prompt(strategy, message)
        started = time.perf_counter()
        called = True
        try:
            raw = provider.complete(prompt)
        except ProviderError as exc:
            return None, (message.id, strategy.cli_name, str(exc), "provider"), called, False
        latency = (time.perf_counter() - started) * 1000.0
        record = AugmentationRecord(
            source_id=message.id, strategy=strategy.cli_name, prompt=prompt,
            raw_response=raw, text=clean_response(raw), model=model_name,
            latency_ms=latency, cache_key=key)
        usable = bool(record.text) and (
            strategy.kind != "keep_entity"
            or check_entity_preservation(message, record.text))
        if usable and cache is not None:
            cache.put(record)
    hit = not called
    if not record.text:
        return None, (message.id, strategy.cli_name, "empty response", "rejected"), called, hit
    if strategy.kind == "keep_entity" and not check_entity_preservation(message, record.text):
        return None, (message.id, strategy.cli_name, "dropped required entity",
                      "rejected"), called, hit
    out = message.derive(new_id, record.text,
                         Origin(strategy=strategy.cli_name, source_id=message.id))
    return out, None, called, hit


def augment_corpus(corpus: Corpus, strategies, provider,
                   cache_dir=None, copies_per_strategy: int = 1,
                   split_spec: SplitSpec | None = None,
                   max_in_flight: int = 1,
                   model_name: str = "mock") -> AugmentResult:
    """Generate variants for every original message and combine them with
    the input corpus.

    Cached responses are reused (resumable); per-message failures are
    logged in the result and skipped, never fatal. When a split spec is
    supplied only training-split originals are augmented, keeping the
    validation and test splits free of derived text. Results merge in
    source-message order regardless of request concurrency.
    """
    strategies = list(strategies)
    cache = ResponseCache(cache_dir) if cache_dir is not None else None
    originals = corpus.originals()
    targets = originals
    if split_spec is not None:
        train_ids, _, _ = split([m.id for m in originals],
                                [m.label for m in originals], split_spec)
        keep = set(train_ids)
        targets = [m for m in originals if m.id in keep]

    existing = {m.id for m in corpus.messages}
    tasks = []
    for message in targets:
        for strategy in strategies:
            for copy_idx in range(copies_per_strategy):
                new_id = f"{message.id}__{strategy.token}_{copy_idx}"
                if new_id in existing:
                    continue  # idempotent rerun on an already-augmented corpus
                tasks.append((message, strategy, copy_idx, new_id))

    if max_in_flight > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
            outcomes = list(pool.map(
                lambda t: _run_task(t, provider, cache, model_name), tasks))
    else:
        outcomes = [_run_task(t, provider, cache, model_name) for t in tasks]

    new_messages = []
    failures = []
    cache_hits = 0
    provider_calls = 0
    for message, failure, called, hit in outcomes:
        provider_calls += int(called)
        cache_hits += int(hit)
        if message is not None:
            new_messages.append(message)
        else:
            failures.append(failure)

    combined = Corpus(messages=tuple(corpus.messages) + tuple(new_messages),
                      class_names=corpus.class_names)
    return AugmentResult(corpus=combined, originals=len(originals),
                         generated=len(new_messages), skipped=len(failures),
                         cache_hits=cache_hits, provider_calls=provider_calls,
                         failures=failures)
