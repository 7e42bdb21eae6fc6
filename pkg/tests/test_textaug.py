import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from eventaug.core import SplitSpec
from eventaug.ingest import Corpus
from eventaug.textaug import (ALL_STRATEGIES, ADD_CONTEXT, KEEP_ENTITY,
                              PARAPHRASE, STYLE_TRANSFER, AugmentationRejected,
                              DropEntityProvider, EchoProvider,
                              FailingProvider, HttpProvider, ProviderConfig,
                              ProviderError, ResponseCache, ShuffleProvider,
                              Strategy, augment_corpus, augment_message,
                              cache_key, check_entity_preservation,
                              clean_response, extract_rewrite, render_prompt)

from conftest import make_message


class CountingProvider:
    def __init__(self, inner):
        self.inner = inner
        self.calls = 0
        self.lock = threading.Lock()

    def complete(self, prompt):
        with self.lock:
            self.calls += 1
        return self.inner.complete(prompt)


def small_corpus(n=10):
    return Corpus(messages=tuple(
        make_message(f"m{i}", text=f"storm hits Miami beach number {i}",
                     entities=["Miami"], label=i % 2) for i in range(n)))


class TestStrategy:
    def test_exactly_five_kinds(self):
        kinds = {s.kind for s in ALL_STRATEGIES}
        assert kinds == {"paraphrase", "add_context", "style_transfer",
                         "keep_entity", "extract_rewrite"}
        assert len(ALL_STRATEGIES) == 5

    def test_cli_round_trip(self):
        for name in ("paraphrase", "add-context", "style-transfer",
                     "keep-entity", "extract-rewrite:keywords",
                     "extract-rewrite:entities", "extract-rewrite:kg"):
            assert Strategy.from_cli_name(name).cli_name == name

    def test_unknown_names_rejected(self):
        with pytest.raises(ValueError):
            Strategy.from_cli_name("backtranslate")
        with pytest.raises(ValueError):
            Strategy("extract_rewrite", "emojis")


class TestRenderPrompt:
    def test_byte_stable(self):
        msg = make_message("m1", "storm hits Miami")
        assert render_prompt(PARAPHRASE, msg) == render_prompt(PARAPHRASE, msg)
        assert "storm hits Miami" in render_prompt(PARAPHRASE, msg)

    def test_keep_entity_lists_entities(self):
        msg = make_message("m1", "storm hits Miami", entities=["Miami"])
        prompt = render_prompt(KEEP_ENTITY, msg)
        assert "Miami" in prompt
        assert "remain unchanged" in prompt

    def test_extract_rewrite_has_two_stages(self):
        msg = make_message("m1", "storm hits Miami")
        for variant in ("keywords", "entities", "knowledge_graph"):
            prompt = render_prompt(extract_rewrite(variant), msg)
            assert "Step 1" in prompt and "Step 2" in prompt

    def test_empty_text_rejected(self):
        with pytest.raises(ValueError):
            render_prompt(PARAPHRASE, make_message("m1", "   "))


class TestCleanResponse:
    def test_strips_fences_and_quotes(self):
        assert clean_response('```text\n"hello  world"\n```') == "hello world"

    def test_collapses_whitespace(self):
        assert clean_response("a\n\n  b\tc") == "a b c"


class TestEntityPreservation:
    def test_case_insensitive_match(self):
        src = make_message("m1", "x", entities=["Nobel Prize"])
        assert check_entity_preservation(src, "they won the nobel prize today")

    def test_missing_entity(self):
        src = make_message("m1", "x", entities=["Bolivia"])
        assert not check_entity_preservation(src, "somewhere else entirely")

    def test_empty_entities_vacuous(self):
        src = make_message("m1", "x", entities=[])
        assert check_entity_preservation(src, "anything")


class TestAugmentMessage:
    def test_echo_preserves_everything(self):
        msg = make_message("m1", "storm hits Miami", entities=["Miami"],
                           location="FL", label=3)
        out = augment_message(EchoProvider(), PARAPHRASE, msg)
        assert out.text == msg.text
        assert out.id != msg.id
        assert out.origin.strategy == "paraphrase"
        assert out.origin.source_id == "m1"
        for attr in ("user_id", "timestamp", "entities", "location", "label"):
            assert getattr(out, attr) == getattr(msg, attr)

    def test_keep_entity_rejects_dropped_entity(self):
        msg = make_message("m1", "storm hits Miami", entities=["Miami"])
        with pytest.raises(AugmentationRejected):
            augment_message(DropEntityProvider("Miami"), KEEP_ENTITY, msg)

    def test_empty_response_rejected(self):
        class Silent:
            def complete(self, prompt):
                return "   "
        with pytest.raises(AugmentationRejected):
            augment_message(Silent(), PARAPHRASE, make_message("m1", "text"))

    def test_already_augmented_rejected(self):
        msg = make_message("m1", "text")
        out = augment_message(EchoProvider(), PARAPHRASE, msg)
        with pytest.raises(ValueError):
            augment_message(EchoProvider(), PARAPHRASE, out)

    def test_shuffle_mock_changes_text(self):
        msg = make_message("m1", "alpha beta gamma delta")
        out = augment_message(ShuffleProvider(), STYLE_TRANSFER, msg)
        assert out.text != msg.text
        assert sorted(out.text.split()) == sorted(msg.text.split())


class TestAugmentCorpus:
    def test_counts_one_strategy(self, tmp_path):
        corpus = small_corpus(10)
        result = augment_corpus(corpus, [PARAPHRASE], EchoProvider(),
                                cache_dir=tmp_path / "cache")
        assert len(result.corpus) == 20
        assert result.generated == 10
        assert result.skipped == 0

    def test_warm_cache_skips_provider(self, tmp_path):
        corpus = small_corpus(10)
        provider = CountingProvider(EchoProvider())
        augment_corpus(corpus, [PARAPHRASE], provider, cache_dir=tmp_path / "c")
        assert provider.calls == 10
        rerun = augment_corpus(corpus, [PARAPHRASE], provider,
                               cache_dir=tmp_path / "c")
        assert provider.calls == 10  # zero new calls
        assert rerun.cache_hits == 10
        assert rerun.provider_calls == 0
        assert rerun.generated == 10

    def test_failures_are_skipped_not_fatal(self, tmp_path):
        corpus = small_corpus(10)
        flaky = FailingProvider(EchoProvider(),
                                fail_when=lambda p: "number 3" in p or "number 7" in p)
        result = augment_corpus(corpus, [PARAPHRASE], flaky,
                                cache_dir=tmp_path / "c")
        assert result.generated == 8
        assert result.skipped == 2
        assert len(result.corpus) == 18
        assert all(kind == "provider" for _, _, _, kind in result.failures)

    def test_multiplicative_counts(self, tmp_path):
        corpus = small_corpus(4)
        result = augment_corpus(corpus, [PARAPHRASE, ADD_CONTEXT],
                                EchoProvider(), cache_dir=tmp_path / "c",
                                copies_per_strategy=2)
        # 4 originals * 2 strategies * 2 copies = 16 variants
        assert result.generated == 16
        assert len(result.corpus) == 4 + 16

    def test_split_restricts_to_training_messages(self, tmp_path):
        corpus = small_corpus(10)
        spec = SplitSpec(0.7, 0.1, 0.2, seed=5)
        result = augment_corpus(corpus, [PARAPHRASE], EchoProvider(),
                                cache_dir=tmp_path / "c", split_spec=spec)
        assert result.generated == 7
        from eventaug.core import split
        train_ids = set(split([m.id for m in corpus.messages],
                              [m.label for m in corpus.messages], spec)[0])
        for m in result.corpus.messages:
            if m.origin is not None:
                assert m.origin.source_id in train_ids

    def test_concurrent_run_matches_sequential(self, tmp_path):
        corpus = small_corpus(12)
        seq = augment_corpus(corpus, list(ALL_STRATEGIES), EchoProvider(),
                             cache_dir=tmp_path / "a")
        par = augment_corpus(corpus, list(ALL_STRATEGIES), EchoProvider(),
                             cache_dir=tmp_path / "b", max_in_flight=6)
        assert [m.id for m in seq.corpus.messages] == \
            [m.id for m in par.corpus.messages]
        assert seq.corpus == par.corpus

    def test_without_cache_dir(self):
        result = augment_corpus(small_corpus(3), [PARAPHRASE], EchoProvider())
        assert result.generated == 3


class TestCache:
    def test_key_depends_on_strategy_and_text(self):
        a = cache_key(PARAPHRASE, "hello")
        assert a == cache_key(PARAPHRASE, "hello")
        assert a != cache_key(ADD_CONTEXT, "hello")
        assert a != cache_key(PARAPHRASE, "other")

    def test_round_trip(self, tmp_path):
        from eventaug.textaug import AugmentationRecord
        cache = ResponseCache(tmp_path / "cache")
        record = AugmentationRecord(
            source_id="m1", strategy="paraphrase", prompt="p",
            raw_response="r", text="t", model="mock", latency_ms=1.5,
            cache_key="k" * 64)
        cache.put(record)
        assert cache.get("k" * 64) == record
        assert cache.get("missing") is None


class _Handler(BaseHTTPRequestHandler):
    fail_first = 0
    seen = []

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        type(self).seen.append((dict(self.headers), body))
        if type(self).fail_first > 0:
            type(self).fail_first -= 1
            self.send_response(500)
            self.end_headers()
            return
        prompt = body["messages"][0]["content"]
        reply = {"choices": [{"message": {
            "content": f"reworded: {EchoProvider().complete(prompt)}"}}]}
        payload = json.dumps(reply).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def http_endpoint():
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _Handler.seen = []
    _Handler.fail_first = 0
    yield f"http://127.0.0.1:{server.server_port}/v1/chat/completions"
    server.shutdown()


class TestHttpProvider:
    def test_payload_carries_default_token_limit(self):
        provider = HttpProvider(ProviderConfig(endpoint="http://example.invalid"))
        payload = provider.build_payload("hi")
        assert payload["max_tokens"] == 1000
        assert payload["messages"] == [{"role": "user", "content": "hi"}]
        assert set(payload) == {"model", "messages", "max_tokens", "temperature"}

    def test_round_trip_against_local_server(self, http_endpoint, monkeypatch):
        monkeypatch.setenv("EVENTAUG_API_TOKEN", "secret-token")
        provider = HttpProvider(ProviderConfig(endpoint=http_endpoint))
        msg = make_message("m1", "storm hits Miami")
        out = augment_message(provider, PARAPHRASE, msg)
        assert out.text == "reworded: storm hits Miami"
        headers, body = _Handler.seen[-1]
        assert body["max_tokens"] == 1000
        assert headers.get("Authorization") == "Bearer secret-token"

    def test_retries_after_failures(self, http_endpoint):
        _Handler.fail_first = 2
        provider = HttpProvider(ProviderConfig(endpoint=http_endpoint,
                                               max_retries=3))
        assert provider.complete(render_prompt(
            PARAPHRASE, make_message("m1", "x y z"))).startswith("reworded:")

    def test_exhausted_retries_raise(self, http_endpoint):
        _Handler.fail_first = 99
        provider = HttpProvider(ProviderConfig(endpoint=http_endpoint,
                                               max_retries=2))
        with pytest.raises(ProviderError):
            provider.complete(render_prompt(PARAPHRASE, make_message("m1", "x")))
