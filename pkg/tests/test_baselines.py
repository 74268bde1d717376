from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from ghostfilter.baselines import (
    CIRCUIT_BREAKER_FEATURES,
    HttpTransport,
    RecordedTransport,
    TransportError,
    UnparseableResponseError,
    build_llm_prompt,
    circuit_breaker_train,
    llm_evaluate,
    llm_predict,
    parse_llm_response,
    prompt_hash,
)
from ghostfilter.evaluation import compute_metrics
from ghostfilter.features import CATALOG, assemble_matrix
from ghostfilter.features.matrix import FeatureVector
from ghostfilter.logs import SyntheticConfig, generate_synthetic
from ghostfilter.model import TrainConfig

GOLDEN = Path(__file__).parent / "data" / "golden_prompt.txt"


def golden_vector() -> FeatureVector:
    return FeatureVector(
        event_id="golden", trigger_timestamp=1_736_121_600_000, label=False,
        values={
            "developer_generated_interval": 54321.125,
            "developer_accepted_ratio": 0.4166667,
            "project_preceding_lines": 37.5,
            "in-situ_IDE_version": 7.0,
        },
    )


class TestCircuitBreaker:
    def test_uses_exactly_the_six_single_event_numerics(self):
        assert CIRCUIT_BREAKER_FEATURES == (
            "in-situ_preceding_lines", "in-situ_preceding_chars",
            "in-situ_preceding_last_line_chars", "in-situ_generated_lines",
            "in-situ_generated_chars", "in-situ_generation_time",
        )
        assert all(name in CATALOG.names() for name in CIRCUIT_BREAKER_FEATURES)

    def test_separable_by_preceding_lines(self):
        # plant the label entirely in a single-event numeric the filter can see
        logs = generate_synthetic(SyntheticConfig(event_count=600, seed=21))
        from dataclasses import replace
        doctored = [
            replace(log, preceding_lines=200 if log.accepted else 5)
            for log in logs
        ]
        matrix = assemble_matrix(doctored)
        model = circuit_breaker_train(matrix, TrainConfig(epochs=200, learning_rate=1e-2, seed=0))
        probs = model.predict_proba_matrix(matrix.select(model.feature_names))
        accuracy = ((probs >= 0.5) == matrix.labels).mean()
        assert accuracy >= 0.95

    def test_deterministic(self):
        logs = generate_synthetic(SyntheticConfig(event_count=300, seed=22))
        matrix = assemble_matrix(logs)
        config = TrainConfig(epochs=5, seed=4)
        a = circuit_breaker_train(matrix, config)
        b = circuit_breaker_train(matrix, config)
        for wa, wb in zip(a.network.weights, b.network.weights):
            assert np.array_equal(wa, wb)

    def test_is_a_pure_logistic_scorer(self):
        logs = generate_synthetic(SyntheticConfig(event_count=300, seed=23))
        model = circuit_breaker_train(assemble_matrix(logs), TrainConfig(epochs=1))
        assert model.network.layer_sizes == [6, 1]


class TestPrompt:
    def test_each_marker_appears_once_in_definitions_and_once_in_payload(self):
        text = build_llm_prompt(golden_vector()).render()
        for name in golden_vector().values:
            assert text.count(f"[[{name}]]value[[/{name}]]") == 1
            assert text.count(f"[[{name}]]") == 2  # definition + payload
            assert text.count(f"[[/{name}]]") == 2

    def test_four_parts_in_order(self):
        text = build_llm_prompt(golden_vector()).render()
        instructions = text.index("Task:")
        markers = text.index("Feature markers:")
        rule = text.index("Answer with exactly one word")
        payload = text.index("Feature values:")
        assert instructions < markers < rule < payload

    def test_deterministic(self):
        a = build_llm_prompt(golden_vector()).render()
        b = build_llm_prompt(golden_vector()).render()
        assert a == b

    def test_matches_golden_file(self):
        assert build_llm_prompt(golden_vector()).render() == GOLDEN.read_text(encoding="utf-8")

    def test_six_significant_digits(self):
        text = build_llm_prompt(golden_vector()).render()
        assert "[[developer_generated_interval]]54321.1[[/developer_generated_interval]]" in text
        assert "[[developer_accepted_ratio]]0.416667[[/developer_accepted_ratio]]" in text

    def test_distinct_vectors_render_distinct_prompts(self):
        vec = golden_vector()
        other = FeatureVector(
            event_id=vec.event_id, trigger_timestamp=vec.trigger_timestamp,
            label=vec.label, values={**vec.values, "in-situ_IDE_version": 8.0},
        )
        assert build_llm_prompt(vec).render() != build_llm_prompt(other).render()


class TestResponseParsing:
    def test_plain_accept(self):
        assert parse_llm_response("accept") is True

    def test_whitespace_and_case(self):
        assert parse_llm_response("  Reject\n") is False
        assert parse_llm_response("ACCEPT, because reasons") is True

    def test_unparseable_carries_raw_response(self):
        with pytest.raises(UnparseableResponseError) as exc:
            parse_llm_response("maybe")
        assert exc.value.response == "maybe"

    def test_word_boundary_respected(self):
        with pytest.raises(UnparseableResponseError):
            parse_llm_response("acceptable quality")


class _FlakyTransport:
    def __init__(self, failures: int, response: str):
        self.failures = failures
        self.response = response
        self.calls = 0

    def send(self, prompt: str) -> str:
        self.calls += 1
        if self.calls <= self.failures:
            raise TransportError("transient")
        return self.response


class TestLlmPredict:
    def test_recorded_transport_roundtrip(self):
        prompt = build_llm_prompt(golden_vector()).render()
        transport = RecordedTransport({prompt_hash(prompt): "accept"})
        assert llm_predict(transport, golden_vector()) is True

    def test_missing_fixture_raises_transport_error(self):
        transport = RecordedTransport({})
        with pytest.raises(TransportError, match="no recorded response"):
            llm_predict(transport, golden_vector(), retries=0)

    def test_retries_then_succeeds(self):
        transport = _FlakyTransport(failures=2, response="reject")
        assert llm_predict(transport, golden_vector(), retries=2) is False
        assert transport.calls == 3

    def test_exhausted_retries_raise(self):
        transport = _FlakyTransport(failures=10, response="accept")
        with pytest.raises(TransportError, match="transient"):
            llm_predict(transport, golden_vector(), retries=2)


class TestLlmEvaluate:
    def _small_matrix(self):
        logs = generate_synthetic(SyntheticConfig(event_count=40, seed=30))
        matrix = assemble_matrix(logs)
        # high-entropy single-event features keep every prompt distinct
        return matrix.select(["in-situ_preceding_chars", "in-situ_generation_time",
                              "in-situ_IDE_version"])

    def _fixtures(self, matrix, responder):
        fixtures = {}
        for i in range(len(matrix)):
            prompt = build_llm_prompt(matrix.vector(i), matrix.feature_names).render()
            fixtures[prompt_hash(prompt)] = responder(i)
        assert len(fixtures) == len(matrix), "prompts must be unique for this fixture"
        return fixtures

    def test_unparseable_responses_excluded_and_counted(self, caplog):
        matrix = self._small_matrix()
        fixtures = self._fixtures(
            matrix, lambda i: "maybe" if i == 0 else ("accept" if matrix.labels[i] else "reject"))
        transport = RecordedTransport(fixtures)
        with caplog.at_level("WARNING"):
            report, excluded = llm_evaluate(transport, matrix)
        assert excluded == 1
        assert report.tp + report.fp + report.tn + report.fn == len(matrix) - 1
        assert "excluded 1" in caplog.text

    def test_shares_the_metric_implementation(self):
        matrix = self._small_matrix()
        fixtures = self._fixtures(matrix, lambda i: "accept" if i % 2 == 0 else "reject")
        report, _ = llm_evaluate(RecordedTransport(fixtures), matrix)
        hard = np.array([1.0 if i % 2 == 0 else 0.0 for i in range(len(matrix))])
        reference = compute_metrics(hard, matrix.labels, hard_labels=True)
        assert report == reference

    def test_all_unparseable_raises(self):
        matrix = self._small_matrix()
        fixtures = self._fixtures(matrix, lambda i: "shrug")
        with pytest.raises(ValueError, match="no events"):
            llm_evaluate(RecordedTransport(fixtures), matrix)


class TestHttpTransport:
    def test_from_env_requires_endpoint_and_model(self, monkeypatch):
        monkeypatch.delenv("GHOSTFILTER_LLM_ENDPOINT", raising=False)
        monkeypatch.delenv("GHOSTFILTER_LLM_MODEL", raising=False)
        with pytest.raises(TransportError, match="GHOSTFILTER_LLM_ENDPOINT"):
            HttpTransport.from_env()

    def test_from_env_reads_settings(self, monkeypatch):
        monkeypatch.setenv("GHOSTFILTER_LLM_ENDPOINT", "http://example.test/v1")
        monkeypatch.setenv("GHOSTFILTER_LLM_MODEL", "coder-32b")
        monkeypatch.setenv("GHOSTFILTER_LLM_TOKEN", "secret")
        transport = HttpTransport.from_env()
        assert transport.endpoint == "http://example.test/v1"
        assert transport.model == "coder-32b"
        assert transport.token == "secret"

    def test_request_body_shape(self):
        transport = HttpTransport("http://example.test", "m", max_tokens=8)
        body = transport.request_body("hello")
        assert body == {"model": "m", "prompt": "hello", "max_tokens": 8}

    def test_fixture_file_loading(self, tmp_path):
        import json
        path = tmp_path / "fixtures.json"
        path.write_text(json.dumps({"abc": "accept"}), encoding="utf-8")
        transport = RecordedTransport.from_file(path)
        assert transport.fixtures == {"abc": "accept"}
