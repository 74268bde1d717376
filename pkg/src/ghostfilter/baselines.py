"""Comparison methods: the numeric-feature filter and the direct LLM call.

The filter is reconstructed as a logistic scorer over the six numeric
single-event features (the zero-hidden-layer case of the shared training
machinery), so it is structurally blind to history. The LLM baseline renders
a four-part prompt over a pluggable transport; tests always run against the
recorded-fixture transport.
"""

from __future__ import annotations

import abc
import hashlib
import json
import logging
import os
import re
from dataclasses import dataclass, replace
from typing import Sequence

from .features.catalog import CATALOG
from .features.matrix import FeatureMatrix, FeatureVector
from .model import TrainConfig, TrainedModel, train

logger = logging.getLogger(__name__)

CIRCUIT_BREAKER_FEATURES = (
    "in-situ_preceding_lines",
    "in-situ_preceding_chars",
    "in-situ_preceding_last_line_chars",
    "in-situ_generated_lines",
    "in-situ_generated_chars",
    "in-situ_generation_time",
)

_RESPONSE_RE = re.compile(r"\s*(accept|reject)\b", re.IGNORECASE)
_DEFINITIONS = {entry.name: entry.definition for entry in CATALOG.entries}


def circuit_breaker_train(matrix: FeatureMatrix, config: TrainConfig | None = None) -> TrainedModel:
    """Logistic scorer over the numeric single-event features only."""
    config = replace(config or TrainConfig(), hidden_sizes=())
    return train(matrix.select(CIRCUIT_BREAKER_FEATURES), config)


# ---------------------------------------------------------------------------
# Direct LLM call baseline


class TransportError(RuntimeError):
    pass


class UnparseableResponseError(ValueError):
    def __init__(self, response: str):
        self.response = response
        super().__init__(f"response does not start with accept/reject: {response!r}")


@dataclass(frozen=True)
class LlmPrompt:
    """Four-part prompt: instructions, marker definitions, output rule, payload."""

    instructions: str
    markers: tuple[tuple[str, str, str], ...]  # (feature, start, end)
    output_rule: str
    payload: tuple[tuple[str, str], ...]  # (feature, formatted value)

    def render(self) -> str:
        lines = [self.instructions, "", "Feature markers:"]
        for name, start, end in self.markers:
            lines.append(f"  {start}value{end} = {_DEFINITIONS.get(name, 'numeric feature')}")
        lines += ["", self.output_rule, "", "Feature values:"]
        marker_of = {name: (start, end) for name, start, end in self.markers}
        for name, value in self.payload:
            start, end = marker_of[name]
            lines.append(f"{start}{value}{end}")
        return "\n".join(lines) + "\n"


def build_llm_prompt(vector: FeatureVector, feature_names: Sequence[str] | None = None) -> LlmPrompt:
    """Deterministic prompt over the vector's features, 6-significant-digit values."""
    names = tuple(feature_names) if feature_names is not None else tuple(vector.values)
    markers = tuple((name, f"[[{name}]]", f"[[/{name}]]") for name in names)
    payload = tuple((name, f"{vector.values[name]:.6g}") for name in names)
    return LlmPrompt(
        instructions=(
            "Task: decide whether the developer will accept the AI code "
            "suggestion summarized by the feature values below. Judge only "
            "from these values."
        ),
        markers=markers,
        output_rule='Answer with exactly one word: "accept" or "reject".',
        payload=payload,
    )


class LlmTransport(abc.ABC):
    @abc.abstractmethod
    def send(self, prompt: str) -> str:
        """Return the raw completion for a prompt."""


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class RecordedTransport(LlmTransport):
    """Fixture-backed transport: maps prompt hashes to canned responses."""

    def __init__(self, fixtures: dict[str, str]):
        self.fixtures = fixtures

    def send(self, prompt: str) -> str:
        key = prompt_hash(prompt)
        if key not in self.fixtures:
            raise TransportError(f"no recorded response for prompt hash {key}")
        return self.fixtures[key]

    @staticmethod
    def from_file(path) -> "RecordedTransport":
        with open(path, "r", encoding="utf-8") as handle:
            return RecordedTransport(json.load(handle))


class HttpTransport(LlmTransport):
    """Live JSON-over-HTTP transport; never used by the test suite."""

    def __init__(self, endpoint: str, model: str, token: str | None = None,
                 max_tokens: int = 8, timeout: float = 30.0):
        self.endpoint = endpoint
        self.model = model
        self.token = token
        self.max_tokens = max_tokens
        self.timeout = timeout

    @staticmethod
    def from_env() -> "HttpTransport":
        endpoint = os.environ.get("GHOSTFILTER_LLM_ENDPOINT")
        model = os.environ.get("GHOSTFILTER_LLM_MODEL")
        if not endpoint or not model:
            raise TransportError(
                "GHOSTFILTER_LLM_ENDPOINT and GHOSTFILTER_LLM_MODEL must be set"
            )
        return HttpTransport(endpoint, model, os.environ.get("GHOSTFILTER_LLM_TOKEN"))

    def request_body(self, prompt: str) -> dict:
        return {"model": self.model, "prompt": prompt, "max_tokens": self.max_tokens}

    def send(self, prompt: str) -> str:
        import requests

        headers = {}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        try:
            response = requests.post(self.endpoint, json=self.request_body(prompt),
                                     headers=headers, timeout=self.timeout)
            response.raise_for_status()
            body = response.json()
        except Exception as exc:  # noqa: BLE001 - wrap any transport failure
            raise TransportError(str(exc)) from exc
        if isinstance(body, dict):
            if "text" in body:
                return body["text"]
            choices = body.get("choices")
            if isinstance(choices, list) and choices and "text" in choices[0]:
                return choices[0]["text"]
        raise TransportError(f"unrecognized response body: {body!r}")


def parse_llm_response(response: str) -> bool:
    match = _RESPONSE_RE.match(response)
    if not match:
        raise UnparseableResponseError(response)
    return match.group(1).lower() == "accept"


def llm_predict(transport: LlmTransport, vector: FeatureVector,
                feature_names: Sequence[str] | None = None, retries: int = 2) -> bool:
    """Prompt the transport for one event; True means predicted accept."""
    prompt = build_llm_prompt(vector, feature_names).render()
    last_error: TransportError | None = None
    for _ in range(retries + 1):
        try:
            response = transport.send(prompt)
            break
        except TransportError as exc:
            last_error = exc
    else:
        raise last_error  # type: ignore[misc]
    return parse_llm_response(response)


def llm_evaluate(transport: LlmTransport, matrix: FeatureMatrix,
                 retries: int = 2) -> tuple["EvalReport", int]:
    """Run the baseline over a matrix; unparseable responses are excluded and counted."""
    from .evaluation import compute_metrics

    predictions = []
    labels = []
    excluded = 0
    for i in range(len(matrix)):
        vector = matrix.vector(i)
        try:
            predictions.append(1.0 if llm_predict(transport, vector, matrix.feature_names, retries) else 0.0)
            labels.append(bool(matrix.labels[i]))
        except UnparseableResponseError as exc:
            excluded += 1
            logger.warning("excluding event %s: %s", vector.event_id, exc)
    if excluded:
        logger.warning("excluded %d of %d events with unparseable responses", excluded, len(matrix))
    if not predictions:
        raise ValueError("no events produced a parseable accept/reject response")
    report = compute_metrics(predictions, labels, threshold=0.5, hard_labels=True)
    return report, excluded
