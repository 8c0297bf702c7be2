"""Prompt assembly, generation backends, and answer parsing.

One client interface speaks the common chat-completions request shape;
backend profiles differ only in base URL and model name. A scripted mock
backend (substring pattern -> response table) serves offline runs and
every test.
"""
from __future__ import annotations

import logging
import os
import re
import time
from dataclasses import dataclass, field

import httpx

from .rerank import ContextPack

logger = logging.getLogger(__name__)

ALLOWED_LABELS = ("A", "B", "C", "D")
DEFAULT_MCQ_INSTRUCTION = "Answer with the letter of the correct option (A, B, C, or D)."
DEFAULT_OPEN_INSTRUCTION = "Answer the question concisely using only the context."


class GenerationError(RuntimeError):
    def __init__(self, message: str, retryable: bool = False):
        super().__init__(message)
        self.retryable = retryable


@dataclass(frozen=True)
class Option:
    label: str
    text: str


@dataclass(frozen=True)
class GenParams:
    temperature: float = 0.005
    top_p: float = 0.95
    max_new_tokens: int = 128

    def __post_init__(self):
        if self.temperature <= 0.0:
            raise ValueError("llm.temperature must be > 0")
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError("llm.top_p must be in (0, 1]")
        if self.max_new_tokens < 1:
            raise ValueError("llm.max_new_tokens must be positive")


def build_query_string(question: str, options: list[Option] | None,
                       instruction: str) -> str:
    """Question, blank line, one ``label. text`` line per option, blank
    line, instruction. Without options: question + instruction."""
    if not question:
        raise ValueError("question must be non-empty")
    if not options:
        return f"{question}\n\n{instruction}"
    labels = [o.label for o in options]
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate option labels: {labels}")
    for o in options:
        if o.label not in ALLOWED_LABELS:
            raise ValueError(f"option label {o.label!r} not in {ALLOWED_LABELS}")
    if labels != sorted(labels):
        raise ValueError(f"option labels out of order: {labels}")
    body = "\n".join(f"{o.label}. {o.text}" for o in options)
    return f"{question}\n\n{body}\n\n{instruction}"


@dataclass(frozen=True)
class QueryBundle:
    question: str
    options: tuple[Option, ...] | None
    instruction: str
    prompt: str
    embedding_mode: str = "direct"

    @classmethod
    def create(cls, question: str, options: list[Option] | None = None,
               instruction: str | None = None,
               embedding_mode: str = "direct") -> "QueryBundle":
        if instruction is None:
            instruction = DEFAULT_MCQ_INSTRUCTION if options else DEFAULT_OPEN_INSTRUCTION
        return cls(
            question=question,
            options=tuple(options) if options else None,
            instruction=instruction,
            prompt=build_query_string(question, options, instruction),
            embedding_mode=embedding_mode,
        )


def build_prompt(ctx: ContextPack, query_string: str) -> str:
    return f"Context:\n{ctx.combined_text}\n\nQuestion:\n{query_string}"


class MockChatBackend:
    """Scripted backend: first rule whose pattern occurs in the prompt
    (substring, case-sensitive) wins. Records every request for tests."""

    def __init__(self, rules: list[tuple[str, str]] | None = None,
                 default: str = "", fail_times: int = 0):
        self.rules = list(rules or [])
        self.default = default
        self.fail_times = fail_times  # fault injection: fail the first N calls
        self.requests: list[dict] = []

    def complete(self, prompt: str, params: GenParams = GenParams()) -> str:
        self.requests.append({
            "prompt": prompt,
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_new_tokens,
        })
        if self.fail_times > 0:
            self.fail_times -= 1
            raise GenerationError("injected backend failure", retryable=True)
        for pattern, response in self.rules:
            if pattern in prompt:
                return response
        return self.default


class HttpChatBackend:
    """Client for the common POST {base}/v1/chat/completions shape."""

    def __init__(self, base_url: str, model: str, api_key_env: str | None = None,
                 timeout_ms: int = 60_000):
        if not base_url:
            raise ValueError("llm.base_url is required for the http backend")
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self._client = httpx.Client(timeout=timeout_ms / 1000.0)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key_env:
            key = os.environ.get(self.api_key_env, "")
            if key:
                headers["Authorization"] = f"Bearer {key}"
        return headers

    def complete(self, prompt: str, params: GenParams = GenParams()) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_new_tokens,
        }
        try:
            resp = self._client.post(f"{self.base_url}/v1/chat/completions",
                                     json=payload, headers=self._headers())
        except httpx.HTTPError as exc:
            raise GenerationError(f"generation endpoint unreachable: {exc}",
                                  retryable=True) from exc
        if resp.status_code != 200:
            raise GenerationError(
                f"generation endpoint returned {resp.status_code}: {resp.text[:200]}",
                retryable=resp.status_code >= 500)
        return resp.json()["choices"][0]["message"]["content"]


ChatBackend = MockChatBackend | HttpChatBackend


def generate(backend: ChatBackend, prompt: str, params: GenParams,
             retries: int = 2) -> str:
    """Single-pass completion with up to `retries` retries on retryable
    failures (3 attempts total by default)."""
    if not prompt:
        raise ValueError("generate: empty prompt")
    attempt = 0
    while True:
        try:
            return backend.complete(prompt, params)
        except GenerationError as exc:
            if not exc.retryable or attempt >= retries:
                raise
            attempt += 1
            logger.warning("generation attempt %d failed (%s); retrying", attempt, exc)
            time.sleep(min(0.25 * 2 ** attempt, 2.0))


_ANSWER_IS_RE = re.compile(r"answer\s+is\s*:?\s*\(?([A-Da-d])\b", re.IGNORECASE)
_LEADING_LABEL_RE = re.compile(r"\s*([A-Da-d])(?:[.):])?(?:\s|$)")


def extract_choice(raw: str, options: list[Option] | tuple[Option, ...]) -> str | None:
    """Parse an option label out of free-form model output.

    Rule order: leading standalone label, then an "answer is X" phrase,
    then a verbatim option-text match (longest option first). Returns
    None when nothing applies; never a label outside the options.
    """
    if not options:
        raise ValueError("extract_choice requires options")
    valid = {o.label for o in options}
    m = _LEADING_LABEL_RE.match(raw)
    if m and m.group(1).upper() in valid:
        return m.group(1).upper()
    m = _ANSWER_IS_RE.search(raw)
    if m and m.group(1).upper() in valid:
        return m.group(1).upper()
    lowered = raw.lower()
    for option in sorted(options, key=lambda o: -len(o.text)):
        if option.text and option.text.lower() in lowered:
            return option.label
    return None


@dataclass
class AnswerRecord:
    """Traceability record for one answered question."""

    instance_id: str | None
    question: str
    prediction: str
    parsed_label: str | None
    source_files: list[str]
    snippets: list[dict]  # {filename, page, seq, chunk_id, text}
    rank_scores: list[float]
    timings_ms: dict[str, float]
    config_snapshot: dict
    warnings: list[str] = field(default_factory=list)
    status: str = "ok"  # ok | failed
    embedding_mode: str = "direct"
    hyde_passage: str | None = None

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "question": self.question,
            "prediction": self.prediction,
            "parsed_label": self.parsed_label,
            "source_files": self.source_files,
            "snippets": self.snippets,
            "rank_scores": self.rank_scores,
            "timings_ms": self.timings_ms,
            "config_snapshot": self.config_snapshot,
            "warnings": self.warnings,
            "status": self.status,
            "embedding_mode": self.embedding_mode,
            "hyde_passage": self.hyde_passage,
        }


def record_from_context(pack: ContextPack) -> tuple[list[str], list[dict], list[float]]:
    """Provenance views of a context pack: deduplicated source files in
    rank order, snippet dicts byte-identical to the pack texts, scores."""
    files: list[str] = []
    snippets: list[dict] = []
    scores: list[float] = []
    for entry in pack.entries:
        if entry.chunk.filename not in files:
            files.append(entry.chunk.filename)
        snippets.append({
            "filename": entry.chunk.filename,
            "page": entry.chunk.page,
            "seq": entry.chunk.seq,
            "chunk_id": entry.chunk.id,
            "text": entry.text,
            "truncated": entry.truncated,
        })
        scores.append(entry.rank_score)
    return files, snippets, scores
