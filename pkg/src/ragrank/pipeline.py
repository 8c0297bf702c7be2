"""The per-question pipeline shared by the CLI, the HTTP service, and
the batch evaluator: ingest documents into a session, retrieve with MMR,
re-rank with personalized PageRank, generate, and record provenance.
"""
from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass

from . import embedding as emb
from . import generation as gen
from .config import AppConfig
from .corpus import load_document, normalize_document, split_chunks
from .index import EmbeddedChunk, Session
from .mmr import mmr_select
from .rerank import rerank
from .tokens import make_token_counter

logger = logging.getLogger(__name__)


class PipelineError(RuntimeError):
    pass


@dataclass
class Runtime:
    """Long-lived handles built once from a config: token counter,
    embedding provider, generation backend."""

    config: AppConfig
    counter: object
    embedder: object
    backend: object

    @classmethod
    def from_config(cls, config: AppConfig) -> "Runtime":
        t = config.values["tokenizer"]
        counter = make_token_counter(t["kind"], t["vocab_path"])
        e = config.values["embedding"]
        if e["provider"] == "hash":
            embedder = emb.HashEmbeddingProvider(dim=e["test_dim"])
        elif e["provider"] == "null":
            embedder = emb.NullEmbeddingProvider()
        else:
            embedder = emb.HttpEmbeddingProvider(
                base_url=e["base_url"], model=e["model"],
                api_key_env=e["api_key_env"],
                timeout_ms=config.values["llm"]["timeout_ms"],
                batch_size=e["batch_size"], max_in_flight=e["max_in_flight"])
        g = config.values["llm"]
        if g["provider"] == "mock":
            rules = []
            if g["mock_script"]:
                rules = _load_mock_script(g["mock_script"])
            backend = gen.MockChatBackend(rules=rules)
        else:
            backend = gen.HttpChatBackend(
                base_url=g["base_url"], model=g["model"],
                api_key_env=g["api_key_env"], timeout_ms=g["timeout_ms"])
        return cls(config=config, counter=counter, embedder=embedder,
                   backend=backend)


def _load_mock_script(path: str) -> list[tuple[str, str]]:
    """A mock script is a JSON array of {pattern, response} objects."""
    with open(path, "r", encoding="utf-8") as fh:
        entries = json.load(fh)
    return [(entry["pattern"], entry["response"]) for entry in entries]


def prepare_chunks(paths: list[str], runtime: Runtime,
                   warnings: list[str] | None = None):
    """Load, normalize, and chunk the given files."""
    chunk_cfg = runtime.config.chunking()
    chunks = []
    docs = 0
    for path in paths:
        doc = normalize_document(load_document(path))
        doc_chunks = split_chunks(doc, chunk_cfg, runtime.counter)
        if not doc_chunks and warnings is not None:
            warnings.append(f"no chunks produced from {path}")
        chunks.extend(doc_chunks)
        docs += 1
    return docs, chunks


def embed_chunks(chunks, runtime: Runtime):
    if not chunks:
        return []
    return emb.embed_texts(runtime.embedder, [c.text for c in chunks])


def ingest_embedded(session: Session, chunks, vectors) -> int:
    if not chunks:
        return 0
    return session.ingest([EmbeddedChunk(c, v) for c, v in zip(chunks, vectors)])


def ingest_paths(session: Session, paths: list[str], runtime: Runtime,
                 warnings: list[str] | None = None) -> tuple[int, int]:
    """Load, normalize, chunk, embed, and ingest files into a live
    session (the interactive path). Returns (documents, chunks)."""
    docs, chunks = prepare_chunks(paths, runtime, warnings)
    vectors = embed_chunks(chunks, runtime)
    ingest_embedded(session, chunks, vectors)
    return docs, len(chunks)


def session_dimension(runtime: Runtime) -> int:
    """Dimension for a fresh session; probes the provider when unknown."""
    hint = runtime.embedder.dimension_hint()
    if hint:
        return hint
    return len(emb.embed_texts(runtime.embedder, ["dimension probe"])[0])


_GOLD_MARKERS = ("[gold]", "gold answer:", "correct answer:")


def _assert_gold_unmarked(prompt: str):
    """Guard: outbound prompts must never carry a marked-up gold answer.

    Option texts may legitimately contain the gold string, so only
    marker phrases are checked.
    """
    lowered = prompt.lower()
    for marker in _GOLD_MARKERS:
        if marker in lowered:
            raise PipelineError(f"gold marker {marker!r} leaked into the prompt")


def answer_question(session: Session, bundle: gen.QueryBundle,
                    runtime: Runtime, instance_id: str | None = None,
                    ) -> gen.AnswerRecord:
    """Run retrieval + generation against an already-populated session.

    Session lifecycle stays with the caller: the evaluator destroys the
    session per instance, the service keeps it alive for the
    conversation.
    """
    cfg = runtime.config
    warnings: list[str] = []
    timings: dict[str, float] = {}

    t0 = time.monotonic()
    qvec, hyde_passage, hyde_warnings = emb.query_embedding(
        bundle.question, bundle.embedding_mode, runtime.embedder,
        generator=lambda p: gen.generate(runtime.backend, p, cfg.gen_params()),
        hyde_template=cfg.values["embedding"]["hyde_template"])
    warnings.extend(hyde_warnings)
    timings["embed_query"] = (time.monotonic() - t0) * 1000.0

    t0 = time.monotonic()
    mmr_cfg = cfg.mmr()
    pool = session.search(qvec, mmr_cfg.fetch_pool)
    candidates = mmr_select(pool, qvec, mmr_cfg)
    timings["retrieve"] = (time.monotonic() - t0) * 1000.0

    t0 = time.monotonic()
    pack, ranks = rerank(candidates, qvec, cfg.pr(), runtime.counter)
    timings["rerank"] = (time.monotonic() - t0) * 1000.0
    if not pack.entries:
        warnings.append("empty context: no candidates survived retrieval")

    prompt = gen.build_prompt(pack, bundle.prompt)
    _assert_gold_unmarked(prompt)

    t0 = time.monotonic()
    status = "ok"
    try:
        raw = gen.generate(runtime.backend, prompt, cfg.gen_params())
    except gen.GenerationError as exc:
        raw = ""
        status = "failed"
        warnings.append(f"generation failed: {exc}")
    timings["generate"] = (time.monotonic() - t0) * 1000.0

    parsed = None
    if bundle.options and status == "ok":
        parsed = gen.extract_choice(raw, bundle.options)

    files, snippets, scores = gen.record_from_context(pack)
    return gen.AnswerRecord(
        instance_id=instance_id,
        question=bundle.question,
        prediction=raw,
        parsed_label=parsed,
        source_files=files,
        snippets=snippets,
        rank_scores=scores,
        timings_ms=timings,
        config_snapshot=cfg.to_dict(),
        warnings=warnings,
        status=status,
        embedding_mode=bundle.embedding_mode,
        hyde_passage=hyde_passage,
    )
