"""Batch evaluation harness.

Runs the per-instance protocol end to end: every QA item gets a fresh
session that is destroyed on every exit path, answer records stream to a
line-delimited results file as they complete, and metrics aggregate
overall and per difficulty tag. A sweep driver re-runs the batch across
values of one hyperparameter and tabulates the results.
"""
from __future__ import annotations

import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import generation as gen
from . import metrics as met
from .config import SWEEPABLE, AppConfig, apply_overrides
from .index import SessionManager
from .pipeline import (Runtime, answer_question, embed_chunks,
                       ingest_embedded, prepare_chunks, session_dimension)

logger = logging.getLogger(__name__)

DIFFICULTIES = ("easy", "medium", "hard")


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class EvalInstance:
    id: str
    question: str
    options: tuple[gen.Option, ...] | None
    gold: str
    difficulty: str | None
    background_docs: tuple[str, ...]

    @property
    def is_mcq(self) -> bool:
        return self.options is not None

    def __post_init__(self):
        if not self.question:
            raise DatasetError(f"instance {self.id}: empty question")
        if not self.gold:
            raise DatasetError(f"instance {self.id}: empty gold")
        if self.options is not None:
            labels = {o.label for o in self.options}
            if self.gold not in labels:
                raise DatasetError(
                    f"instance {self.id}: gold {self.gold!r} not among option "
                    f"labels {sorted(labels)}")
        if self.difficulty is not None and self.difficulty not in DIFFICULTIES:
            raise DatasetError(
                f"instance {self.id}: difficulty must be one of {DIFFICULTIES}")


def parse_instance(record: dict) -> EvalInstance:
    options = None
    if record.get("options"):
        options = tuple(gen.Option(o["label"], o["text"]) for o in record["options"])
    return EvalInstance(
        id=str(record["id"]),
        question=record["question"],
        options=options,
        gold=str(record["gold"]),
        difficulty=record.get("difficulty"),
        background_docs=tuple(record.get("background_docs", [])),
    )


def load_dataset(path: str | Path, strict: bool = False) -> list[EvalInstance]:
    """Read a line-delimited dataset; malformed lines are reported with
    their line number and skipped unless strict."""
    instances = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                instances.append(parse_instance(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, DatasetError) as exc:
                message = f"{path}:{lineno}: bad dataset record ({exc})"
                if strict:
                    raise DatasetError(message) from exc
                logger.warning("%s -- skipped", message)
    return instances


def _failed_record(inst: EvalInstance, runtime: Runtime, exc: Exception,
                   warnings: list[str], timings: dict[str, float],
                   ) -> gen.AnswerRecord:
    logger.warning("instance %s failed: %s", inst.id, exc)
    return gen.AnswerRecord(
        instance_id=inst.id, question=inst.question, prediction="",
        parsed_label=None, source_files=[], snippets=[], rank_scores=[],
        timings_ms=timings, config_snapshot=runtime.config.to_dict(),
        warnings=warnings + [f"pipeline error: {exc}"], status="failed",
    )


def run_instance(inst: EvalInstance, runtime: Runtime,
                 manager: SessionManager) -> gen.AnswerRecord:
    """One full pass: chunk, embed, index, retrieve, re-rank, generate,
    record. Unreadable input raises (the only hard error); any later
    stage failure yields a failed record. The session is destroyed on
    every exit path."""
    warnings: list[str] = []
    timings: dict[str, float] = {}

    t0 = time.monotonic()
    _, chunks = prepare_chunks(list(inst.background_docs), runtime, warnings)
    timings["chunk"] = (time.monotonic() - t0) * 1000.0

    t0 = time.monotonic()
    try:
        vectors = embed_chunks(chunks, runtime)
        dim = len(vectors[0]) if vectors else session_dimension(runtime)
    except Exception as exc:
        return _failed_record(inst, runtime, exc, warnings, timings)
    timings["embed"] = (time.monotonic() - t0) * 1000.0

    session = manager.create(dim)
    try:
        ingest_embedded(session, chunks, vectors)
        instruction = (runtime.config.values["llm"]["mcq_instruction"]
                       if inst.options else
                       runtime.config.values["llm"]["open_instruction"])
        bundle = gen.QueryBundle.create(
            inst.question, list(inst.options) if inst.options else None,
            instruction=instruction,
            embedding_mode=runtime.config.values["embedding"]["mode"])
        record = answer_question(session, bundle, runtime, instance_id=inst.id)
    except Exception as exc:
        return _failed_record(inst, runtime, exc, warnings, timings)
    finally:
        session.destroy()

    record.timings_ms = {**timings, **record.timings_ms}
    record.warnings = warnings + record.warnings
    return record


def _difficulty_report(records: list[gen.AnswerRecord],
                       instances: list[EvalInstance],
                       rouge_n_order: int) -> met.MetricReport:
    by_id = {r.instance_id: r for r in records}
    mcq = [(i, by_id[i.id]) for i in instances if i.is_mcq and i.id in by_id]
    open_ended = [(i, by_id[i.id]) for i in instances
                  if not i.is_mcq and i.id in by_id]

    def mcq_scores(pairs):
        preds = [r.parsed_label for _, r in pairs]
        gold = [i.gold for i, _ in pairs]
        return met.accuracy(preds, gold), met.macro_f1(preds, gold)

    acc, f1 = mcq_scores(mcq) if mcq else (0.0, 0.0)
    rl = rn = 0.0
    if open_ended:
        rl = sum(met.rouge_l(r.prediction, i.gold) for i, r in open_ended) / len(open_ended)
        rn = sum(met.rouge_n(r.prediction, i.gold, rouge_n_order)
                 for i, r in open_ended) / len(open_ended)

    per_difficulty: dict[str, met.DifficultyStats] = {}
    tags = sorted({i.difficulty for i in instances if i.difficulty})
    for tag in tags:
        tagged = [(i, r) for i, r in mcq if i.difficulty == tag]
        if tagged:
            t_acc, t_f1 = mcq_scores(tagged)
        else:
            t_acc, t_f1 = 0.0, 0.0
        # count covers the accuracy denominators so per-tag accuracies
        # aggregate to the total when weighted by count
        per_difficulty[tag] = met.DifficultyStats(t_acc, t_f1, len(tagged))

    return met.MetricReport(
        accuracy=acc, macro_f1=f1, rouge_l=rl, rouge_n=rn,
        per_difficulty=per_difficulty,
        total=len(records),
        failed=sum(1 for r in records if r.status == "failed"),
    )


def run_batch(dataset: list[EvalInstance], config: AppConfig,
              results_path: str | Path | None = None,
              provenance=None) -> tuple[list[gen.AnswerRecord], met.MetricReport]:
    """Evaluate every instance; individual failures never abort the batch.

    Records stream to `results_path` (line-delimited, flushed per record)
    followed by one summary line.
    """
    if not dataset:
        raise DatasetError("empty dataset")
    runtime = Runtime.from_config(config)
    manager = SessionManager(event_sink=provenance)
    parallelism = config.values["eval"]["parallelism"]

    write_lock = threading.Lock()
    sink = None
    if results_path is not None:
        Path(results_path).parent.mkdir(parents=True, exist_ok=True)
        sink = open(results_path, "w", encoding="utf-8")

    def emit(record: gen.AnswerRecord):
        if sink is None:
            return
        with write_lock:
            sink.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")
            sink.flush()

    def run_one(inst: EvalInstance) -> gen.AnswerRecord:
        try:
            return run_instance(inst, runtime, manager)
        except Exception as exc:  # hard errors become failed records here
            return _failed_record(inst, runtime, exc, [], {})

    records: list[gen.AnswerRecord] = []
    try:
        if parallelism == 1:
            for inst in dataset:
                record = run_one(inst)
                records.append(record)
                emit(record)
        else:
            with ThreadPoolExecutor(max_workers=parallelism) as pool:
                for record in pool.map(run_one, dataset):
                    records.append(record)
                    emit(record)
        report = _difficulty_report(records, dataset,
                                    config.values["metrics"]["rouge_n"])
        if sink is not None:
            with write_lock:
                sink.write(json.dumps({"summary": report.to_dict()}) + "\n")
                sink.flush()
        if provenance is not None:
            provenance({"event": "batch_complete", "session_id": None,
                        "instances": len(records)})
        return records, report
    finally:
        if sink is not None:
            sink.close()
        manager.destroy_all()


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple

    def __post_init__(self):
        if self.parameter not in SWEEPABLE:
            raise ValueError(
                f"parameter {self.parameter!r} is not sweepable; "
                f"choose from {SWEEPABLE}")
        if not self.values:
            raise ValueError("sweep needs at least one value")


@dataclass
class SweepRow:
    parameter: str
    value: object
    report: met.MetricReport
    mean_latency_ms: float


def run_sweep(dataset: list[EvalInstance], base_config: AppConfig,
              spec: SweepSpec,
              results_dir: str | Path | None = None) -> list[SweepRow]:
    """One full batch per value, everything else held fixed. Every value
    is validated against the config schema before any run starts."""
    configs = [(value, apply_overrides(base_config, {spec.parameter: value}))
               for value in spec.values]
    rows: list[SweepRow] = []
    for value, config in configs:
        results_path = None
        if results_dir is not None:
            safe = str(value).replace("/", "_")
            results_path = Path(results_dir) / f"sweep_{spec.parameter}_{safe}.jsonl"
        started = time.monotonic()
        records, report = run_batch(dataset, config, results_path=results_path)
        elapsed_ms = (time.monotonic() - started) * 1000.0
        rows.append(SweepRow(spec.parameter, value, report,
                             mean_latency_ms=elapsed_ms / max(len(records), 1)))
    return rows


def sweep_table(rows: list[SweepRow], delimiter: str = "\t") -> str:
    """Machine-readable table, one row per swept value."""
    header = delimiter.join(("parameter", "value", "accuracy", "macro_f1",
                             "rouge_l", "rouge_n", "mean_latency_ms"))
    lines = [header]
    for row in rows:
        lines.append(delimiter.join((
            row.parameter, str(row.value),
            f"{row.report.accuracy:.4f}", f"{row.report.macro_f1:.4f}",
            f"{row.report.rouge_l:.4f}", f"{row.report.rouge_n:.4f}",
            f"{row.mean_latency_ms:.2f}",
        )))
    return "\n".join(lines) + "\n"


def sweep_summary(rows: list[SweepRow]) -> str:
    lines = [f"sweep over {rows[0].parameter}:"]
    for row in rows:
        lines.append(
            f"  {row.parameter}={row.value}: accuracy={row.report.accuracy:.4f} "
            f"macro_f1={row.report.macro_f1:.4f} "
            f"mean_latency={row.mean_latency_ms:.1f} ms")
    return "\n".join(lines) + "\n"
