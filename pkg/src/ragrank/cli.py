"""Command-line interface: ask, eval, sweep, serve, chunks."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .config import ConfigError, load_config
from .corpus import load_document, normalize_document, split_chunks
from .evaluation import (DatasetError, SweepSpec, load_dataset, run_batch,
                         run_instance, run_sweep, sweep_summary, sweep_table)
from .generation import Option
from .index import SessionManager
from .pipeline import Runtime
from .provenance import ProvenanceLog

logger = logging.getLogger(__name__)


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="path to a YAML config file")
    parser.add_argument("--json", action="store_true",
                        help="machine-readable output on stdout")
    parser.add_argument("--verbose", action="store_true")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="SECTION.KEY=VALUE",
                        help="config override (repeatable; highest precedence)")


def _parse_overrides(pairs: list[str]) -> dict[str, str]:
    overrides = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {pair!r}")
        key, value = pair.split("=", 1)
        overrides[key.strip()] = value
    return overrides


def _load(args) -> "AppConfig":
    return load_config(path=args.config, overrides=_parse_overrides(args.overrides))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ragrank",
        description="Local retrieval-augmented QA with MMR + PageRank re-ranking")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_ask = sub.add_parser("ask", help="answer one question over the given files")
    p_ask.add_argument("files", nargs="+", help="background documents")
    p_ask.add_argument("-q", "--question", required=True)
    p_ask.add_argument("--option", nargs=2, action="append", default=[],
                       metavar=("LABEL", "TEXT"),
                       help="multiple-choice option (repeatable)")
    p_ask.add_argument("--mode", choices=["direct", "hyde"], default=None,
                       help="query embedding mode (default from config)")
    _add_common(p_ask)

    p_eval = sub.add_parser("eval", help="batch-evaluate a JSONL dataset")
    p_eval.add_argument("dataset")
    p_eval.add_argument("--results", help="results file (default from config)")
    p_eval.add_argument("--strict", action="store_true",
                        help="abort on malformed dataset lines")
    p_eval.add_argument("--sweep", metavar="PARAM=V1,V2,...",
                        help="sweep one parameter instead of a single run")
    _add_common(p_eval)

    p_sweep = sub.add_parser("sweep", help="hyperparameter sweep over a dataset")
    p_sweep.add_argument("dataset")
    p_sweep.add_argument("--param", required=True)
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated values")
    p_sweep.add_argument("--results-dir", help="per-value results files")
    _add_common(p_sweep)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host")
    p_serve.add_argument("--port", type=int)
    _add_common(p_serve)

    p_chunks = sub.add_parser("chunks", help="debug: print the chunking of a file")
    p_chunks.add_argument("file")
    p_chunks.add_argument("--kind", choices=["text", "markdown", "pdf_pages"])
    _add_common(p_chunks)

    return parser


def _print_record(record, as_json: bool):
    if as_json:
        print(json.dumps(record.to_dict(), ensure_ascii=False))
        return
    print(record.prediction)
    if record.parsed_label:
        print(f"[parsed: {record.parsed_label}]")
    print()
    for snippet, score in zip(record.snippets, record.rank_scores):
        print(f"{snippet['filename']} p.{snippet['page']} (r={score:.4f})")
        print(snippet["text"])
        print()
    for warning in record.warnings:
        print(f"warning: {warning}", file=sys.stderr)


def cmd_ask(args) -> int:
    overrides = _parse_overrides(args.overrides)
    if args.mode:
        overrides["embedding.mode"] = args.mode
    config = load_config(path=args.config, overrides=overrides)
    runtime = Runtime.from_config(config)
    manager = SessionManager()
    options = [Option(label, text) for label, text in args.option] or None
    from .evaluation import EvalInstance  # reuse the instance pipeline

    inst = EvalInstance(
        id="cli", question=args.question,
        options=tuple(options) if options else None,
        gold=options[0].label if options else "-",  # never used for scoring
        difficulty=None, background_docs=tuple(args.files),
    )
    record = run_instance(inst, runtime, manager)
    _print_record(record, args.json)
    return 0 if record.status == "ok" else 1


def cmd_eval(args) -> int:
    config = _load(args)
    dataset = load_dataset(args.dataset, strict=args.strict or
                           config.values["eval"]["strict"])
    if not dataset:
        print("error: dataset is empty", file=sys.stderr)
        return 1
    if args.sweep:
        param, _, raw_values = args.sweep.partition("=")
        values = tuple(_parse_value(v) for v in raw_values.split(",") if v)
        return _run_sweep(config, dataset, param, values, None, args.json)
    results_path = args.results or config.values["eval"]["results_path"]
    provenance = ProvenanceLog(config.values["server"]["provenance_path"])
    records, report = run_batch(dataset, config, results_path=results_path,
                                provenance=provenance)
    if args.json:
        print(json.dumps(report.to_dict(), ensure_ascii=False))
    else:
        _print_report(report, results_path)
    return 0


def _print_report(report, results_path):
    print(f"instances: {report.total} ({report.failed} failed)")
    print(f"accuracy:  {report.accuracy:.4f}")
    print(f"macro_f1:  {report.macro_f1:.4f}")
    print(f"rouge_l:   {report.rouge_l:.4f}")
    print(f"rouge_n:   {report.rouge_n:.4f}")
    for tag, stats in report.per_difficulty.items():
        print(f"  {tag}: accuracy={stats.accuracy:.4f} "
              f"macro_f1={stats.macro_f1:.4f} (n={stats.count})")
    print(f"results written to {results_path}")


def _parse_value(text: str):
    from .config import parse_scalar

    return parse_scalar(text.strip())


def _run_sweep(config, dataset, param, values, results_dir, as_json) -> int:
    spec = SweepSpec(parameter=param, values=values)
    rows = run_sweep(dataset, config, spec, results_dir=results_dir)
    sys.stdout.write(sweep_table(rows))
    if not as_json:
        sys.stdout.write("\n" + sweep_summary(rows))
    return 0


def cmd_sweep(args) -> int:
    config = _load(args)
    dataset = load_dataset(args.dataset)
    if not dataset:
        print("error: dataset is empty", file=sys.stderr)
        return 1
    values = tuple(_parse_value(v) for v in args.values.split(",") if v)
    return _run_sweep(config, dataset, args.param, values,
                      args.results_dir, args.json)


def cmd_serve(args) -> int:
    import uvicorn

    overrides = _parse_overrides(args.overrides)
    if args.host:
        overrides["server.host"] = args.host
    if args.port:
        overrides["server.port"] = str(args.port)
    config = load_config(path=args.config, overrides=overrides)
    from .service import create_app

    app = create_app(config)
    uvicorn.run(app, host=config.values["server"]["host"],
                port=config.values["server"]["port"], log_level="info")
    return 0


def cmd_chunks(args) -> int:
    config = _load(args)
    runtime = Runtime.from_config(config)
    doc = normalize_document(load_document(args.file, kind=args.kind))
    chunks = split_chunks(doc, config.chunking(), runtime.counter)
    if args.json:
        print(json.dumps([{
            "id": c.id, "page": c.page, "seq": c.seq,
            "token_len": c.token_len, "overlap_token_len": c.overlap_token_len,
            "text": c.text,
        } for c in chunks], ensure_ascii=False))
        return 0
    for c in chunks:
        print(f"-- chunk {c.seq} (p.{c.page}, {c.token_len} tokens, "
              f"overlap {c.overlap_token_len})")
        print(c.text)
        print()
    return 0


COMMANDS = {
    "ask": cmd_ask,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "serve": cmd_serve,
    "chunks": cmd_chunks,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DatasetError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
