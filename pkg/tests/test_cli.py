from __future__ import annotations

import json

import pytest
import yaml

from ragrank.cli import main

from conftest import make_planted_corpus, write_dataset


@pytest.fixture
def planted_cli(tmp_path):
    records, rules, markers = make_planted_corpus(tmp_path / "docs", 4)
    script = tmp_path / "rules.json"
    script.write_text(json.dumps(
        [{"pattern": p, "response": r} for p, r in rules]))
    config_path = tmp_path / "config.yaml"
    config_path.write_text(yaml.safe_dump({
        "tokenizer": {"kind": "whitespace"},
        "chunk": {"max_tokens": 40, "overlap": 0},
        "llm": {"mock_script": str(script)},
        "server": {"provenance_path": str(tmp_path / "prov.jsonl")},
        "eval": {"results_path": str(tmp_path / "results.jsonl")},
    }))
    dataset = write_dataset(tmp_path / "data.jsonl", records)
    return tmp_path, config_path, dataset, records, markers


def test_ask_prints_answer_and_sources(planted_cli, capsys):
    tmp_path, config_path, _, records, markers = planted_cli
    rec = records[0]
    argv = ["ask", *rec["background_docs"],
            "-q", rec["question"],
            "--config", str(config_path)]
    for opt in rec["options"]:
        argv += ["--option", opt["label"], opt["text"]]
    assert main(argv) == 0
    out = capsys.readouterr().out
    assert f"[parsed: {rec['gold']}]" in out
    assert "doc_000_main.txt p.1 (r=" in out
    assert markers[0] in out


def test_ask_json_is_full_record(planted_cli, capsys):
    tmp_path, config_path, _, records, _ = planted_cli
    rec = records[1]
    argv = ["ask", *rec["background_docs"], "-q", rec["question"],
            "--config", str(config_path), "--json"]
    for opt in rec["options"]:
        argv += ["--option", opt["label"], opt["text"]]
    assert main(argv) == 0
    out = capsys.readouterr().out
    record = json.loads(out)
    assert record["parsed_label"] == rec["gold"]
    assert record["snippets"]
    assert record["config_snapshot"]["chunk"]["max_tokens"] == 40


def test_ask_missing_file_fails(planted_cli, capsys):
    tmp_path, config_path, _, _, _ = planted_cli
    rc = main(["ask", str(tmp_path / "absent.txt"), "-q", "question?",
               "--config", str(config_path)])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_eval_summary_accuracy_one(planted_cli, capsys):
    tmp_path, config_path, dataset, _, _ = planted_cli
    assert main(["eval", str(dataset), "--config", str(config_path)]) == 0
    out = capsys.readouterr().out
    assert "accuracy:  1.0000" in out
    assert (tmp_path / "results.jsonl").exists()


def test_eval_json_report(planted_cli, capsys):
    tmp_path, config_path, dataset, _, _ = planted_cli
    assert main(["eval", str(dataset), "--config", str(config_path),
                 "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["accuracy"] == 1.0
    assert report["counts"]["total"] == 4


def test_eval_sweep_flag_emits_table(planted_cli, capsys):
    tmp_path, config_path, dataset, _, _ = planted_cli
    assert main(["eval", str(dataset), "--config", str(config_path),
                 "--sweep", "pr.top_k=1,3"]) == 0
    out = capsys.readouterr().out
    lines = [l for l in out.splitlines() if l.startswith("pr.top_k")]
    assert len(lines) == 2


def test_sweep_subcommand(planted_cli, capsys):
    tmp_path, config_path, dataset, _, _ = planted_cli
    assert main(["sweep", str(dataset), "--param", "mmr.k",
                 "--values", "1,2", "--config", str(config_path)]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].split("\t")[0] == "parameter"


def test_sweep_rejects_unknown_parameter(planted_cli, capsys):
    tmp_path, config_path, dataset, _, _ = planted_cli
    rc = main(["sweep", str(dataset), "--param", "llm.base_url",
               "--values", "x", "--config", str(config_path)])
    assert rc == 1
    assert "not sweepable" in capsys.readouterr().err


def test_eval_empty_dataset_fails(planted_cli, tmp_path, capsys):
    _, config_path, _, _, _ = planted_cli
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    rc = main(["eval", str(empty), "--config", str(config_path)])
    assert rc == 1
    assert "empty" in capsys.readouterr().err


def test_chunks_debug_output(planted_cli, capsys):
    tmp_path, config_path, _, records, _ = planted_cli
    rc = main(["chunks", records[0]["background_docs"][0],
               "--config", str(config_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "-- chunk 0" in out


def test_set_flag_beats_env_and_file(planted_cli, capsys, monkeypatch):
    tmp_path, config_path, _, records, _ = planted_cli
    monkeypatch.setenv("RAGRANK_CHUNK_MAX_TOKENS", "60")
    rc = main(["chunks", records[0]["background_docs"][0],
               "--config", str(config_path), "--json",
               "--set", "chunk.max_tokens=25"])
    assert rc == 0
    chunks = json.loads(capsys.readouterr().out)
    assert all(c["token_len"] <= 25 for c in chunks)


def test_env_beats_file(planted_cli, capsys, monkeypatch):
    tmp_path, config_path, _, records, _ = planted_cli
    monkeypatch.setenv("RAGRANK_CHUNK_MAX_TOKENS", "12")
    rc = main(["chunks", records[0]["background_docs"][0],
               "--config", str(config_path), "--json"])
    assert rc == 0
    chunks = json.loads(capsys.readouterr().out)
    assert all(c["token_len"] <= 12 for c in chunks)
    assert any(c["token_len"] > 8 for c in chunks)


def test_bad_config_key_fails_cleanly(planted_cli, capsys):
    tmp_path, config_path, _, records, _ = planted_cli
    rc = main(["chunks", records[0]["background_docs"][0],
               "--config", str(config_path), "--set", "chunk.maxsize=10"])
    assert rc == 1
    assert "unknown config key" in capsys.readouterr().err
