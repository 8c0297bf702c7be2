from __future__ import annotations

import base64
import json
import socket

import pytest

from ragrank.config import load_config
from ragrank.tokens import WhitespaceTokenCounter


@pytest.fixture
def ws_counter():
    return WhitespaceTokenCounter()


def build_vocab_lines(merges: list[bytes]) -> bytes:
    """A .tiktoken vocabulary: all 256 single bytes, then the given merges."""
    lines = []
    rank = 0
    for b in range(256):
        lines.append(base64.b64encode(bytes([b])) + b" " + str(rank).encode())
        rank += 1
    for tok in merges:
        lines.append(base64.b64encode(tok) + b" " + str(rank).encode())
        rank += 1
    return b"\n".join(lines) + b"\n"


ENGLISH_MERGES = [
    b"th", b"he", b"in", b"er", b"an", b"re", b"on", b"at", b"en", b"nd",
    b"ti", b"es", b"or", b"te", b"of", b"ed", b"is", b"it", b"al", b"ar",
    b"st", b"to", b"nt", b"ng", b"se", b"ha", b"as", b"ou", b"io", b"le",
    b"the", b"and", b"ing", b"ion", b"tion",
    b" t", b" a", b" s", b" w", b" o", b" th", b" the", b" of", b" and",
    b" to", b" in", b" is", b" a ",
]


@pytest.fixture
def vocab_path(tmp_path):
    path = tmp_path / "test.tiktoken"
    path.write_bytes(build_vocab_lines(ENGLISH_MERGES))
    return path


@pytest.fixture
def base_config():
    """Built-in defaults with the whitespace counter (no vocab asset in CI)."""
    return load_config(overrides={"tokenizer.kind": "whitespace"}, env={})


def write_dataset(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return path


def make_planted_corpus(root, n_instances, n_distractor_sentences=6,
                        docs_per_instance=2):
    """Synthetic MCQ set: per instance, one background chunk holds the
    gold sentence (with an instance-unique marker token) and everything
    else is drawn from an unrelated vocabulary.

    Returns (dataset records, mock rules, markers).
    """
    filler = ("lorem ipsum dolor sit amet consectetur adipiscing elit sed do "
              "eiusmod tempor incididunt ut labore et dolore magna aliqua").split()
    values = {"A": "11", "B": "23", "C": "47", "D": "89"}
    labels = list(values)
    records = []
    rules = []
    markers = []
    root.mkdir(parents=True, exist_ok=True)
    for i in range(n_instances):
        marker = f"kappa{i}zeta"
        markers.append(marker)
        gold = labels[i % 4]
        # the question never says "measured"/"precisely", so the mock rule
        # below can only fire on retrieved evidence, not on the question
        planted = (f"Measurements show the flux constant {marker} equals "
                   f"{values[gold]} units precisely.")
        sentences = []
        for j in range(n_distractor_sentences):
            words = [filler[(i * 7 + j * 3 + t) % len(filler)] for t in range(12)]
            sentences.append(" ".join(words) + f" marker{i}x{j}.")
        sentences.insert(n_distractor_sentences // 2, planted)
        doc_paths = []
        main = root / f"doc_{i:03d}_main.txt"
        main.write_text("\n\n".join(sentences), encoding="utf-8")
        doc_paths.append(str(main))
        for d in range(1, docs_per_instance):
            extra = root / f"doc_{i:03d}_extra{d}.txt"
            words = [filler[(i + d + t) % len(filler)] for t in range(40)]
            extra.write_text(" ".join(words), encoding="utf-8")
            doc_paths.append(str(extra))
        records.append({
            "id": f"inst-{i:03d}",
            # marker kept free of punctuation so it hash-embeds identically
            # in question and evidence
            "question": f"The flux constant {marker} equals how many units?",
            "options": [{"label": lab, "text": f"{values[lab]} units"}
                        for lab in labels],
            "gold": gold,
            "difficulty": ("easy", "medium", "hard")[i % 3],
            "background_docs": doc_paths,
        })
        rules.append((f"flux constant {marker} equals {values[gold]} units",
                      f"{gold}. The context states the value."))
    return records, rules, markers


@pytest.fixture
def no_network(monkeypatch):
    """Fail the test on any attempt to reach the network."""
    attempts = []

    def deny(*args, **kwargs):
        attempts.append(args)
        raise AssertionError("network access attempted")

    monkeypatch.setattr(socket.socket, "connect", deny)
    monkeypatch.setattr(socket, "create_connection", deny)
    monkeypatch.setattr(socket, "getaddrinfo", deny)
    return attempts
