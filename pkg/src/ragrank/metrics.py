"""Scoring primitives: accuracy, macro-F1 over option labels, ROUGE-N
and ROUGE-L for open-ended answers."""
from __future__ import annotations

import string
from collections import Counter
from dataclasses import dataclass, field

_PUNCT = string.punctuation


def rouge_tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip ASCII punctuation at token
    edges; tokens that strip to nothing are dropped."""
    tokens = []
    for word in text.lower().split():
        word = word.strip(_PUNCT)
        if word:
            tokens.append(word)
    return tokens


def accuracy(preds: list[str | None], gold: list[str]) -> float:
    """Fraction of exact matches; a None prediction counts as wrong."""
    if len(preds) != len(gold):
        raise ValueError(f"length mismatch: {len(preds)} preds, {len(gold)} gold")
    if not gold:
        raise ValueError("empty inputs")
    return sum(1 for p, g in zip(preds, gold) if p == g) / len(gold)


def macro_f1(preds: list[str | None], gold: list[str],
             labels: tuple[str, ...] | None = None) -> float:
    """Unweighted mean of per-label F1 over the labels present in gold.

    Precision, recall, and F1 all use the zero convention for empty
    denominators.
    """
    if len(preds) != len(gold):
        raise ValueError(f"length mismatch: {len(preds)} preds, {len(gold)} gold")
    if not gold:
        raise ValueError("empty inputs")
    scored = [lab for lab in (labels or sorted(set(gold))) if lab in set(gold)]
    if not scored:
        return 0.0
    f1s = []
    for lab in scored:
        tp = sum(1 for p, g in zip(preds, gold) if p == lab and g == lab)
        fp = sum(1 for p, g in zip(preds, gold) if p == lab and g != lab)
        fn = sum(1 for p, g in zip(preds, gold) if p != lab and g == lab)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        f1s.append(f1)
    return sum(f1s) / len(f1s)


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: str, reference: str, n: int = 1) -> float:
    """F1 of clipped n-gram overlap; 0 when either side has no n-grams."""
    if n < 1:
        raise ValueError("n must be >= 1")
    cand = _ngrams(rouge_tokenize(candidate), n)
    ref = _ngrams(rouge_tokenize(reference), n)
    total_cand = sum(cand.values())
    total_ref = sum(ref.values())
    if not total_cand or not total_ref:
        return 0.0
    overlap = sum(min(count, ref[gram]) for gram, count in cand.items())
    precision = overlap / total_cand
    recall = overlap / total_ref
    if precision + recall == 0.0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _lcs_len(a: list[str], b: list[str]) -> int:
    # O(len(a) * len(b)) dynamic program over two rows
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: str, reference: str) -> float:
    """F-measure from the longest common subsequence of word tokens."""
    cand = rouge_tokenize(candidate)
    ref = rouge_tokenize(reference)
    lcs = _lcs_len(cand, ref)
    precision = lcs / len(cand) if cand else 0.0
    recall = lcs / len(ref) if ref else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@dataclass
class DifficultyStats:
    accuracy: float
    macro_f1: float
    count: int


@dataclass
class MetricReport:
    accuracy: float
    macro_f1: float
    rouge_l: float
    rouge_n: float
    per_difficulty: dict[str, DifficultyStats] = field(default_factory=dict)
    total: int = 0
    failed: int = 0

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "rouge_l": self.rouge_l,
            "rouge_n": self.rouge_n,
            "per_difficulty": {
                tag: {"accuracy": s.accuracy, "macro_f1": s.macro_f1, "count": s.count}
                for tag, s in self.per_difficulty.items()
            },
            "counts": {"total": self.total, "failed": self.failed},
        }
