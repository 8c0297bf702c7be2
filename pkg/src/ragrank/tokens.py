"""Token counting backends.

Two interchangeable counters drive chunk sizing and the context token
budget: an exact byte-pair-encoding counter that loads a ``.tiktoken``
vocabulary file, and a cheap whitespace-word counter for setups without
the vocabulary asset.
"""
from __future__ import annotations

import base64
import logging
import re
from pathlib import Path

logger = logging.getLogger(__name__)

# GPT-2-style pre-tokenizer. Stdlib `re` has no \p{L}/\p{N}: [^\W\d_]
# matches unicode letters, \d unicode digits. Underscore counts as a
# symbol, hence the (?:[^\s\w]|_) class.
_PRETOKEN_RE = re.compile(
    r"'s|'t|'re|'ve|'m|'ll|'d"
    r"| ?[^\W\d_]+| ?\d+| ?(?:[^\s\w]|_)+"
    r"|\s+(?!\S)|\s+"
)


class TokenizerError(ValueError):
    pass


def pretokenize(text: str) -> list[str]:
    """Split text into pre-tokens; concatenation reconstructs the input."""
    pieces = []
    pos = 0
    for m in _PRETOKEN_RE.finditer(text):
        if m.start() != pos:  # defensive: pattern should cover everything
            pieces.append(text[pos:m.start()])
        pieces.append(m.group())
        pos = m.end()
    if pos != len(text):
        pieces.append(text[pos:])
    return pieces


def load_vocab(path: str | Path) -> dict[bytes, int]:
    """Load a ``.tiktoken`` vocabulary: one ``base64(token) rank`` per line."""
    ranks: dict[bytes, int] = {}
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise TokenizerError(f"cannot read vocabulary file {path}: {exc}") from exc
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            token_b64, rank_s = line.split()
            ranks[base64.b64decode(token_b64)] = int(rank_s)
        except (ValueError, base64.binascii.Error) as exc:
            raise TokenizerError(f"{path}:{lineno}: malformed vocabulary line") from exc
    if not ranks:
        raise TokenizerError(f"{path}: empty vocabulary")
    return ranks


class BpeTokenCounter:
    """Exact BPE counter over a user-supplied ``.tiktoken`` vocabulary.

    Counting and truncation operate per pre-token: bytes start as
    singletons and the lowest-rank adjacent pair merges until no pair is
    in the vocabulary. Immutable after load, shareable across threads.
    """

    def __init__(self, vocab_path: str | Path):
        self.vocab_path = str(vocab_path)
        self._ranks = load_vocab(vocab_path)
        self._decoder = {rank: tok for tok, rank in self._ranks.items()}
        self.name = f"bpe:{Path(vocab_path).name}"

    def _encode_pretoken(self, piece: bytes) -> list[int]:
        ranks = self._ranks
        whole = ranks.get(piece)
        if whole is not None:
            return [whole]
        parts = [piece[i:i + 1] for i in range(len(piece))]
        while len(parts) > 1:
            best_rank = None
            best_i = -1
            for i in range(len(parts) - 1):
                r = ranks.get(parts[i] + parts[i + 1])
                if r is not None and (best_rank is None or r < best_rank):
                    best_rank = r
                    best_i = i
            if best_rank is None:
                break
            parts[best_i:best_i + 2] = [parts[best_i] + parts[best_i + 1]]
        out = []
        for p in parts:
            r = ranks.get(p)
            if r is None:
                raise TokenizerError(
                    f"vocabulary {self.vocab_path} lacks an entry for byte "
                    f"sequence {p!r}; single bytes must be covered"
                )
            out.append(r)
        return out

    def encode(self, text: str) -> list[int]:
        ids: list[int] = []
        for piece in pretokenize(text):
            ids.extend(self._encode_pretoken(piece.encode("utf-8")))
        return ids

    def decode(self, ids: list[int]) -> str:
        try:
            data = b"".join(self._decoder[i] for i in ids)
        except KeyError as exc:
            raise TokenizerError(f"unknown token id {exc.args[0]}") from exc
        # a cut can land mid-codepoint; drop the partial character
        return data.decode("utf-8", errors="ignore")

    def count(self, text: str) -> int:
        if not text:
            return 0
        return len(self.encode(text))

    def truncate(self, text: str, max_tokens: int) -> str:
        if max_tokens <= 0:
            return ""
        ids = self.encode(text)
        if len(ids) <= max_tokens:
            return text
        return self.decode(ids[:max_tokens])


class WhitespaceTokenCounter:
    """Approximate counter: one token per whitespace-separated word."""

    name = "whitespace"

    def count(self, text: str) -> int:
        return len(text.split())

    def truncate(self, text: str, max_tokens: int) -> str:
        if max_tokens <= 0:
            return ""
        words = list(re.finditer(r"\S+", text))
        if len(words) <= max_tokens:
            return text
        return text[:words[max_tokens - 1].end()]


TokenCounter = BpeTokenCounter | WhitespaceTokenCounter


def make_token_counter(kind: str = "bpe", vocab_path: str | None = None) -> TokenCounter:
    """Build the configured counter.

    ``bpe`` without a vocabulary path degrades to the whitespace counter
    with a warning so the engine stays usable without the asset; a path
    that is set but unreadable is an error.
    """
    if kind == "whitespace":
        return WhitespaceTokenCounter()
    if kind == "bpe":
        if vocab_path is None:
            logger.warning(
                "tokenizer.kind is 'bpe' but tokenizer.vocab_path is unset; "
                "falling back to the whitespace counter"
            )
            return WhitespaceTokenCounter()
        return BpeTokenCounter(vocab_path)
    raise TokenizerError(f"unknown tokenizer kind {kind!r}")
