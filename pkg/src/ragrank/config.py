"""Application configuration.

One nested structure covers every subsystem. Values merge with the
precedence command-line flag > environment variable > config file >
built-in default, the whole result is validated up front, and unknown
keys are rejected. The effective config is embedded in every answer
record.
"""
from __future__ import annotations

import copy
import os
from dataclasses import dataclass, field
from typing import Any

import yaml

from .corpus import ChunkingConfig, DEFAULT_SEPARATORS
from .mmr import MmrConfig
from .rerank import PrConfig
from .generation import (DEFAULT_MCQ_INSTRUCTION, DEFAULT_OPEN_INSTRUCTION,
                         GenParams)
from .embedding import DEFAULT_HYDE_TEMPLATE, EMBEDDING_MODES

ENV_PREFIX = "RAGRANK_"

# section -> key -> default. `None` means unset (validated at use site).
DEFAULTS: dict[str, dict[str, Any]] = {
    "tokenizer": {
        "kind": "bpe",
        "vocab_path": None,
    },
    "chunk": {
        "max_tokens": 300,
        "overlap": 30,
        "separators": list(DEFAULT_SEPARATORS),
    },
    "embedding": {
        "provider": "hash",
        "base_url": None,
        "model": None,
        "api_key_env": None,
        "test_dim": 64,
        "batch_size": 64,
        "max_in_flight": 4,
        "mode": "direct",
        "hyde_template": DEFAULT_HYDE_TEMPLATE,
    },
    "llm": {
        "provider": "mock",
        "base_url": None,
        "model": None,
        "api_key_env": None,
        "temperature": 0.005,
        "top_p": 0.95,
        "max_new_tokens": 128,
        "timeout_ms": 60_000,
        "max_in_flight": 2,
        "mcq_instruction": DEFAULT_MCQ_INSTRUCTION,
        "open_instruction": DEFAULT_OPEN_INSTRUCTION,
        "mock_script": None,
    },
    "mmr": {
        "k": 3,
        "lambda": 0.5,
        "fetch_pool": 20,
    },
    "pr": {
        "alpha": 0.85,
        "min_sim": 0.01,
        "top_k": 3,
        "token_budget": 1800,
        "tol": 1e-10,
        "max_iter": 100,
    },
    "metrics": {
        "rouge_n": 1,
    },
    "eval": {
        "parallelism": 1,
        "results_path": "results.jsonl",
        "strict": False,
    },
    "server": {
        "host": "127.0.0.1",
        "port": 8080,
        "idle_timeout_minutes": 30,
        "provenance_path": "logs/provenance.jsonl",
        "ui_dir": None,
    },
}

SWEEPABLE = ("pr.top_k", "chunk.overlap", "llm.max_new_tokens", "mmr.k",
             "pr.alpha", "pr.min_sim")

_TYPES: dict[str, type | tuple[type, ...]] = {
    "tokenizer.kind": str, "tokenizer.vocab_path": str,
    "chunk.max_tokens": int, "chunk.overlap": int, "chunk.separators": list,
    "embedding.provider": str, "embedding.base_url": str,
    "embedding.model": str, "embedding.api_key_env": str,
    "embedding.test_dim": int, "embedding.batch_size": int,
    "embedding.max_in_flight": int, "embedding.mode": str,
    "embedding.hyde_template": str,
    "llm.provider": str, "llm.base_url": str, "llm.model": str,
    "llm.api_key_env": str, "llm.temperature": float, "llm.top_p": float,
    "llm.max_new_tokens": int, "llm.timeout_ms": int, "llm.max_in_flight": int,
    "llm.mcq_instruction": str, "llm.open_instruction": str,
    "llm.mock_script": str,
    "mmr.k": int, "mmr.lambda": float, "mmr.fetch_pool": int,
    "pr.alpha": float, "pr.min_sim": float, "pr.top_k": int,
    "pr.token_budget": int, "pr.tol": float, "pr.max_iter": int,
    "metrics.rouge_n": int,
    "eval.parallelism": int, "eval.results_path": str, "eval.strict": bool,
    "server.host": str, "server.port": int, "server.idle_timeout_minutes": int,
    "server.provenance_path": str, "server.ui_dir": str,
}


class ConfigError(ValueError):
    pass


@dataclass
class AppConfig:
    values: dict[str, dict[str, Any]]
    source_path: str | None = None
    overrides_applied: dict[str, Any] = field(default_factory=dict)

    def get(self, dotted: str) -> Any:
        section, key = _split_key(dotted)
        return self.values[section][key]

    def to_dict(self) -> dict:
        return copy.deepcopy(self.values)

    # --- typed views consumed by the pipeline -----------------------------

    def chunking(self) -> ChunkingConfig:
        c = self.values["chunk"]
        return ChunkingConfig(max_tokens=c["max_tokens"], overlap=c["overlap"],
                              separators=tuple(c["separators"]))

    def mmr(self) -> MmrConfig:
        m = self.values["mmr"]
        return MmrConfig(k=m["k"], lambda_=m["lambda"], fetch_pool=m["fetch_pool"])

    def pr(self) -> PrConfig:
        p = self.values["pr"]
        return PrConfig(alpha=p["alpha"], min_sim=p["min_sim"], top_k=p["top_k"],
                        token_budget=p["token_budget"], tol=p["tol"],
                        max_iter=p["max_iter"])

    def gen_params(self) -> GenParams:
        g = self.values["llm"]
        return GenParams(temperature=g["temperature"], top_p=g["top_p"],
                         max_new_tokens=g["max_new_tokens"])


def _split_key(dotted: str) -> tuple[str, str]:
    if "." not in dotted:
        raise ConfigError(f"config key {dotted!r} must be section.key")
    section, key = dotted.split(".", 1)
    if section not in DEFAULTS:
        raise ConfigError(f"unknown config section {section!r}")
    if key not in DEFAULTS[section]:
        raise ConfigError(f"unknown config key {dotted!r}")
    return section, key


def _coerce(dotted: str, value: Any) -> Any:
    """Check/convert a raw value against the declared type for its key."""
    if value is None:
        return None
    want = _TYPES[dotted]
    if want is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if want is int and isinstance(value, bool):
        raise ConfigError(f"{dotted}: expected int, got bool")
    if not isinstance(value, want):
        raise ConfigError(
            f"{dotted}: expected {getattr(want, '__name__', want)}, "
            f"got {type(value).__name__} ({value!r})")
    return value


def parse_scalar(text: str) -> Any:
    """Parse an env/CLI string the YAML way: ints, floats, bools, null,
    lists, or the literal string."""
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError:
        return text


def _merge(values: dict, dotted: str, raw: Any):
    section, key = _split_key(dotted)
    values[section][key] = _coerce(dotted, raw)


def load_config(path: str | None = None,
                env: dict[str, str] | None = None,
                overrides: dict[str, Any] | None = None) -> AppConfig:
    """Resolve the effective config.

    `path` points at a YAML file of sections; `env` (default os.environ)
    contributes RAGRANK_<SECTION>_<KEY> variables; `overrides` holds
    dotted command-line pairs and wins over everything.
    """
    values = copy.deepcopy(DEFAULTS)

    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                loaded = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path}: top level must be a mapping of sections")
        for section, body in loaded.items():
            if section not in DEFAULTS:
                raise ConfigError(f"{path}: unknown section {section!r}")
            if not isinstance(body, dict):
                raise ConfigError(f"{path}: section {section!r} must be a mapping")
            for key, value in body.items():
                _merge(values, f"{section}.{key}", value)

    env = os.environ if env is None else env
    for section in DEFAULTS:
        for key in DEFAULTS[section]:
            var = f"{ENV_PREFIX}{section}_{key}".upper()
            if var in env:
                _merge(values, f"{section}.{key}", parse_scalar(env[var]))

    overrides = overrides or {}
    for dotted, value in overrides.items():
        _merge(values, dotted, parse_scalar(value) if isinstance(value, str) else value)

    cfg = AppConfig(values=values, source_path=path,
                    overrides_applied=dict(overrides))
    validate_config(cfg)
    return cfg


def apply_overrides(cfg: AppConfig, overrides: dict[str, Any]) -> AppConfig:
    """A revalidated copy with dotted overrides applied (per-query and
    sweep paths)."""
    values = copy.deepcopy(cfg.values)
    for dotted, value in overrides.items():
        _merge(values, dotted, parse_scalar(value) if isinstance(value, str) else value)
    out = AppConfig(values=values, source_path=cfg.source_path,
                    overrides_applied={**cfg.overrides_applied, **overrides})
    validate_config(out)
    return out


def validate_config(cfg: AppConfig):
    v = cfg.values
    if v["tokenizer"]["kind"] not in ("bpe", "whitespace"):
        raise ConfigError("tokenizer.kind must be 'bpe' or 'whitespace'")
    try:
        cfg.chunking()  # the typed views validate their own bounds
        cfg.gen_params()
        cfg.mmr()
        cfg.pr()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if v["embedding"]["provider"] not in ("hash", "http", "null"):
        raise ConfigError("embedding.provider must be hash, http, or null")
    if v["embedding"]["provider"] == "http" and not v["embedding"]["base_url"]:
        raise ConfigError("embedding.base_url is required when embedding.provider=http")
    if v["embedding"]["test_dim"] < 1:
        raise ConfigError("embedding.test_dim must be positive")
    if v["embedding"]["batch_size"] < 1:
        raise ConfigError("embedding.batch_size must be positive")
    if v["embedding"]["max_in_flight"] < 1:
        raise ConfigError("embedding.max_in_flight must be positive")
    if v["embedding"]["mode"] not in EMBEDDING_MODES:
        raise ConfigError(f"embedding.mode must be one of {EMBEDDING_MODES}")
    if v["llm"]["provider"] not in ("mock", "http"):
        raise ConfigError("llm.provider must be mock or http")
    if v["llm"]["provider"] == "http" and not v["llm"]["base_url"]:
        raise ConfigError("llm.base_url is required when llm.provider=http")
    if v["llm"]["timeout_ms"] < 1:
        raise ConfigError("llm.timeout_ms must be positive")
    if v["llm"]["max_in_flight"] < 1:
        raise ConfigError("llm.max_in_flight must be positive")
    if v["metrics"]["rouge_n"] < 1:
        raise ConfigError("metrics.rouge_n must be >= 1")
    if v["eval"]["parallelism"] < 1:
        raise ConfigError("eval.parallelism must be >= 1")
    if not 1 <= v["server"]["port"] <= 65535:
        raise ConfigError("server.port must be a valid port")
    if v["server"]["idle_timeout_minutes"] < 1:
        raise ConfigError("server.idle_timeout_minutes must be >= 1")
