"""Append-only provenance log.

Every session mutation (create/ingest/destroy) and every answer lands as
one JSON line. The log replays to the exact session lifecycle, which the
evaluation harness uses to prove that no session outlives its instance.
"""
from __future__ import annotations

import json
import threading
import time
from pathlib import Path


class ProvenanceLog:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def append(self, event: dict):
        record = {"ts": time.time(), **event}
        line = json.dumps(record, ensure_ascii=False)
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()

    def __call__(self, event: dict):
        # SessionManager event-sink interface
        self.append(event)

    def events(self) -> list[dict]:
        if not self.path.exists():
            return []
        out = []
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    out.append(json.loads(line))
        return out

    def replay(self) -> dict[str, dict]:
        """Session id -> {created, ingested, destroyed, order} from the log."""
        sessions: dict[str, dict] = {}
        for pos, event in enumerate(self.events()):
            sid = event.get("session_id")
            if sid is None:
                continue
            state = sessions.setdefault(
                sid, {"created": False, "ingested": 0, "destroyed": False,
                      "created_at_pos": None, "destroyed_at_pos": None})
            kind = event.get("event")
            if kind == "session_create":
                state["created"] = True
                state["created_at_pos"] = pos
            elif kind == "ingest":
                state["ingested"] += event.get("count", 0)
            elif kind == "session_destroy":
                state["destroyed"] = True
                state["destroyed_at_pos"] = pos
        return sessions
