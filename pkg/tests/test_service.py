from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from ragrank import __version__
from ragrank.config import load_config
from ragrank.service import create_app


@pytest.fixture
def service_env(tmp_path):
    doc = tmp_path / "facts.txt"
    doc.write_text(
        "Filler sentence about unrelated matters entirely.\n\n"
        "Measurements show the flux constant kappa9zeta equals 47 units "
        "precisely.\n\n"
        "Another filler line with nothing of note inside.")
    script = tmp_path / "rules.json"
    script.write_text(json.dumps([{
        "pattern": "kappa9zeta equals 47",
        "response": "C. The context gives the value."}]))
    config = load_config(env={}, overrides={
        "tokenizer.kind": "whitespace",
        "chunk.max_tokens": 20,
        "chunk.overlap": 0,
        "llm.mock_script": str(script),
        "server.provenance_path": str(tmp_path / "prov.jsonl"),
    })
    return config, doc, tmp_path


def make_client(config):
    return TestClient(create_app(config), raise_server_exceptions=False)


def test_health(service_env):
    config, _, _ = service_env
    with make_client(config) as client:
        body = client.get("/health").json()
    assert body == {"status": "ok", "version": __version__}


def test_session_lifecycle_and_counts(service_env):
    config, doc, _ = service_env
    with make_client(config) as client:
        created = client.post("/sessions", json={}).json()
        sid = created["session_id"]
        assert created["doc_count"] == 0 and created["chunk_count"] == 0

        updated = client.post(f"/sessions/{sid}/documents",
                              json={"documents": [{"path": str(doc)}]}).json()
        assert updated["doc_count"] == 1
        assert updated["chunk_count"] >= 2

        fetched = client.get(f"/sessions/{sid}").json()
        assert fetched["chunk_count"] == updated["chunk_count"]

        gone = client.delete(f"/sessions/{sid}").json()
        assert gone == {"status": "destroyed", "session_id": sid}

        resp = client.post(f"/sessions/{sid}/query", json={"question": "q?"})
        assert resp.status_code == 410
        assert resp.json()["code"] == "session_destroyed"


def test_unknown_session_has_machine_readable_code(service_env):
    config, _, _ = service_env
    with make_client(config) as client:
        resp = client.get("/sessions/nope")
        assert resp.status_code == 404
        body = resp.json()
        assert body["code"] == "session_not_found"
        assert "message" in body and "detail" in body


def test_query_round_trip_with_snippet_fidelity(service_env):
    config, doc, _ = service_env
    with make_client(config) as client:
        sid = client.post("/sessions", json={}).json()["session_id"]
        client.post(f"/sessions/{sid}/documents",
                    json={"documents": [{"path": str(doc)}]})
        resp = client.post(f"/sessions/{sid}/query", json={
            "question": "The flux constant kappa9zeta equals how many units?",
            "options": [{"label": "A", "text": "11 units"},
                        {"label": "B", "text": "23 units"},
                        {"label": "C", "text": "47 units"},
                        {"label": "D", "text": "89 units"}],
        }).json()
    assert resp["parsed_label"] == "C"
    assert resp["sources"]
    top = resp["sources"][0]
    assert top["filename"] == "facts.txt"
    assert "kappa9zeta" in top["snippet"]
    assert set(top) == {"filename", "page", "seq", "snippet", "rank_score"}
    assert resp["timings"]
    # snippet text is byte-identical to the ingested chunk content
    text = doc.read_text()
    normalized_sentence = ("Measurements show the flux constant kappa9zeta "
                           "equals 47 units precisely.")
    assert normalized_sentence in text
    assert any(normalized_sentence in s["snippet"] for s in resp["sources"])


def test_query_overrides_change_behavior(service_env):
    config, doc, _ = service_env
    with make_client(config) as client:
        sid = client.post("/sessions", json={}).json()["session_id"]
        client.post(f"/sessions/{sid}/documents",
                    json={"documents": [{"path": str(doc)}]})
        body = {"question": "The flux constant kappa9zeta equals how many units?"}
        full = client.post(f"/sessions/{sid}/query", json=body).json()
        limited = client.post(f"/sessions/{sid}/query", json={
            **body, "overrides": {"pr.top_k": 1}}).json()
    assert len(full["sources"]) >= 1
    assert len(limited["sources"]) == 1


def test_invalid_override_rejected(service_env):
    config, doc, _ = service_env
    with make_client(config) as client:
        sid = client.post("/sessions", json={}).json()["session_id"]
        resp = client.post(f"/sessions/{sid}/query", json={
            "question": "q?", "overrides": {"pr.alpha": 2.0}})
        assert resp.status_code == 400
        assert resp.json()["code"] == "invalid_config"


def test_session_creation_applies_overrides(service_env):
    config, _, _ = service_env
    with make_client(config) as client:
        created = client.post("/sessions", json={
            "overrides": {"pr.top_k": 6}}).json()
        fetched = client.get(f"/sessions/{created['session_id']}").json()
    assert fetched["overrides"] == {"pr.top_k": 6}


def test_inline_content_upload(service_env):
    config, _, _ = service_env
    with make_client(config) as client:
        sid = client.post("/sessions", json={}).json()["session_id"]
        updated = client.post(f"/sessions/{sid}/documents", json={
            "documents": [{"filename": "inline.txt",
                           "content": "inline document body with words"}],
        }).json()
        assert updated["doc_count"] == 1
        resp = client.post(f"/sessions/{sid}/query", json={
            "question": "inline document body?"}).json()
    assert any(s["filename"] == "inline.txt" for s in resp["sources"])


def test_multipart_upload(service_env):
    config, _, _ = service_env
    with make_client(config) as client:
        sid = client.post("/sessions", json={}).json()["session_id"]
        updated = client.post(
            f"/sessions/{sid}/documents",
            files=[("files", ("upload.txt", b"uploaded body of text",
                              "text/plain"))]).json()
        assert updated["doc_count"] == 1


def test_config_endpoint_returns_effective_values(service_env):
    config, _, _ = service_env
    with make_client(config) as client:
        body = client.get("/config").json()
    assert body["chunk"]["max_tokens"] == 20
    assert body["llm"]["provider"] == "mock"


def test_shutdown_destroys_open_sessions(service_env):
    config, doc, tmp_path = service_env
    with make_client(config) as client:
        for _ in range(3):
            sid = client.post("/sessions", json={}).json()["session_id"]
            client.post(f"/sessions/{sid}/documents",
                        json={"documents": [{"path": str(doc)}]})
    # client context exit runs lifespan shutdown
    from ragrank.provenance import ProvenanceLog

    replay = ProvenanceLog(tmp_path / "prov.jsonl").replay()
    assert len(replay) == 3
    assert all(s["destroyed"] for s in replay.values())


def test_idle_sessions_reaped(service_env):
    config, _, _ = service_env
    app = create_app(config)
    with TestClient(app) as client:
        sid = client.post("/sessions", json={}).json()["session_id"]
        state = app.state.service
        state.manager.get(sid).last_used -= 10_000_000  # far in the past
        assert state.reap_idle() == 1
        assert client.get(f"/sessions/{sid}").json()["state"] == "destroyed"


def test_answer_events_logged(service_env):
    config, doc, tmp_path = service_env
    with make_client(config) as client:
        sid = client.post("/sessions", json={}).json()["session_id"]
        client.post(f"/sessions/{sid}/documents",
                    json={"documents": [{"path": str(doc)}]})
        client.post(f"/sessions/{sid}/query",
                    json={"question": "kappa9zeta value?"})
    from ragrank.provenance import ProvenanceLog

    events = ProvenanceLog(tmp_path / "prov.jsonl").events()
    assert any(e["event"] == "answer" and e["session_id"] == sid
               for e in events)
