from __future__ import annotations

import json
import threading

import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from concierge.cli import main as cli_main
from concierge.evalharness import default_corpus_path
from concierge.kb import default_kb_path
from concierge.service import (
    ConciergeService,
    MessageTooLarge,
    ServiceNotReady,
    UnknownSession,
    create_app,
)

from conftest import CONVERSATION_1


@pytest.fixture()
def service():
    return ConciergeService(kb=default_kb_path())


def _req_set(state: dict):
    return {
        (r["polarity"], r["attribute"], frozenset(r["values"]))
        for r in state["requirements"]
    }


def test_create_session_greeting(service):
    sid = service.create_session()
    assert service.greeting(sid) == "Hi there, how can I assist you?"
    assert service.transcript(sid) == [("agent", "Hi there, how can I assist you?")]


def test_two_sessions_are_independent(service):
    a = service.create_session()
    b = service.create_session()
    assert a != b
    service.post_message(a, "Can you recommend me a restaurant?")
    assert service.get_state(b)["requirements"] == []


def test_missing_kb_path_is_service_not_ready(tmp_path):
    with pytest.raises(ServiceNotReady):
        ConciergeService(kb=tmp_path / "nope.json")
    with pytest.raises(ServiceNotReady):
        ConciergeService(kb=None)


def test_post_message_unknown_session(service):
    with pytest.raises(UnknownSession):
        service.post_message("nope", "hello")


def test_oversized_message_rejected(service):
    sid = service.create_session()
    with pytest.raises(MessageTooLarge):
        service.post_message(sid, "x" * 3000)


def test_thank_leaves_state_unchanged(service):
    sid = service.create_session()
    service.post_message(sid, "Can you recommend me a restaurant?")
    before = service.get_state(sid)
    reply = service.post_message(sid, "Thanks!")
    assert reply.action == {"kind": "canned", "label": "thank"}
    assert _req_set(service.get_state(sid)) == _req_set(before)


def test_another_before_recommendation_is_clarified(service):
    sid = service.create_session()
    reply = service.post_message(sid, "another one")
    assert reply.action == {"kind": "canned", "label": "no_recommendation"}
    assert "not recommended anything yet" in reply.text


def test_view_history_through_the_service(service):
    sid = service.create_session()
    service.post_message(sid, "I want Italian food at a moderate price, high rating.")
    service.post_message(sid, "Any other recommendations?")
    reply = service.post_message(
        sid, "Can you show me the restaurant you recommended at first?"
    )
    assert reply.action["kind"] == "recommend"
    assert reply.action["name"] == "cappuccino italian bistro"
    # re-describing does not consume the history or the output list
    assert [h["name"] for h in reply.state["history"]] == [
        "cappuccino italian bistro",
        "palio's pizza cafe",
    ]


def test_exhausted_through_the_service(service):
    sid = service.create_session()
    service.post_message(sid, "I want Italian food at a moderate price, high rating.")
    service.post_message(sid, "another one")
    reply = service.post_message(sid, "another one")
    assert reply.action == {"kind": "canned", "label": "exhausted"}


def test_get_state_after_second_turn_matches_listing(service):
    sid = service.create_session()
    service.post_message(sid, CONVERSATION_1[0])
    service.post_message(sid, CONVERSATION_1[1])
    state = service.get_state(sid)
    assert state["text"] == (
        "require('name',['query']),\n"
        "require('establishment',['restaurant']),\n"
        "not_require('food type',['indian','thai'])"
    )


def test_post_message_state_equals_subsequent_get_state(service):
    sid = service.create_session()
    for turn in CONVERSATION_1[:4]:
        reply = service.post_message(sid, turn)
        assert reply.state == service.get_state(sid)


def test_history_contains_recommended_place(service):
    sid = service.create_session()
    for turn in CONVERSATION_1[:4]:
        reply = service.post_message(sid, turn)
    assert reply.action["kind"] == "recommend"
    state = service.get_state(sid)
    assert [h["id"] for h in state["history"]] == [reply.action["place_id"]]


def test_transcript_parity(service):
    sid = service.create_session()
    for turn in CONVERSATION_1:
        service.post_message(sid, turn)
    transcript = service.transcript(sid)
    assert len(transcript) == 1 + 2 * len(CONVERSATION_1)
    speakers = [speaker for speaker, _ in transcript]
    assert speakers[0] == "agent"
    assert speakers[1::2] == ["user"] * len(CONVERSATION_1)
    assert speakers[2::2] == ["agent"] * len(CONVERSATION_1)


def test_empty_intersection_is_surfaced_as_conflict(service):
    sid = service.create_session()
    reply = service.post_message(sid, "I want somewhere serving pizza and curry.")
    assert reply.action == {"kind": "canned", "label": "conflict"}
    assert "relax" in reply.text
    assert service.get_state(sid)["requirements"] == []


def test_concurrent_posts_to_one_session_serialize(service):
    sid = service.create_session()
    errors = []

    def worker(value: str):
        try:
            service.post_message(sid, f"I want {value} food.")
        except Exception as exc:  # pragma: no cover
            errors.append(exc)

    threads = [
        threading.Thread(target=worker, args=(value,))
        for value in ("italian", "thai", "mexican", "korean", "french")
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    transcript = service.transcript(sid)
    assert len(transcript) == 1 + 2 * 5
    # all five updates landed in one food-type disjunction
    state = service.get_state(sid)
    food = [r for r in state["requirements"] if r["attribute"] == "food type"]
    assert len(food) == 1
    assert set(food[0]["values"]) == {"italian", "thai", "mexican", "korean", "french"}


def test_distinct_sessions_do_not_interfere_concurrently(service):
    sids = [service.create_session() for _ in range(4)]
    values = ["italian", "thai", "mexican", "korean"]

    def worker(sid: str, value: str):
        for _ in range(3):
            service.post_message(sid, f"I want {value} food.")

    threads = [
        threading.Thread(target=worker, args=(sid, value))
        for sid, value in zip(sids, values)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for sid, value in zip(sids, values):
        state = service.get_state(sid)
        food = [r for r in state["requirements"] if r["attribute"] == "food type"]
        assert food[0]["values"] == [value]


def test_golden_script_replays_identically_through_llm_backend(replay_completions):
    from concierge.parse_frontend import LlmParser, ReplayClient

    rule_service = ConciergeService(kb=default_kb_path())
    llm_service = ConciergeService(
        kb=default_kb_path(), parser=LlmParser(ReplayClient(replay_completions))
    )
    rule_sid = rule_service.create_session()
    llm_sid = llm_service.create_session()
    for turn in CONVERSATION_1:
        rule_reply = rule_service.post_message(rule_sid, turn)
        llm_reply = llm_service.post_message(llm_sid, turn)
        assert rule_reply.text == llm_reply.text, turn
        assert _req_set(rule_reply.state) == _req_set(llm_reply.state), turn


def test_snapshot_persistence(tmp_path):
    service = ConciergeService(kb=default_kb_path(), snapshot_dir=tmp_path)
    sid = service.create_session()
    service.post_message(sid, "Can you recommend me a restaurant?")
    snapshot = json.loads((tmp_path / f"{sid}.json").read_text())
    assert snapshot["id"] == sid
    assert snapshot["state"]["text"].startswith("require('name',['query'])")


# -- HTTP API ---------------------------------------------------------------


@pytest.fixture()
def client(service):
    return TestClient(create_app(service))


def test_http_create_session(client):
    response = client.post("/sessions")
    assert response.status_code == 200
    body = response.json()
    assert "id" in body and body["greeting"]


def test_http_message_roundtrip(client):
    sid = client.post("/sessions").json()["id"]
    response = client.post(
        f"/sessions/{sid}/messages",
        json={"text": "Can you recommend me a restaurant?"},
    )
    assert response.status_code == 200
    body = response.json()
    assert body["action"]["kind"] == "ask"
    assert body["action"]["attribute"] == "food type"
    assert body["reply"]
    state = client.get(f"/sessions/{sid}/state").json()
    assert state == body["state"]


def test_http_unknown_session_404(client):
    assert client.get("/sessions/zzz/state").status_code == 404
    assert (
        client.post("/sessions/zzz/messages", json={"text": "hi"}).status_code == 404
    )


def test_http_oversized_message_413(client):
    sid = client.post("/sessions").json()["id"]
    response = client.post(f"/sessions/{sid}/messages", json={"text": "x" * 3000})
    assert response.status_code == 413


# -- CLI ---------------------------------------------------------------------


def test_cli_eval_runs_bundled_corpus():
    runner = CliRunner()
    result = runner.invoke(
        cli_main, ["eval", "--corpus", str(default_corpus_path())]
    )
    assert result.exit_code == 0
    report = json.loads(result.output)
    assert 0.0 <= report["mean_accuracy"] <= 1.0


def test_cli_eval_missing_corpus_is_config_error():
    runner = CliRunner()
    result = runner.invoke(cli_main, ["eval", "--corpus", "/nonexistent.jsonl"])
    assert result.exit_code == 2


def test_cli_repl_one_turn():
    runner = CliRunner()
    result = runner.invoke(
        cli_main,
        ["repl", "--kb", str(default_kb_path())],
        input="Can you recommend me a restaurant?\nquit\n",
    )
    assert result.exit_code == 0
    assert "Hi there, how can I assist you?" in result.output
    assert "food type" in result.output


def test_cli_repl_bad_kb_is_config_error(tmp_path):
    runner = CliRunner()
    result = runner.invoke(cli_main, ["repl", "--kb", str(tmp_path / "missing.json")])
    assert result.exit_code == 2


def test_cli_llm_requires_api_key(monkeypatch):
    monkeypatch.delenv("CONCIERGE_LLM_API_KEY", raising=False)
    runner = CliRunner()
    result = runner.invoke(
        cli_main, ["eval", "--corpus", str(default_corpus_path()), "--parser", "llm"]
    )
    assert result.exit_code == 2
