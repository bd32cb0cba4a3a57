"""Session-scoped chat orchestration and the HTTP JSON API.

One post_message call runs a full turn: parse -> filter -> preference
expansion -> state update (or specials routing) -> next action -> response
rendering. Turns within a session are serialized by a per-session lock;
the knowledgebase and style table are shared read-only.
"""

from __future__ import annotations

import json
import logging
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from pydantic import BaseModel

from . import recommend as rec
from .commonsense import EmptyIntersection, StyleTable, expand_preferences, load_style_table
from .dialog import (
    ActionKind,
    AgentAction,
    DialogState,
    KEY_INFO_DEFAULT,
    Polarity,
    next_action,
    record_no_preference,
    update_state,
)
from .kb import Knowledgebase, load_kb
from .nlg import (
    Templates,
    load_templates,
    render_canned,
    render_no_result,
    render_preference_conflict,
    render_question,
    render_recommendation,
    rephrase,
)
from .parse_frontend import NormalizedInput, ParseContext, RuleParser, normalize_parse
from .terms import Label, QUERY

logger = logging.getLogger(__name__)

MAX_MESSAGE_BYTES = 2048


class ServiceNotReady(RuntimeError):
    """The service cannot open sessions without a loaded knowledgebase."""


class UnknownSession(KeyError):
    def __init__(self, session_id: str):
        super().__init__(session_id)
        self.session_id = session_id


class MessageTooLarge(ValueError):
    def __init__(self, size: int):
        super().__init__(f"message of {size} bytes exceeds {MAX_MESSAGE_BYTES}")
        self.size = size


@dataclass
class Session:
    id: str
    state: DialogState
    ctx: ParseContext
    transcript: list[tuple[str, str]] = field(default_factory=list)
    created: str = ""
    updated: str = ""
    turn_count: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


@dataclass
class TurnReply:
    text: str
    action: dict
    state: dict


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _action_payload(action: AgentAction) -> dict:
    payload: dict = {"kind": action.kind.value}
    if action.kind is ActionKind.ASK:
        payload["attribute"] = action.attribute
    elif action.kind is ActionKind.RECOMMEND:
        r: rec.Recommendation = action.recommendation
        payload["place_id"] = r.place_id
        payload["name"] = dict(r.facts)["name"]
        payload["facts"] = [list(f) for f in r.facts]
        payload["justification"] = {
            "matched": [
                {"attribute": req.attribute, "values": list(req.values), "value": value}
                for req, value in r.justification.matched
            ],
            "avoided": [
                {"attribute": req.attribute, "values": list(req.values), "value": value}
                for req, value in r.justification.avoided
            ],
        }
    elif action.kind is ActionKind.NO_RESULT:
        report: rec.RelaxationReport = action.report
        payload["blocking"] = list(report.blocking)
        payload["satisfied"] = [
            {
                "polarity": req.polarity.value,
                "attribute": req.attribute,
                "values": list(req.values),
                "value": value,
            }
            for req, value in report.satisfied
        ]
        payload["suggestion"] = {a: list(v) for a, v in report.suggestion.items()}
    elif action.kind is ActionKind.CANNED:
        payload["label"] = action.label
    return payload


class ConciergeService:
    """Holds the shared knowledgebase, style table and all live sessions."""

    def __init__(
        self,
        kb: Knowledgebase | str | Path | None = None,
        style_table: StyleTable | str | Path | None = None,
        parser=None,
        templates: Templates | None = None,
        key_info: tuple[str, ...] = KEY_INFO_DEFAULT,
        merge_mode: str = "union",
        rephrase_backend=None,
        snapshot_dir: str | Path | None = None,
    ):
        if kb is None:
            raise ServiceNotReady("no knowledgebase configured")
        if not isinstance(kb, Knowledgebase):
            kb_path = Path(kb)
            if not kb_path.exists():
                raise ServiceNotReady(f"knowledgebase file not found: {kb_path}")
            kb = load_kb(kb_path)
        self.kb = kb
        if style_table is None or not isinstance(style_table, StyleTable):
            style_table = load_style_table(style_table)
        self.style_table = style_table
        self.parser = parser or RuleParser()
        self.templates = templates or load_templates()
        self.key_info = key_info
        self.merge_mode = merge_mode
        self.rephrase_backend = rephrase_backend
        self.snapshot_dir = Path(snapshot_dir) if snapshot_dir else None
        self._sessions: dict[str, Session] = {}
        self._registry_lock = threading.Lock()

    # -- session lifecycle ---------------------------------------------

    def create_session(self) -> str:
        session_id = uuid.uuid4().hex
        state = DialogState(key_info=self.key_info, merge_mode=self.merge_mode)
        session = Session(
            id=session_id,
            state=state,
            ctx=ParseContext(),
            created=_now(),
            updated=_now(),
        )
        greeting = render_canned("greeting", 0, self.templates)
        session.transcript.append(("agent", greeting))
        with self._registry_lock:
            self._sessions[session_id] = session
        self._persist(session)
        return session_id

    def _session(self, session_id: str) -> Session:
        with self._registry_lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSession(session_id)
        return session

    def greeting(self, session_id: str) -> str:
        return self._session(session_id).transcript[0][1]

    # -- the turn pipeline -----------------------------------------------

    def post_message(self, session_id: str, text: str) -> TurnReply:
        session = self._session(session_id)
        if len(text.encode("utf-8")) > MAX_MESSAGE_BYTES:
            raise MessageTooLarge(len(text.encode("utf-8")))
        with session.lock:
            session.transcript.append(("user", text))
            action = self._decide(session, text)
            reply = self._render(action, session)
            if self.rephrase_backend is not None:
                reply = rephrase(reply, self.rephrase_backend)
            session.transcript.append(("agent", reply))
            if action.kind is ActionKind.ASK:
                session.ctx.last_bot_question = (action.attribute, reply)
                session.ctx.discussed.add(action.attribute)
            else:
                session.ctx.last_bot_question = None
            session.turn_count += 1
            session.updated = _now()
            self._persist(session)
            return TurnReply(
                text=reply,
                action=_action_payload(action),
                state=self._state_payload(session),
            )

    def _decide(self, session: Session, text: str) -> AgentAction:
        if not text.strip():
            return AgentAction.canned("irrelevant")
        result = self.parser.parse(text, session.ctx)
        if result.label is Label.THANK:
            return AgentAction.canned("thank")
        if result.label is Label.IRRELEVANT:
            return AgentAction.canned("irrelevant")
        normalized = normalize_parse(result, session.ctx)
        if normalized.specials is not None:
            return self._handle_special(normalized, session)
        try:
            expanded = expand_preferences(normalized.requirements, self.style_table)
        except EmptyIntersection as exc:
            action = AgentAction.canned("conflict")
            action.report = exc  # carries attribute + concepts for rendering
            return action
        for attribute in normalized.no_preference:
            record_no_preference(attribute, session.state)
        update_state(expanded, session.state)
        for req in session.state.requirements:
            session.ctx.discussed.add(req.attribute)
        if self._is_query_only(expanded, normalized) and session.state.history:
            place_id = session.state.history[-1]
            return AgentAction.recommend(rec.describe(place_id, session.state, self.kb))
        return next_action(session.state, self.kb)

    def _is_query_only(self, expanded, normalized: NormalizedInput) -> bool:
        if not expanded or normalized.no_preference:
            return False
        return all(
            req.polarity is Polarity.REQUIRE and req.values == [QUERY]
            for req in expanded
        )

    def _handle_special(self, normalized: NormalizedInput, session: Session) -> AgentAction:
        special = normalized.specials
        try:
            if special.kind == "another_option":
                return AgentAction.recommend(rec.another_option(session.state, self.kb))
            return AgentAction.recommend(
                rec.view_history(session.state, special.ref, self.kb)
            )
        except rec.Exhausted:
            return AgentAction.canned("exhausted")
        except (rec.NoPriorRecommendation, rec.EmptyHistory):
            return AgentAction.canned("no_recommendation")
        except rec.HistoryIndexError:
            return AgentAction.canned("no_recommendation")

    def _render(self, action: AgentAction, session: Session) -> str:
        if action.kind is ActionKind.ASK:
            return render_question(action.attribute, self.templates)
        if action.kind is ActionKind.RECOMMEND:
            return render_recommendation(action.recommendation)
        if action.kind is ActionKind.NO_RESULT:
            return render_no_result(action.report)
        if action.label == "conflict":
            exc: EmptyIntersection = action.report
            return render_preference_conflict(exc.attribute, exc.concepts)
        return render_canned(action.label, session.turn_count, self.templates)

    # -- read access -------------------------------------------------------

    def get_state(self, session_id: str) -> dict:
        session = self._session(session_id)
        with session.lock:
            return self._state_payload(session)

    def _state_payload(self, session: Session) -> dict:
        state = session.state
        return {
            "requirements": [
                {
                    "polarity": req.polarity.value,
                    "attribute": req.attribute,
                    "values": list(req.values),
                }
                for req in state.requirements
            ],
            "text": state.render(),
            "output_list": [
                {"id": pid, "name": self.kb.get(pid).name} for pid in state.output_list
            ],
            "history": [
                {"id": pid, "name": self.kb.get(pid).name} for pid in state.history
            ],
        }

    def transcript(self, session_id: str) -> list[tuple[str, str]]:
        return list(self._session(session_id).transcript)

    def _persist(self, session: Session) -> None:
        if self.snapshot_dir is None:
            return
        self.snapshot_dir.mkdir(parents=True, exist_ok=True)
        payload = {
            "id": session.id,
            "created": session.created,
            "updated": session.updated,
            "transcript": [list(t) for t in session.transcript],
            "state": self._state_payload(session),
        }
        path = self.snapshot_dir / f"{session.id}.json"
        path.write_text(json.dumps(payload, indent=2), encoding="utf-8")


# ---------------------------------------------------------------------------
# HTTP API
# ---------------------------------------------------------------------------


class MessageBody(BaseModel):
    text: str


def create_app(service: ConciergeService):
    """FastAPI wrapper over the service; shapes documented in the README."""
    from fastapi import FastAPI, HTTPException
    from fastapi.responses import JSONResponse

    app = FastAPI(title="concierge", version="0.1.0")

    @app.post("/sessions")
    def create_session():
        session_id = service.create_session()
        return {"id": session_id, "greeting": service.greeting(session_id)}

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageBody):
        try:
            reply = service.post_message(session_id, body.text)
        except UnknownSession:
            raise HTTPException(status_code=404, detail="unknown session")
        except MessageTooLarge as exc:
            return JSONResponse(status_code=413, content={"detail": str(exc)})
        return {"reply": reply.text, "action": reply.action, "state": reply.state}

    @app.get("/sessions/{session_id}/state")
    def get_state(session_id: str):
        try:
            return service.get_state(session_id)
        except UnknownSession:
            raise HTTPException(status_code=404, detail="unknown session")

    return app
