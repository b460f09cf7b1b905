"""HTTP session API serving trials to the browser front-end.

Endpoints (JSON over HTTP):

    POST /sessions                     create a session; assigns task order
    GET  /sessions/{id}/next-trial     idempotent until the trial is answered
    POST /sessions/{id}/response       records a response; 409 on stale token
    GET  /sessions/{id}/results        EP/DV or magnitude series when complete
    GET  /instructions                 localized instruction strings

Every accepted response is appended to the session's event file before the
request is acknowledged; restarting the server re-opens sessions from disk.
"""

from __future__ import annotations

import json
import threading
import uuid
from importlib import resources as importlib_resources
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .magnitude import MagnitudeConfig, MagnitudeSession, OutOfRangeError
from .sessionio import CHOICE, SessionAppender, header_for, load_session
from .staircase import (
    ChoiceSession,
    SessionCompleteError,
    StaircaseConfig,
    StaleTrialError,
)

__all__ = ["create_app", "load_instructions"]

TASK_ORDERS = ("magnitude_first", "choice_first")


def load_instructions() -> dict:
    ref = importlib_resources.files("timepref.resources").joinpath("instructions.json")
    return json.loads(ref.read_text(encoding="utf-8"))


class CreateSession(BaseModel):
    task: str = Field(pattern="^(choice|magnitude)$")
    subject_id: str | None = None
    seed: int | None = None
    config: dict | None = None


class ResponseBody(BaseModel):
    trial_token: str
    choice: str | None = None
    line_px: int | None = None
    timeout: bool = False
    response_time: float | None = None


class _Live:
    def __init__(self, session, header, appender):
        self.session = session
        self.header = header
        self.appender = appender
        self.lock = threading.Lock()
        self.issued_tokens: set = set()

    @property
    def task(self):
        return self.header.task


class SessionStore:
    """Live sessions plus counterbalanced task-order assignment."""

    def __init__(self, data_dir):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.lock = threading.Lock()
        self.sessions: dict = {}
        self.subject_orders: dict = {}
        for path in sorted(self.data_dir.glob("*.jsonl")):
            try:
                loaded = load_session(path)
            except Exception:
                continue
            if loaded.header.task_order:
                self.subject_orders.setdefault(
                    loaded.header.subject_id, loaded.header.task_order
                )

    def assign_order(self, subject_id: str) -> str:
        with self.lock:
            if subject_id not in self.subject_orders:
                order = TASK_ORDERS[len(self.subject_orders) % 2]
                self.subject_orders[subject_id] = order
            return self.subject_orders[subject_id]

    def create(self, body: CreateSession) -> tuple:
        session_id = uuid.uuid4().hex[:12]
        subject_id = body.subject_id or f"subject-{session_id[:6]}"
        seed = body.seed if body.seed is not None else uuid.uuid4().int % (1 << 31)
        if body.task == CHOICE:
            config = (
                StaircaseConfig.from_dict(body.config) if body.config else StaircaseConfig()
            )
            session = ChoiceSession(seed, config)
        else:
            config = (
                MagnitudeConfig.from_dict(body.config) if body.config else MagnitudeConfig()
            )
            session = MagnitudeSession(seed, config)
        order = self.assign_order(subject_id)
        header = header_for(session, subject_id, task_order=order)
        appender = SessionAppender(self.data_dir / f"{session_id}.jsonl", header)
        live = _Live(session, header, appender)
        with self.lock:
            self.sessions[session_id] = live
        return session_id, live

    def get(self, session_id: str) -> _Live:
        with self.lock:
            live = self.sessions.get(session_id)
        if live is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return live


def _issue_trial(live):
    """Return the outstanding trial, logging it the first time it is issued."""
    trial = live.session.next_trial()
    token = str(trial.index_global)
    if token not in live.issued_tokens:
        live.issued_tokens.add(token)
        live.appender.append("trial", trial)
    return trial, token


def _choice_trial_payload(trial):
    return {
        "interval": trial.interval,
        "now_amount": trial.now_amount,
        "later_amount": trial.later_amount,
        "later_amount_display": trial.later_amount_display,
        "index_global": trial.index_global,
        "index_within": trial.index_within,
    }


def _magnitude_trial_payload(trial, config):
    return {
        "interval": trial.interval,
        "repetition_index": trial.repetition_index,
        "is_training": trial.is_training,
        "index_global": trial.index_global,
        "line_px_max": config.line_px_max,
        "response_window_s": config.response_window_s,
    }


def create_app(data_dir) -> FastAPI:
    app = FastAPI(title="timepref session service")
    store = SessionStore(data_dir)
    app.state.store = store

    @app.post("/sessions")
    def create_session(body: CreateSession):
        session_id, live = store.create(body)
        return {
            "session_id": session_id,
            "task": live.task,
            "subject_id": live.header.subject_id,
            "task_order": live.header.task_order,
            "seed": live.header.seed,
        }

    @app.get("/sessions/{session_id}/next-trial")
    def next_trial(session_id: str):
        live = store.get(session_id)
        with live.lock:
            session = live.session
            if session.status != "running":
                return {"complete": True, "status": session.status}
            trial, token = _issue_trial(live)
            if live.task == CHOICE:
                payload = _choice_trial_payload(trial)
            else:
                payload = _magnitude_trial_payload(trial, session.config)
            return {"complete": False, "trial_token": token, "trial": payload}

    @app.post("/sessions/{session_id}/response")
    def post_response(session_id: str, body: ResponseBody):
        live = store.get(session_id)
        with live.lock:
            session = live.session
            if session.status != "running":
                raise HTTPException(status_code=409, detail="session already finished")
            try:
                current, _ = _issue_trial(live)
            except SessionCompleteError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            if body.trial_token != str(current.index_global):
                raise HTTPException(
                    status_code=409,
                    detail=f"stale trial token {body.trial_token}; "
                    f"outstanding is {current.index_global}",
                )
            if live.task == CHOICE:
                if body.choice not in ("now", "later"):
                    raise HTTPException(
                        status_code=422, detail="choice must be 'now' or 'later'"
                    )
                session.record_choice(current, body.choice, body.response_time)
                record = session.records(current.interval)[-1]
                live.appender.append("response", record)
            else:
                value = None if body.timeout else body.line_px
                if value is None and not body.timeout:
                    raise HTTPException(
                        status_code=422, detail="line_px required unless timeout"
                    )
                try:
                    session.record(current, value, body.response_time)
                except OutOfRangeError as exc:
                    raise HTTPException(status_code=422, detail=str(exc)) from exc
                except StaleTrialError as exc:
                    raise HTTPException(status_code=409, detail=str(exc)) from exc
                live.appender.append("response", session.responses[-1])
            status = session.status
            if status != "running":
                live.appender.append("status", status)
            return {
                "accepted": True,
                "next_available": status == "running",
                "status": status,
            }

    @app.get("/sessions/{session_id}/results")
    def results(session_id: str):
        live = store.get(session_id)
        with live.lock:
            session = live.session
            if session.status != "complete":
                raise HTTPException(
                    status_code=409, detail=f"session is {session.status}, not complete"
                )
            if live.task == CHOICE:
                series = [
                    {
                        "interval": point.interval,
                        "ep": point.ep,
                        "dv": point.dv,
                    }
                    for point in (
                        session.equivalence_point(iv)
                        for iv in sorted(session.config.intervals)
                    )
                ]
            else:
                data = session.series()
                missing = {float(iv): 0 for iv in session.config.intervals}
                for resp in session.responses:
                    if not resp.trial.is_training and resp.line_px is None:
                        missing[resp.trial.interval] += 1
                series = [
                    {"interval": t, "mean_px": y, "n_missing": missing[t]}
                    for t, y in zip(data.t, data.y)
                ]
            return {"task": live.task, "series": series}

    @app.get("/instructions")
    def instructions():
        return load_instructions()

    return app
