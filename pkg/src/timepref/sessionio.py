"""Event-sourced session files and CSV export.

A session file is line-delimited JSON: one header line followed by trial /
response / status events with strictly increasing sequence numbers.
Loading replays the events through a fresh engine seeded from the header,
verifying at each step that the engine reproduces the recorded trials, so
a loaded session is state-identical to the one that wrote the file.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .fitting import DataSeries
from .magnitude import MagnitudeConfig, MagnitudeSession
from .staircase import ChoiceSession, StaircaseConfig

__all__ = [
    "SCHEMA",
    "SessionFileError",
    "SchemaMismatchError",
    "CorruptEventError",
    "SessionHeader",
    "save_session",
    "load_session",
    "session_events",
    "export_csv",
    "ingest_csv",
    "load_directory",
]

SCHEMA = "timepref-session"
VERSION = 1

CHOICE = "choice"
MAGNITUDE = "magnitude"


class SessionFileError(Exception):
    pass


class SchemaMismatchError(SessionFileError):
    pass


class CorruptEventError(SessionFileError):
    pass


@dataclass(frozen=True)
class SessionHeader:
    subject_id: str
    task: str
    seed: int
    config: dict
    task_order: str | None = None

    def to_dict(self):
        return {
            "schema": SCHEMA,
            "version": VERSION,
            "subject_id": self.subject_id,
            "task": self.task,
            "seed": self.seed,
            "task_order": self.task_order,
            "config": self.config,
        }


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def header_for(session, subject_id: str, task_order=None) -> SessionHeader:
    if isinstance(session, ChoiceSession):
        task, config = CHOICE, session.config.to_dict()
    elif isinstance(session, MagnitudeSession):
        task, config = MAGNITUDE, session.config.to_dict()
    else:
        raise TypeError(f"unsupported session type {type(session)!r}")
    return SessionHeader(
        subject_id=subject_id, task=task, seed=session.seed,
        config=config, task_order=task_order,
    )


def encode_event(task: str, kind: str, payload, seq: int) -> dict:
    if kind == "status":
        return {"seq": seq, "type": "status", "status": payload}
    if task == CHOICE:
        if kind == "trial":
            t = payload
            return {
                "seq": seq,
                "type": "trial",
                "interval": t.interval,
                "now_amount": t.now_amount,
                "later_amount": t.later_amount,
                "index_global": t.index_global,
                "index_within": t.index_within,
            }
        rec = payload
        return {
            "seq": seq,
            "type": "response",
            "index_global": rec.trial.index_global,
            "choice": rec.choice,
            "response_time": rec.response_time,
        }
    if kind == "trial":
        t = payload
        return {
            "seq": seq,
            "type": "trial",
            "interval": t.interval,
            "repetition_index": t.repetition_index,
            "is_training": t.is_training,
            "index_global": t.index_global,
        }
    resp = payload
    return {
        "seq": seq,
        "type": "response",
        "index_global": resp.trial.index_global,
        "line_px": resp.line_px,
        "latency": resp.latency,
    }


def session_events(session, task: str):
    """Serialize a session's accumulated event log, seq-numbered from 1."""
    out = []
    seq = 0
    if task == MAGNITUDE:
        # the magnitude schedule is fixed, so trial events are implied;
        # interleave them for audit parity with the choice task
        for resp in session.responses:
            seq += 1
            out.append(encode_event(task, "trial", resp.trial, seq))
            seq += 1
            out.append(encode_event(task, "response", resp, seq))
    else:
        for kind, payload in session.events:
            seq += 1
            out.append(encode_event(task, kind, payload, seq))
    if session.status != "running":
        seq += 1
        out.append(encode_event(task, "status", session.status, seq))
    return out


def save_session(session, path, subject_id: str, task_order=None) -> Path:
    """Write header plus the full event log; returns the path."""
    path = Path(path)
    header = header_for(session, subject_id, task_order)
    lines = [_dump(header.to_dict())]
    lines.extend(_dump(e) for e in session_events(session, header.task))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@dataclass
class LoadedSession:
    session: object
    header: SessionHeader
    n_events: int


def _parse_header(line, path):
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise SchemaMismatchError(f"{path}: header is not valid JSON") from exc
    if not isinstance(raw, dict) or raw.get("schema") != SCHEMA:
        raise SchemaMismatchError(f"{path}: not a {SCHEMA} file")
    if raw.get("version") != VERSION:
        raise SchemaMismatchError(f"{path}: unsupported version {raw.get('version')!r}")
    return SessionHeader(
        subject_id=raw["subject_id"],
        task=raw["task"],
        seed=raw["seed"],
        config=raw["config"],
        task_order=raw.get("task_order"),
    )


def load_session(path) -> LoadedSession:
    """Rebuild a session by replaying its event file.

    Raises SchemaMismatchError for empty or foreign files and
    CorruptEventError for sequence gaps or events that disagree with the
    deterministic replay.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise SchemaMismatchError(f"{path}: empty file")
    header = _parse_header(lines[0], path)

    if header.task == CHOICE:
        session = ChoiceSession(header.seed, StaircaseConfig.from_dict(header.config))
    elif header.task == MAGNITUDE:
        session = MagnitudeSession(header.seed, MagnitudeConfig.from_dict(header.config))
    else:
        raise SchemaMismatchError(f"{path}: unknown task {header.task!r}")

    expected_seq = 0
    recorded_status = None
    for line in lines[1:]:
        try:
            event = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorruptEventError(f"{path}: malformed event line") from exc
        expected_seq += 1
        if event.get("seq") != expected_seq:
            raise CorruptEventError(
                f"{path}: sequence gap (expected {expected_seq}, got {event.get('seq')})"
            )
        etype = event.get("type")
        if etype == "status":
            recorded_status = event.get("status")
            continue
        if header.task == CHOICE:
            _replay_choice_event(session, event, path)
        else:
            _replay_magnitude_event(session, event, path)
    if recorded_status is not None and session.status != recorded_status:
        raise CorruptEventError(
            f"{path}: recorded status {recorded_status!r} but replay is {session.status!r}"
        )
    return LoadedSession(session=session, header=header, n_events=expected_seq)


def _replay_choice_event(session, event, path):
    etype = event["type"]
    if etype == "trial":
        trial = session.next_trial()
        for key in ("interval", "index_global", "index_within"):
            if event.get(key) != getattr(trial, key):
                raise CorruptEventError(
                    f"{path}: trial event {event['seq']} disagrees with replay on {key}"
                )
        if abs(event.get("later_amount", -1.0) - trial.later_amount) > 1e-9:
            raise CorruptEventError(
                f"{path}: trial event {event['seq']} disagrees with replay on later_amount"
            )
    elif etype == "response":
        trial = session.next_trial()
        if event.get("index_global") != trial.index_global:
            raise CorruptEventError(
                f"{path}: response event {event['seq']} answers trial "
                f"{event.get('index_global')}, expected {trial.index_global}"
            )
        session.record_choice(trial, event["choice"], event.get("response_time"))
    else:
        raise CorruptEventError(f"{path}: unknown event type {etype!r}")


def _replay_magnitude_event(session, event, path):
    etype = event["type"]
    if etype == "trial":
        trial = session.next_trial()
        if (
            event.get("interval") != trial.interval
            or event.get("index_global") != trial.index_global
        ):
            raise CorruptEventError(
                f"{path}: trial event {event['seq']} disagrees with the schedule"
            )
    elif etype == "response":
        trial = session.next_trial()
        if event.get("index_global") != trial.index_global:
            raise CorruptEventError(
                f"{path}: response event {event['seq']} answers trial "
                f"{event.get('index_global')}, expected {trial.index_global}"
            )
        session.record(trial, event.get("line_px"), event.get("latency"))
    else:
        raise CorruptEventError(f"{path}: unknown event type {etype!r}")


def load_directory(directory):
    """Load every session file in a directory, sorted by filename."""
    directory = Path(directory)
    out = []
    for path in sorted(directory.glob("*.jsonl")):
        out.append((path, load_session(path)))
    return out


# --- CSV export -------------------------------------------------------------


def export_csv(sessions, kind: str, path) -> int:
    """Write a per-interval summary CSV for complete sessions.

    ``sessions`` is a list of (subject_id, session). Incomplete sessions
    are skipped; the return value counts the skipped ones.
    """
    path = Path(path)
    skipped = 0
    rows = []
    if kind == CHOICE:
        fieldnames = ["subject", "interval_months", "ep", "dv"]
        for subject_id, session in sessions:
            if session.status != "complete":
                skipped += 1
                continue
            for iv in sorted(session.config.intervals):
                point = session.equivalence_point(iv)
                rows.append([subject_id, float(iv), point.ep, point.dv])
    elif kind == MAGNITUDE:
        fieldnames = ["subject", "interval_months", "mean_px", "n_missing"]
        for subject_id, session in sessions:
            if session.status != "complete":
                skipped += 1
                continue
            series = session.series()
            missing = {float(iv): 0 for iv in session.config.intervals}
            for resp in session.responses:
                if not resp.trial.is_training and resp.line_px is None:
                    missing[resp.trial.interval] += 1
            for t, y in zip(series.t, series.y):
                rows.append([subject_id, t, y, missing[t]])
    else:
        raise ValueError(f"unknown export kind {kind!r}")

    rows.sort(key=lambda r: (r[0], r[1]))
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return skipped


def ingest_csv(path, kind: str) -> dict:
    """Read an exported CSV back into {subject_id: DataSeries}."""
    path = Path(path)
    value_col = {"choice": "dv", "magnitude": "mean_px"}[kind]
    by_subject: dict = {}
    with path.open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            entry = by_subject.setdefault(row["subject"], ([], []))
            entry[0].append(float(row["interval_months"]))
            entry[1].append(float(row[value_col]))
    return {
        subject: DataSeries(t=tuple(ts), y=tuple(ys))
        for subject, (ts, ys) in by_subject.items()
    }


class SessionAppender:
    """Durable incremental writer used by the live service.

    The header is written on open; each event is flushed and fsynced
    before the call returns, so an acknowledged response is on disk.
    """

    def __init__(self, path, header: SessionHeader):
        self.path = Path(path)
        self.task = header.task
        self._fh = self.path.open("w", encoding="utf-8")
        self._seq = 0
        self._write_line(_dump(header.to_dict()))

    def _write_line(self, line: str):
        self._fh.write(line + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def append(self, kind: str, payload) -> int:
        self._seq += 1
        self._write_line(_dump(encode_event(self.task, kind, payload, self._seq)))
        return self._seq

    def close(self):
        self._fh.close()
