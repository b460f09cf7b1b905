"""Adaptive staircase engine for the intertemporal choice task.

One session runs twelve independent staircases, one per delay interval.
Every block presents the still-active intervals in a fresh seeded
permutation; the later reward starts at 150 and moves +10% after a "now"
choice and -10% after a "later" choice. An interval's staircase is
complete once three choice inversions have occurred past its tenth trial;
the session ends when all intervals are complete (or capped).

The engine is deterministic given (seed, choice sequence) and keeps an
append-only event log from which sessions can be replayed exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .fitting import DataSeries

__all__ = [
    "NOW",
    "LATER",
    "StaircaseConfig",
    "ChoiceTrial",
    "ChoiceRecord",
    "EquivalencePoint",
    "ChoiceSession",
    "StaircaseError",
    "SessionCompleteError",
    "StaleTrialError",
    "IncompleteIntervalError",
    "new_choice_session",
    "next_trial",
    "record_choice",
    "interval_complete",
    "equivalence_point",
    "session_dv_series",
]

NOW = "now"
LATER = "later"

RUNNING = "running"
COMPLETE = "complete"
CAPPED = "capped"


class StaircaseError(Exception):
    pass


class SessionCompleteError(StaircaseError):
    pass


class StaleTrialError(StaircaseError):
    pass


class IncompleteIntervalError(StaircaseError):
    pass


@dataclass(frozen=True)
class StaircaseConfig:
    intervals: tuple = tuple(range(3, 37, 3))
    now_amount: float = 100.0
    later_start: float = 150.0
    step: float = 0.10
    inversions_required: int = 3
    trial_gate: int = 10
    max_trials_per_interval: int = 60

    def __post_init__(self):
        if not self.intervals:
            raise ValueError("need at least one interval")
        if any(iv <= 0 for iv in self.intervals):
            raise ValueError("intervals must be positive")
        if len(set(self.intervals)) != len(self.intervals):
            raise ValueError("intervals must be distinct")
        if not 0 < self.step < 1:
            raise ValueError(f"step must be in (0, 1), got {self.step}")
        if self.later_start <= 0 or self.now_amount <= 0:
            raise ValueError("amounts must be positive")

    def to_dict(self):
        return {
            "intervals": list(self.intervals),
            "now_amount": self.now_amount,
            "later_start": self.later_start,
            "step": self.step,
            "inversions_required": self.inversions_required,
            "trial_gate": self.trial_gate,
            "max_trials_per_interval": self.max_trials_per_interval,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "intervals" in d:
            d["intervals"] = tuple(d["intervals"])
        return cls(**d)


@dataclass(frozen=True)
class ChoiceTrial:
    interval: float
    now_amount: float
    later_amount: float
    index_global: int
    index_within: int

    @property
    def later_amount_display(self) -> float:
        """Currency shown to the participant, rounded to 2 decimals."""
        return round(self.later_amount, 2)


@dataclass(frozen=True)
class ChoiceRecord:
    trial: ChoiceTrial
    choice: str
    response_time: float | None = None


@dataclass(frozen=True)
class EquivalencePoint:
    interval: float
    ep: float
    dv: float


@dataclass
class _IntervalState:
    records: list = field(default_factory=list)
    n_now: int = 0
    n_later: int = 0
    inversion_indices: list = field(default_factory=list)  # within-interval index of 2nd trial
    capped: bool = False


class ChoiceSession:
    """Single-writer staircase session; call next_trial/record_choice serially."""

    def __init__(self, seed: int, config: StaircaseConfig | None = None):
        self.seed = int(seed)
        self.config = config or StaircaseConfig()
        self._rng = random.Random(self.seed)
        self._states = {iv: _IntervalState() for iv in self.config.intervals}
        self._block: list = []
        self._outstanding: ChoiceTrial | None = None
        self._n_answered = 0
        self.events: list = []

    # --- derived state ---

    def _complete_intervals(self):
        need = self.config.inversions_required
        return {iv for iv, st in self._states.items() if len(st.inversion_indices) >= need}

    def capped_intervals(self):
        return {iv for iv, st in self._states.items() if st.capped}

    @property
    def status(self) -> str:
        done = self._complete_intervals()
        capped = self.capped_intervals()
        if len(done) == len(self.config.intervals):
            return COMPLETE
        if len(done | capped) == len(self.config.intervals):
            return CAPPED
        return RUNNING

    @property
    def total_trials(self) -> int:
        return self._n_answered

    def records(self, interval) -> list:
        return list(self._states[interval].records)

    # --- trial flow ---

    def _schedulable(self):
        # every non-capped interval keeps being presented until the whole
        # session terminates, mirroring the global stopping rule
        cap = self.config.max_trials_per_interval
        return [
            iv
            for iv, st in self._states.items()
            if not st.capped and len(st.records) < cap
        ]

    def next_trial(self) -> ChoiceTrial:
        if self._outstanding is not None:
            return self._outstanding
        if self.status != RUNNING:
            raise SessionCompleteError(f"session is {self.status}")
        while True:
            if not self._block:
                active = self._schedulable()
                if not active:
                    raise SessionCompleteError("no schedulable intervals left")
                self._block = sorted(active)
                self._rng.shuffle(self._block)
            interval = self._block.pop(0)
            st = self._states[interval]
            if st.capped or len(st.records) >= self.config.max_trials_per_interval:
                continue
            break
        amount = (
            self.config.later_start
            * (1.0 + self.config.step) ** st.n_now
            * (1.0 - self.config.step) ** st.n_later
        )
        trial = ChoiceTrial(
            interval=float(interval),
            now_amount=self.config.now_amount,
            later_amount=amount,
            index_global=self._n_answered + 1,
            index_within=len(st.records) + 1,
        )
        self._outstanding = trial
        self.events.append(("trial", trial))
        return trial

    def record_choice(self, trial: ChoiceTrial, choice: str, response_time=None) -> None:
        if choice not in (NOW, LATER):
            raise ValueError(f"choice must be {NOW!r} or {LATER!r}, got {choice!r}")
        if self._outstanding is None or trial.index_global != self._outstanding.index_global:
            raise StaleTrialError(
                f"trial {trial.index_global} is not the outstanding trial"
            )
        st = self._states[trial.interval]
        prev = st.records[-1].choice if st.records else None
        record = ChoiceRecord(trial=self._outstanding, choice=choice, response_time=response_time)
        st.records.append(record)
        if choice == NOW:
            st.n_now += 1
        else:
            st.n_later += 1
        if prev is not None and choice != prev:
            # inversion attributed to the index of its second trial
            if trial.index_within >= self.config.trial_gate + 1:
                st.inversion_indices.append(trial.index_within)
        if (
            len(st.records) >= self.config.max_trials_per_interval
            and len(st.inversion_indices) < self.config.inversions_required
        ):
            st.capped = True
        self._outstanding = None
        self._n_answered += 1
        self.events.append(("response", record))

    # --- analysis outputs ---

    def interval_complete(self, interval) -> bool:
        if interval not in self._states:
            raise KeyError(f"unknown interval {interval}")
        st = self._states[interval]
        return len(st.inversion_indices) >= self.config.inversions_required

    def equivalence_point(self, interval) -> EquivalencePoint:
        if not self.interval_complete(interval):
            raise IncompleteIntervalError(
                f"interval {interval} has not reached {self.config.inversions_required} "
                f"post-gate inversions"
            )
        st = self._states[interval]
        gate = self.config.trial_gate
        points = []
        for i in range(1, len(st.records)):
            a, b = st.records[i - 1], st.records[i]
            if a.choice != b.choice and b.trial.index_within >= gate + 1:
                points.append((a.trial.later_amount + b.trial.later_amount) / 2.0)
                if len(points) == self.config.inversions_required:
                    break
        ep = sum(points) / len(points)
        return EquivalencePoint(
            interval=float(interval), ep=ep, dv=self.config.now_amount / ep
        )

    def dv_series(self) -> DataSeries:
        if self.status != COMPLETE:
            raise IncompleteIntervalError(f"session is {self.status}, not complete")
        eps = [self.equivalence_point(iv) for iv in sorted(self.config.intervals)]
        return DataSeries(
            t=tuple(e.interval for e in eps), y=tuple(e.dv for e in eps)
        )


# Functional aliases matching the operation-style API.

def new_choice_session(seed: int, config: StaircaseConfig | None = None) -> ChoiceSession:
    return ChoiceSession(seed, config)


def next_trial(session: ChoiceSession) -> ChoiceTrial:
    return session.next_trial()


def record_choice(session, trial, choice, response_time=None) -> ChoiceSession:
    session.record_choice(trial, choice, response_time)
    return session


def interval_complete(session, interval) -> bool:
    return session.interval_complete(interval)


def equivalence_point(session, interval) -> EquivalencePoint:
    return session.equivalence_point(interval)


def session_dv_series(session) -> DataSeries:
    return session.dv_series()
