"""Temporal magnitude estimation task: schedule and response bookkeeping.

The main block is a seeded permutation of five repetitions of each of the
twelve delay intervals (60 trials), preceded by four training trials drawn
at random. Responses are line lengths in pixels, bounded to [0, 685]; a
timeout is stored as a missing value. Training responses never enter the
analysis series.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .fitting import DataSeries, EmptyCellError
from .staircase import StaleTrialError

__all__ = [
    "TIMEOUT",
    "MagnitudeConfig",
    "MagnitudeTrial",
    "MagnitudeResponse",
    "MagnitudeSession",
    "OutOfRangeError",
    "IncompleteSessionError",
    "new_magnitude_session",
    "record_magnitude",
    "magnitude_series",
]

TIMEOUT = "timeout"


class OutOfRangeError(ValueError):
    pass


class IncompleteSessionError(Exception):
    pass


@dataclass(frozen=True)
class MagnitudeConfig:
    intervals: tuple = tuple(range(3, 37, 3))
    repetitions: int = 5
    n_training: int = 4
    line_px_max: int = 685
    response_window_s: float = 10.0

    def to_dict(self):
        return {
            "intervals": list(self.intervals),
            "repetitions": self.repetitions,
            "n_training": self.n_training,
            "line_px_max": self.line_px_max,
            "response_window_s": self.response_window_s,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "intervals" in d:
            d["intervals"] = tuple(d["intervals"])
        return cls(**d)


@dataclass(frozen=True)
class MagnitudeTrial:
    interval: float
    repetition_index: int
    is_training: bool
    index_global: int


@dataclass(frozen=True)
class MagnitudeResponse:
    trial: MagnitudeTrial
    line_px: int | None  # None == timeout / missing
    latency: float | None = None


class MagnitudeSession:
    """Fixed-schedule session; trials are served in order and answered once."""

    def __init__(self, seed: int, config: MagnitudeConfig | None = None):
        self.seed = int(seed)
        self.config = config or MagnitudeConfig()
        rng = random.Random(self.seed)
        training = [
            MagnitudeTrial(
                interval=float(rng.choice(self.config.intervals)),
                repetition_index=0,
                is_training=True,
                index_global=i + 1,
            )
            for i in range(self.config.n_training)
        ]
        pairs = [
            (iv, rep)
            for iv in self.config.intervals
            for rep in range(1, self.config.repetitions + 1)
        ]
        rng.shuffle(pairs)
        main = [
            MagnitudeTrial(
                interval=float(iv),
                repetition_index=rep,
                is_training=False,
                index_global=self.config.n_training + i + 1,
            )
            for i, (iv, rep) in enumerate(pairs)
        ]
        self.schedule = tuple(training + main)
        self.responses: list = []
        self.events: list = []

    @property
    def n_trials(self) -> int:
        return len(self.schedule)

    @property
    def complete(self) -> bool:
        return len(self.responses) == len(self.schedule)

    @property
    def status(self) -> str:
        return "complete" if self.complete else "running"

    def next_trial(self) -> MagnitudeTrial:
        if self.complete:
            raise IndexError("session is complete")
        return self.schedule[len(self.responses)]

    def record(self, trial: MagnitudeTrial, line_px, latency=None) -> None:
        """Record a pixel response or TIMEOUT/None for a missed trial."""
        if self.complete:
            raise StaleTrialError("session is complete")
        current = self.schedule[len(self.responses)]
        if trial.index_global != current.index_global:
            raise StaleTrialError(
                f"trial {trial.index_global} is not the current trial "
                f"({current.index_global})"
            )
        if line_px == TIMEOUT:
            line_px = None
        if line_px is not None:
            if isinstance(line_px, float) and not line_px.is_integer():
                raise OutOfRangeError(f"line_px must be an integer, got {line_px}")
            line_px = int(line_px)
            if not 0 <= line_px <= self.config.line_px_max:
                raise OutOfRangeError(
                    f"line_px must be in [0, {self.config.line_px_max}], got {line_px}"
                )
        response = MagnitudeResponse(trial=current, line_px=line_px, latency=latency)
        self.responses.append(response)
        self.events.append(("response", response))

    def raw_points(self) -> list:
        """Main-block (interval, line_px) pairs, one per answered repetition.

        Repeated intervals make this unsuitable for the fitting pipeline's
        series type; it exists for per-trial analyses done elsewhere.
        """
        return [
            (resp.trial.interval, resp.line_px)
            for resp in self.responses
            if not resp.trial.is_training and resp.line_px is not None
        ]

    def series(self) -> DataSeries:
        """Per-interval mean over non-missing main-block repetitions."""
        if not self.complete:
            raise IncompleteSessionError("session is not complete")
        by_interval = {float(iv): [] for iv in self.config.intervals}
        for resp in self.responses:
            if resp.trial.is_training:
                continue
            if resp.line_px is not None:
                by_interval[resp.trial.interval].append(resp.line_px)
        empty = [iv for iv, vals in by_interval.items() if not vals]
        if empty:
            raise EmptyCellError(f"all repetitions missing at intervals {sorted(empty)}")
        ts = sorted(by_interval)
        return DataSeries(
            t=tuple(ts), y=tuple(math.fsum(by_interval[iv]) / len(by_interval[iv]) for iv in ts)
        )


def new_magnitude_session(seed: int, config: MagnitudeConfig | None = None) -> MagnitudeSession:
    return MagnitudeSession(seed, config)


def record_magnitude(session, trial, line_px, latency=None) -> MagnitudeSession:
    session.record(trial, line_px, latency)
    return session


def magnitude_series(session) -> DataSeries:
    return session.series()
