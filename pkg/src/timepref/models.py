"""Discounting and psychophysical response functions.

All evaluators are pure and accept scalars or numpy arrays for the time
argument. Time is measured in calendar months; discount values are
dimensionless fractions of the immediate reward.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "H_EPSILON",
    "Exponential",
    "QuasiHyperbolic",
    "ProportionalHyperbolic",
    "GeneralHyperbolic",
    "SubjectiveGeneralHyperbolic",
    "Linear",
    "Power",
    "DiscountParams",
    "PsychParams",
    "eval_exponential",
    "eval_quasi_hyperbolic",
    "eval_proportional_hyperbolic",
    "eval_general_hyperbolic",
    "eval_subjective_general_hyperbolic",
    "decreasing_impatience",
    "eval_psych",
    "discount_value",
]

# Below this threshold the curvature parameter is treated as zero and the
# exponential limit is used; the direct power form loses precision there.
H_EPSILON = 1e-8


def _as_time(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    return t


def _maybe_scalar(x, template):
    return float(x) if np.ndim(template) == 0 else x


def eval_exponential(delta: float, t) -> float:
    """Constant-rate discount: e^(-delta*t)."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    tt = _as_time(t)
    return _maybe_scalar(np.exp(-delta * tt), t)


def eval_quasi_hyperbolic(y: float, delta: float, t) -> float:
    """Present-bias discount: 1 at t=0, y*delta^t afterwards.

    The jump at t=0 is intentional; the bias factor y only applies to
    delayed rewards. Continuous t >= 0 is accepted even though the form
    was conceived for discrete periods.
    """
    if not 0 < y <= 1:
        raise ValueError(f"y must be in (0, 1], got {y}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    tt = _as_time(t)
    out = np.where(tt == 0, 1.0, y * np.power(delta, tt))
    return _maybe_scalar(out, t)


def eval_proportional_hyperbolic(delta: float, t) -> float:
    """Proportional hyperbolic discount: 1/(1 + delta*t)."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    tt = _as_time(t)
    return _maybe_scalar(1.0 / (1.0 + delta * tt), t)


def eval_general_hyperbolic(h: float, r: float, t) -> float:
    """Two-parameter hyperbolic discount: (1 + h*t)^(-r/h).

    h >= 0 controls departure from constant-rate discounting, r > 0 the
    rate itself. h below ``H_EPSILON`` falls back to the analytic limit
    e^(-r*t); with r = h the proportional hyperbolic is recovered.
    """
    if h < 0:
        raise ValueError(f"h must be non-negative, got {h}")
    if r <= 0:
        raise ValueError(f"r must be positive, got {r}")
    tt = _as_time(t)
    if h < H_EPSILON:
        out = np.exp(-r * tt)
    else:
        out = np.exp(-(r / h) * np.log1p(h * tt))
    return _maybe_scalar(out, t)


def eval_subjective_general_hyperbolic(h: float, r: float, c: float, t) -> float:
    """General hyperbolic evaluated on compressed time: (1 + h*t^c)^(-r/h)."""
    if c <= 0:
        raise ValueError(f"c must be positive, got {c}")
    tt = _as_time(t)
    return _maybe_scalar(eval_general_hyperbolic(h, r, np.power(tt, c)), t)


def decreasing_impatience(h: float, t) -> float:
    """Departure from constant-rate discounting at delay t: h/(1 + h*t)."""
    if h < 0:
        raise ValueError(f"h must be non-negative, got {h}")
    tt = _as_time(t)
    return _maybe_scalar(h / (1.0 + h * tt), t)


@dataclass(frozen=True)
class Exponential:
    delta: float

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")

    def evaluate(self, t):
        return eval_exponential(self.delta, t)


@dataclass(frozen=True)
class QuasiHyperbolic:
    y: float
    delta: float

    def __post_init__(self):
        if not 0 < self.y <= 1:
            raise ValueError(f"y must be in (0, 1], got {self.y}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")

    def evaluate(self, t):
        return eval_quasi_hyperbolic(self.y, self.delta, t)


@dataclass(frozen=True)
class ProportionalHyperbolic:
    delta: float

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")

    def evaluate(self, t):
        return eval_proportional_hyperbolic(self.delta, t)


@dataclass(frozen=True)
class GeneralHyperbolic:
    h: float
    r: float

    def __post_init__(self):
        if self.h < 0:
            raise ValueError(f"h must be non-negative, got {self.h}")
        if self.r <= 0:
            raise ValueError(f"r must be positive, got {self.r}")

    def evaluate(self, t):
        return eval_general_hyperbolic(self.h, self.r, t)


@dataclass(frozen=True)
class SubjectiveGeneralHyperbolic:
    h: float
    r: float
    c: float

    def __post_init__(self):
        if self.h < 0:
            raise ValueError(f"h must be non-negative, got {self.h}")
        if self.r <= 0:
            raise ValueError(f"r must be positive, got {self.r}")
        if self.c <= 0:
            raise ValueError(f"c must be positive, got {self.c}")

    def evaluate(self, t):
        return eval_subjective_general_hyperbolic(self.h, self.r, self.c, t)


DiscountParams = (
    Exponential
    | QuasiHyperbolic
    | ProportionalHyperbolic
    | GeneralHyperbolic
    | SubjectiveGeneralHyperbolic
)


@dataclass(frozen=True)
class Linear:
    """Response magnitude c + a*t. The intercept is free in sign."""

    c: float
    a: float

    def evaluate(self, t):
        tt = _as_time(t)
        return _maybe_scalar(self.c + self.a * tt, t)


@dataclass(frozen=True)
class Power:
    """Response magnitude c + a*t^beta."""

    c: float
    a: float
    beta: float

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")

    def evaluate(self, t):
        tt = _as_time(t)
        return _maybe_scalar(self.c + self.a * np.power(tt, self.beta), t)


PsychParams = Linear | Power


def eval_psych(params: PsychParams, t) -> float:
    """Evaluate a psychophysical mapping at delay t (months)."""
    return params.evaluate(t)


def discount_value(params: DiscountParams, t) -> float:
    """Evaluate any discount parameterization at delay t (months)."""
    return params.evaluate(t)
