"""Synthetic participants and parameter-recovery harnesses.

Agents carry a true discount function, an internal subjective-time
exponent, a psychophysical mapping for the line task, and a choice policy.
The deterministic policy picks "later" exactly when the discounted later
reward beats the immediate one; the logistic policy adds response noise
plus two human-like nuisance processes, perseveration (repeating the
previous choice) and a switching dead-band (hysteresis), without which
simulated staircases finish far faster than people do.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace

import numpy as np

from . import models
from .fitting import DataSeries
from .magnitude import MagnitudeConfig, MagnitudeSession
from .staircase import LATER, NOW, ChoiceSession, StaircaseConfig

__all__ = [
    "Deterministic",
    "Logistic",
    "AgentSpec",
    "RecoveryRow",
    "RecoveryReport",
    "simulate_choice_session",
    "simulate_magnitude_session",
    "run_recovery",
    "default_cohort",
    "subjective_time_cohort",
]


@dataclass(frozen=True)
class Deterministic:
    """Noise-free threshold policy."""

    def to_dict(self):
        return {"kind": "deterministic"}


@dataclass(frozen=True)
class Logistic:
    """Logistic value-difference policy with optional stickiness.

    temperature scales the value difference (currency units); perseveration
    is the probability of repeating the previous choice outright; hysteresis
    shifts the switching threshold away from the previous choice by the
    given fraction of the immediate reward.
    """

    temperature: float
    perseveration: float = 0.0
    hysteresis: float = 0.0

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if not 0 <= self.perseveration < 1:
            raise ValueError("perseveration must be in [0, 1)")
        if self.hysteresis < 0:
            raise ValueError("hysteresis must be non-negative")

    def to_dict(self):
        return {
            "kind": "logistic",
            "temperature": self.temperature,
            "perseveration": self.perseveration,
            "hysteresis": self.hysteresis,
        }


def _noise_from_dict(d):
    if d["kind"] == "deterministic":
        return Deterministic()
    return Logistic(
        temperature=d["temperature"],
        perseveration=d.get("perseveration", 0.0),
        hysteresis=d.get("hysteresis", 0.0),
    )


@dataclass(frozen=True)
class AgentSpec:
    discount: models.DiscountParams
    choice_noise: Deterministic | Logistic
    magnitude: models.PsychParams
    magnitude_sigma_px: float = 0.0
    time_map_c: float = 1.0
    seed: int = 0
    label: str = ""

    def __post_init__(self):
        if self.time_map_c <= 0:
            raise ValueError("time_map_c must be positive")
        if self.magnitude_sigma_px < 0:
            raise ValueError("magnitude_sigma_px must be non-negative")

    def to_dict(self):
        return {
            "label": self.label,
            "discount": {"family": type(self.discount).__name__, **vars(self.discount)},
            "choice_noise": self.choice_noise.to_dict(),
            "magnitude": {"family": type(self.magnitude).__name__, **vars(self.magnitude)},
            "magnitude_sigma_px": self.magnitude_sigma_px,
            "time_map_c": self.time_map_c,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        disc = dict(d["discount"])
        disc_cls = getattr(models, disc.pop("family"))
        mag = dict(d["magnitude"])
        mag_cls = getattr(models, mag.pop("family"))
        return cls(
            discount=disc_cls(**disc),
            choice_noise=_noise_from_dict(d["choice_noise"]),
            magnitude=mag_cls(**mag),
            magnitude_sigma_px=d.get("magnitude_sigma_px", 0.0),
            time_map_c=d.get("time_map_c", 1.0),
            seed=d.get("seed", 0),
            label=d.get("label", ""),
        )


def simulate_choice_session(
    agent: AgentSpec,
    config: StaircaseConfig | None = None,
    seed: int | None = None,
) -> ChoiceSession:
    """Run an agent through a full staircase session.

    The agent values the delayed reward as amount * m(t^c) with m its
    discount function and c its subjective-time exponent, and compares
    that against the immediate reward.
    """
    config = config or StaircaseConfig()
    session_seed = agent.seed if seed is None else seed
    session = ChoiceSession(session_seed, config)
    rng = random.Random((session_seed * 1_000_003 + 17) & 0x7FFFFFFF)
    last_choice = {iv: None for iv in config.intervals}
    while session.status == "running":
        trial = session.next_trial()
        t_subj = trial.interval ** agent.time_map_c
        value = trial.later_amount * models.discount_value(agent.discount, t_subj)
        noise = agent.choice_noise
        prev = last_choice[trial.interval]
        if isinstance(noise, Deterministic):
            choice = LATER if value > config.now_amount else NOW
        else:
            if prev is not None and rng.random() < noise.perseveration:
                choice = prev
            else:
                threshold = config.now_amount
                if prev is not None and noise.hysteresis > 0:
                    shift = config.now_amount * noise.hysteresis
                    threshold += shift if prev == NOW else -shift
                arg = (value - threshold) / noise.temperature
                p_later = 1.0 / (1.0 + math.exp(-max(min(arg, 500.0), -500.0)))
                choice = LATER if rng.random() < p_later else NOW
        session.record_choice(trial, choice)
        last_choice[trial.interval] = choice
    return session


def simulate_magnitude_session(
    agent: AgentSpec,
    config: MagnitudeConfig | None = None,
    seed: int | None = None,
    timeout_rate: float = 0.0,
) -> MagnitudeSession:
    """Run an agent through the line-length task.

    Responses are the agent's psychophysical mapping plus Gaussian pixel
    noise, rounded and clamped to the line; timeouts are injected at the
    given seeded rate and stored as missing.
    """
    if not 0 <= timeout_rate <= 1:
        raise ValueError("timeout_rate must be in [0, 1]")
    config = config or MagnitudeConfig()
    session_seed = agent.seed if seed is None else seed
    session = MagnitudeSession(session_seed, config)
    rng = random.Random((session_seed * 998_244_353 + 5) & 0x7FFFFFFF)
    while not session.complete:
        trial = session.next_trial()
        if rng.random() < timeout_rate:
            session.record(trial, None, latency=config.response_window_s)
            continue
        raw = models.eval_psych(agent.magnitude, trial.interval)
        if agent.magnitude_sigma_px > 0:
            raw += rng.gauss(0.0, agent.magnitude_sigma_px)
        px = int(min(max(round(raw), 0), config.line_px_max))
        session.record(trial, px, latency=rng.uniform(0.8, 6.0))
    return session


# --- recovery harness ------------------------------------------------------


@dataclass(frozen=True)
class RecoveryRow:
    label: str
    true_params: dict
    magnitude_class: str
    discount_class: str
    gh_beats_exponential: bool
    beta_true: float
    beta_hat: float | None
    h_pre: float | None
    h_post: float | None
    r_pre: float | None
    r_post: float | None
    total_choice_trials: int
    dv_series: DataSeries
    magnitude_series: DataSeries


@dataclass(frozen=True)
class RecoveryReport:
    rows: tuple
    summary: dict


def run_recovery(cohort, timeout_rate: float = 0.0, fit_seed: int = 0) -> RecoveryReport:
    """Simulate both tasks per agent and run the per-subject analyses.

    Returns one row per agent with true versus recovered quantities plus
    cohort-level error summaries. Deterministic for fixed agent seeds.
    """
    from .analysis import classify_discounting, classify_time_mapping, gh_beats_exponential, remap_and_refit

    cohort = list(cohort)
    if not cohort:
        raise ValueError("need at least one agent")
    rows = []
    for agent in cohort:
        choice = simulate_choice_session(agent)
        mag = simulate_magnitude_session(agent, timeout_rate=timeout_rate)
        dv = choice.dv_series()
        mseries = mag.series()

        mag_label, mag_fits = classify_time_mapping(mseries, seed=fit_seed)
        beta_hat = mag_fits["power"].params["beta"] if mag_label == "power" else None
        disc_label, disc_fits = classify_discounting(dv, seed=fit_seed)
        gh_flag = gh_beats_exponential(disc_fits)

        h_pre = h_post = r_pre = r_post = None
        if gh_flag:
            c_hat = beta_hat if beta_hat is not None else 1.0
            pre, post = remap_and_refit(dv, disc_fits["general_hyperbolic"], c_hat, seed=fit_seed)
            h_pre, r_pre = pre.params["h"], pre.params["r"]
            h_post, r_post = post.params["h"], post.params["r"]

        beta_true = agent.magnitude.beta if isinstance(agent.magnitude, models.Power) else 1.0
        rows.append(
            RecoveryRow(
                label=agent.label,
                true_params=agent.to_dict(),
                magnitude_class=mag_label,
                discount_class=disc_label,
                gh_beats_exponential=gh_flag,
                beta_true=beta_true,
                beta_hat=beta_hat,
                h_pre=h_pre,
                h_post=h_post,
                r_pre=r_pre,
                r_post=r_post,
                total_choice_trials=choice.total_trials,
                dv_series=dv,
                magnitude_series=mseries,
            )
        )

    beta_errors = [
        abs(r.beta_hat - r.beta_true) for r in rows if r.beta_hat is not None
    ]
    summary = {
        "n_agents": len(rows),
        "n_power_classified": sum(r.magnitude_class == "power" for r in rows),
        "n_linear_classified": sum(r.magnitude_class == "linear" for r in rows),
        "n_exponential": sum(r.discount_class == "exponential" for r in rows),
        "n_hyperbolic": sum(
            r.discount_class in ("proportional_hyperbolic", "general_hyperbolic")
            for r in rows
        ),
        "n_gh_beats_exponential": sum(r.gh_beats_exponential for r in rows),
        "n_h_dropped": sum(
            1
            for r in rows
            if r.h_pre is not None and r.h_post is not None and r.h_post < r.h_pre
        ),
        "mean_total_choice_trials": float(
            np.mean([r.total_choice_trials for r in rows])
        ),
        "mean_abs_beta_error": float(np.mean(beta_errors)) if beta_errors else None,
    }
    return RecoveryReport(rows=tuple(rows), summary=summary)


# --- cohort generators ------------------------------------------------------


def default_cohort(seed: int = 0, n: int = 24) -> list:
    """Mixed cohort mirroring the reported group composition.

    Two-thirds of agents map time with a compressive power function and
    one-third linearly; 5 of every 8 discount hyperbolically and 3 of 8
    exponentially. Choice noise is calibrated so sessions take roughly as
    many trials as human participants did.
    """
    rng = random.Random(seed)
    agents = []
    for i in range(n):
        hyperbolic = i % 8 < 5
        power_mapped = i % 3 != 2
        if hyperbolic:
            discount = models.ProportionalHyperbolic(delta=rng.uniform(0.065, 0.14))
        else:
            discount = models.Exponential(delta=rng.uniform(0.03, 0.06))
        intercept = rng.uniform(0.0, 40.0)
        top = rng.uniform(400.0, 600.0)
        if power_mapped:
            beta = rng.uniform(0.4, 0.9)
            amp = (top - intercept) / 36.0**beta
            mapping = models.Power(c=intercept, a=amp, beta=beta)
        else:
            mapping = models.Linear(c=intercept, a=(top - intercept) / 36.0)
        noise = Logistic(
            temperature=2.0,
            perseveration=rng.uniform(0.28, 0.50),
            hysteresis=0.18,
        )
        agents.append(
            AgentSpec(
                discount=discount,
                choice_noise=noise,
                magnitude=mapping,
                magnitude_sigma_px=15.0,
                time_map_c=1.0,
                seed=rng.randrange(1 << 31),
                label=f"agent-{i:03d}",
            )
        )
    return agents


def subjective_time_cohort(seed: int = 0, n: int = 24, c: float = 0.7) -> list:
    """Agents that discount exponentially on compressed subjective time t^c.

    Their line-task mapping uses the same exponent, so the fitted power
    exponent recovers c and the time-scale remapping should flatten their
    apparent hyperbolicity.
    """
    rng = random.Random(seed)
    agents = []
    for i in range(n):
        delta = rng.uniform(0.08, 0.16)
        intercept = rng.uniform(0.0, 30.0)
        top = rng.uniform(400.0, 600.0)
        amp = (top - intercept) / 36.0**c
        agents.append(
            AgentSpec(
                discount=models.Exponential(delta=delta),
                choice_noise=Deterministic(),
                magnitude=models.Power(c=intercept, a=amp, beta=c),
                magnitude_sigma_px=12.0,
                time_map_c=c,
                seed=rng.randrange(1 << 31),
                label=f"subjective-{i:03d}",
            )
        )
    return agents


def with_seed(agent: AgentSpec, seed: int) -> AgentSpec:
    return replace(agent, seed=seed)
