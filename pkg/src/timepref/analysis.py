"""End-to-end analysis pipeline for cohorts of completed sessions.

Per subject: screen for degenerate choice behavior, classify the temporal
magnitude mapping (linear vs power) and the discounting pattern
(exponential vs the two hyperbolic forms), then refit the discount curve
on the subject's own compressed time scale t^c. Cohort level: two-stage
and aggregated fits, classification counts, decreasing-impatience curves
on both time scales, and a directional paired Bayes factor comparing h
before and after the time-scale adjustment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from .fitting import (
    DataSeries,
    DegenerateDataError,
    FitConfig,
    FitResult,
    aggregate_series,
    compare_models,
    fit_model,
    two_stage,
)
from .models import decreasing_impatience

__all__ = [
    "ScreeningConfig",
    "SubjectData",
    "SubjectProfile",
    "CohortReport",
    "BayesFactorResult",
    "screen_subject",
    "classify_time_mapping",
    "classify_discounting",
    "gh_beats_exponential",
    "remap_and_refit",
    "paired_bayes_factor",
    "analyze_subject",
    "build_cohort_report",
]

DISCOUNT_COMPLEXITY = ("exponential", "proportional_hyperbolic", "general_hyperbolic")

# Default scale of the zero-centered Cauchy prior on the standardized
# paired effect; the conventional "medium" prior for paired designs.
BF_PRIOR_SCALE = math.sqrt(2.0) / 2.0


@dataclass(frozen=True)
class ScreeningConfig:
    invariance_range: float = 0.15
    invariance_cv: float = 0.05
    outlier_z: float = 3.0


@dataclass(frozen=True)
class SubjectData:
    subject_id: str
    dv_series: DataSeries
    magnitude_series: DataSeries
    total_choice_trials: int | None = None


@dataclass
class SubjectProfile:
    subject_id: str
    dv_series: DataSeries
    magnitude_series: DataSeries
    magnitude_class: str = ""
    magnitude_fits: dict = field(default_factory=dict)
    discount_class: str = ""
    discount_fits: dict = field(default_factory=dict)
    gh_better_than_exponential: bool = False
    c_exponent: float = 1.0
    pre_remap: FitResult | None = None
    post_remap: FitResult | None = None
    post_exponential: FitResult | None = None
    flags: tuple = ()
    total_choice_trials: int | None = None

    @property
    def excluded(self) -> bool:
        return bool(self.flags)


def screen_subject(
    dv_series: DataSeries,
    fits: dict,
    cohort_params: dict,
    config: ScreeningConfig | None = None,
) -> tuple:
    """Exclusion flags for one subject.

    "invariant": the discounted values barely move (range below the
    configured threshold and coefficient of variation below its threshold).
    "outlier": any screened discount parameter sits more than the z
    threshold away from the cohort distribution, which is supplied as
    {param_key: (mean, sd)} with keys like "exponential.delta".
    """
    config = config or ScreeningConfig()
    flags = []
    dv = np.asarray(dv_series.y)
    dv_range = float(dv.max() - dv.min())
    mean = float(dv.mean())
    cv = float(dv.std(ddof=1) / mean) if mean != 0 and len(dv) > 1 else 0.0
    if dv_range < config.invariance_range and cv < config.invariance_cv:
        flags.append("invariant")
    for key, (mu, sd) in cohort_params.items():
        family, pname = key.split(".")
        if family not in fits or sd in (None, 0) or not math.isfinite(sd):
            continue
        z = abs(fits[family].params[pname] - mu) / sd
        if z > config.outlier_z:
            flags.append("outlier")
            break
    return tuple(flags)


def classify_time_mapping(series: DataSeries, seed: int = 0) -> tuple:
    """Label a magnitude series "power" or "linear" with both fits.

    The power model must undercut the linear BIC by at least 2 units;
    otherwise the simpler linear form is kept.
    """
    config = FitConfig(seed=seed)
    fits = {
        "linear": fit_model("linear", series, config),
        "power": fit_model("power", series, config),
    }
    label = "power" if fits["power"].bic <= fits["linear"].bic - 2.0 else "linear"
    return label, fits


def classify_discounting(series: DataSeries, seed: int = 0) -> tuple:
    """Label a discounted-value series by its best discount family.

    A hyperbolic label requires undercutting the exponential BIC by at
    least 2 units; between the two hyperbolic forms the lower BIC wins,
    with ties within 2 units resolved to the simpler proportional form.
    """
    config = FitConfig(seed=seed)
    fits = {
        "exponential": fit_model("exponential", series, config),
        "proportional_hyperbolic": fit_model("proportional_hyperbolic", series, config),
        "general_hyperbolic": fit_model("general_hyperbolic", series, config),
    }
    hyp = compare_models(
        [fits["proportional_hyperbolic"], fits["general_hyperbolic"]],
        complexity_order=DISCOUNT_COMPLEXITY,
    ).best
    label = hyp.family if hyp.bic <= fits["exponential"].bic - 2.0 else "exponential"
    return label, fits


def gh_beats_exponential(fits: dict) -> bool:
    """Pairwise gate used for time-scale remapping eligibility."""
    return fits["general_hyperbolic"].bic <= fits["exponential"].bic - 2.0


def remap_and_refit(
    series: DataSeries,
    pre_fit: FitResult,
    c: float,
    seed: int = 0,
) -> tuple:
    """Refit the general hyperbolic on compressed time t^c, c held fixed.

    Returns (pre, post) fit results; with c = 1 the two parameterizations
    coincide.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    config = FitConfig(seed=seed)
    post = fit_model("subjective_general_hyperbolic", series, config, time_exponent=c)
    return pre_fit, post


@dataclass(frozen=True)
class BayesFactorResult:
    bf_first_lower: float
    bf_first_higher: float
    t_stat: float
    n: int
    prior_scale: float

    def in_direction(self, direction: str) -> float:
        if direction == "first_lower":
            return self.bf_first_lower
        if direction == "first_higher":
            return self.bf_first_higher
        raise ValueError(f"unknown direction {direction!r}")


def _directional_marginals(t_stat, n, prior_scale, epsrel=1e-8):
    nu = n - 1
    root_n = math.sqrt(n)

    def integrand(delta):
        return stats.nct.pdf(t_stat, nu, delta * root_n) * 2.0 * stats.cauchy.pdf(
            delta, scale=prior_scale
        )

    m_neg, _ = integrate.quad(integrand, -np.inf, 0.0, epsrel=epsrel, limit=300)
    m_pos, _ = integrate.quad(integrand, 0.0, np.inf, epsrel=epsrel, limit=300)
    return m_neg, m_pos


def paired_bayes_factor(
    first,
    second,
    prior_scale: float = BF_PRIOR_SCALE,
) -> BayesFactorResult:
    """Directional paired Bayes factor for two matched samples.

    Tests "mean(first) < mean(second)" against its complement using the
    paired t statistic under mirrored one-sided heavy-tailed priors on the
    standardized effect; the two reported factors are reciprocal. Raises
    DegenerateDataError for n < 2 or zero-variance differences.
    """
    first = np.asarray(first, dtype=float)
    second = np.asarray(second, dtype=float)
    if first.shape != second.shape:
        raise ValueError("paired samples must have equal length")
    n = len(first)
    if n < 2:
        raise DegenerateDataError("paired test needs at least 2 pairs")
    d = first - second
    sd = d.std(ddof=1)
    if sd == 0:
        raise DegenerateDataError("zero-variance differences")
    t_stat = float(d.mean() / (sd / math.sqrt(n)))
    m_neg, m_pos = _directional_marginals(t_stat, n, prior_scale)
    if m_neg <= 0 or m_pos <= 0:
        raise DegenerateDataError("marginal likelihood underflow")
    return BayesFactorResult(
        bf_first_lower=m_neg / m_pos,
        bf_first_higher=m_pos / m_neg,
        t_stat=t_stat,
        n=n,
        prior_scale=prior_scale,
    )


# --- pipeline ---------------------------------------------------------------


def analyze_subject(data: SubjectData, seed: int = 0) -> SubjectProfile:
    """Classify one subject and refit on their own subjective time scale."""
    profile = SubjectProfile(
        subject_id=data.subject_id,
        dv_series=data.dv_series,
        magnitude_series=data.magnitude_series,
        total_choice_trials=data.total_choice_trials,
    )
    profile.magnitude_class, profile.magnitude_fits = classify_time_mapping(
        data.magnitude_series, seed=seed
    )
    profile.discount_class, profile.discount_fits = classify_discounting(
        data.dv_series, seed=seed
    )
    profile.gh_better_than_exponential = gh_beats_exponential(profile.discount_fits)
    if profile.magnitude_class == "power":
        profile.c_exponent = profile.magnitude_fits["power"].params["beta"]
    else:
        profile.c_exponent = 1.0
    if profile.gh_better_than_exponential:
        profile.pre_remap, profile.post_remap = remap_and_refit(
            data.dv_series,
            profile.discount_fits["general_hyperbolic"],
            profile.c_exponent,
            seed=seed,
        )
        # exponential refit on the same compressed scale, for the
        # "still hyperbolic after adjustment" count
        remapped = DataSeries(
            t=tuple(tv**profile.c_exponent for tv in data.dv_series.t),
            y=data.dv_series.y,
        )
        profile.post_exponential = fit_model("exponential", remapped, FitConfig(seed=seed))
    return profile


def _screen_profiles(profiles, screening):
    # cohort parameter distributions for the outlier rule
    keys = [
        "exponential.delta",
        "proportional_hyperbolic.delta",
        "general_hyperbolic.h",
        "general_hyperbolic.r",
    ]
    cohort_params = {}
    if len(profiles) >= 3:
        for key in keys:
            family, pname = key.split(".")
            vals = np.array([p.discount_fits[family].params[pname] for p in profiles])
            cohort_params[key] = (float(vals.mean()), float(vals.std(ddof=1)))
    for p in profiles:
        p.flags = screen_subject(p.dv_series, p.discount_fits, cohort_params, screening)


@dataclass(frozen=True)
class CohortReport:
    n_total: int
    n_excluded: int
    counts: dict
    two_stage: dict
    aggregated: dict
    remap: dict
    bayes: dict
    di_curves: dict
    subjects: tuple

    def to_dict(self):
        return {
            "n_total": self.n_total,
            "n_excluded": self.n_excluded,
            "counts": self.counts,
            "two_stage": self.two_stage,
            "aggregated": self.aggregated,
            "remap": self.remap,
            "bayes": self.bayes,
            "di_curves": self.di_curves,
            "subjects": [s for s in self.subjects],
        }


def _fit_summary(fit: FitResult) -> dict:
    return {
        "family": fit.family,
        "params": fit.params,
        "se": fit.se,
        "rss": fit.rss,
        "bic": fit.bic,
        "r2": fit.r2,
        "n": fit.n,
        "fixed": fit.fixed,
    }


def _two_stage_block(profiles):
    out = {}
    specs = [
        ("linear", lambda p: p.magnitude_fits["linear"]),
        ("power", lambda p: p.magnitude_fits["power"]),
        ("exponential", lambda p: p.discount_fits["exponential"]),
        ("proportional_hyperbolic", lambda p: p.discount_fits["proportional_hyperbolic"]),
        ("general_hyperbolic", lambda p: p.discount_fits["general_hyperbolic"]),
    ]
    for name, pick in specs:
        fits = [pick(p) for p in profiles]
        summary = two_stage(fits)
        r2s = np.array([f.r2 for f in fits])
        out[name] = {
            "means": summary.means,
            "sems": summary.sems,
            "n_used": summary.n_used,
            "mean_r2": float(r2s.mean()),
            "sem_r2": float(r2s.std(ddof=1) / math.sqrt(len(r2s))) if len(r2s) > 1 else None,
        }
    return out


def build_cohort_report(
    profiles,
    seed: int = 0,
    screening: ScreeningConfig | None = None,
    di_grid=None,
) -> CohortReport:
    """Assemble the cohort-level report from per-subject profiles.

    Excluded subjects are dropped before two-stage summaries, aggregated
    fits and the Bayes-factor comparison. The remap block is restricted to
    subjects whose choices the general hyperbolic explained better than
    the exponential by the BIC rule.
    """
    profiles = list(profiles)
    if not profiles:
        raise ValueError("need at least one profile")
    _screen_profiles(profiles, screening or ScreeningConfig())
    included = [p for p in profiles if not p.excluded]
    if not included:
        raise ValueError("every subject was excluded")

    counts = {
        "n": len(included),
        "power_mapped": sum(p.magnitude_class == "power" for p in included),
        "linear_mapped": sum(p.magnitude_class == "linear" for p in included),
        "exponential": sum(p.discount_class == "exponential" for p in included),
        "proportional_hyperbolic": sum(
            p.discount_class == "proportional_hyperbolic" for p in included
        ),
        "general_hyperbolic": sum(p.discount_class == "general_hyperbolic" for p in included),
        "hyperbolic": sum(
            p.discount_class in ("proportional_hyperbolic", "general_hyperbolic")
            for p in included
        ),
        "gh_better_than_exponential": sum(p.gh_better_than_exponential for p in included),
    }

    config = FitConfig(seed=seed)
    agg_mag = aggregate_series([p.magnitude_series for p in included])
    agg_dv = aggregate_series([p.dv_series for p in included])
    aggregated = {
        "magnitude_series": {"t": list(agg_mag.t), "y": list(agg_mag.y), "sem": list(agg_mag.sem)},
        "dv_series": {"t": list(agg_dv.t), "y": list(agg_dv.y), "sem": list(agg_dv.sem)},
        "magnitude": {
            "linear": _fit_summary(fit_model("linear", agg_mag, config)),
            "power": _fit_summary(fit_model("power", agg_mag, config)),
        },
        "discounting": {
            "exponential": _fit_summary(fit_model("exponential", agg_dv, config)),
            "proportional_hyperbolic": _fit_summary(
                fit_model("proportional_hyperbolic", agg_dv, config)
            ),
            "general_hyperbolic": _fit_summary(fit_model("general_hyperbolic", agg_dv, config)),
        },
    }

    # remap block: the pairwise-eligible subset, on its own time scale
    remap_subjects = [p for p in included if p.gh_better_than_exponential]
    remap: dict = {"n": len(remap_subjects)}
    bayes: dict = {}
    di_grid = list(di_grid) if di_grid is not None else [float(v) for v in range(0, 37, 3)]
    di_curves: dict = {"t": di_grid}
    if remap_subjects:
        agg_sub_dv = aggregate_series([p.dv_series for p in remap_subjects])
        c_agg = math.fsum(sorted(p.c_exponent for p in remap_subjects)) / len(remap_subjects)
        pre_agg = fit_model("general_hyperbolic", agg_sub_dv, config)
        post_agg = fit_model(
            "subjective_general_hyperbolic", agg_sub_dv, config, time_exponent=c_agg
        )
        remap.update(
            {
                "c_aggregate": c_agg,
                "dv_series": {
                    "t": list(agg_sub_dv.t),
                    "y": list(agg_sub_dv.y),
                    "sem": list(agg_sub_dv.sem),
                },
                "aggregated_pre": _fit_summary(pre_agg),
                "aggregated_post": _fit_summary(post_agg),
                "subjects_h_lower_after": sum(
                    p.post_remap.params["h"] < p.pre_remap.params["h"]
                    for p in remap_subjects
                ),
                "still_hyperbolic_after": sum(
                    p.post_remap.bic <= p.post_exponential.bic - 2.0
                    for p in remap_subjects
                ),
                "mean_h_pre": math.fsum(
                    sorted(p.pre_remap.params["h"] for p in remap_subjects)
                ) / len(remap_subjects),
                "mean_h_post": math.fsum(
                    sorted(p.post_remap.params["h"] for p in remap_subjects)
                ) / len(remap_subjects),
            }
        )
        di_curves["objective"] = [
            decreasing_impatience(pre_agg.params["h"], t) for t in di_grid
        ]
        di_curves["subjective"] = [
            decreasing_impatience(post_agg.params["h"], t) for t in di_grid
        ]
        if len(remap_subjects) >= 2:
            h_obj = [p.pre_remap.params["h"] for p in remap_subjects]
            h_subj = [p.post_remap.params["h"] for p in remap_subjects]
            try:
                bf = paired_bayes_factor(h_obj, h_subj)
                bayes = {
                    "comparison": "h_objective vs h_subjective",
                    "bf_objective_lower": bf.bf_first_lower,
                    "bf_objective_higher": bf.bf_first_higher,
                    "t_stat": bf.t_stat,
                    "n": bf.n,
                    "prior_scale": bf.prior_scale,
                }
            except DegenerateDataError as exc:
                bayes = {"error": str(exc)}
        else:
            bayes = {"error": "needs at least 2 remapped subjects"}

    subject_rows = tuple(
        {
            "subject_id": p.subject_id,
            "flags": list(p.flags),
            "magnitude_class": p.magnitude_class,
            "discount_class": p.discount_class,
            "gh_better_than_exponential": p.gh_better_than_exponential,
            "c_exponent": p.c_exponent,
            "h_pre": p.pre_remap.params["h"] if p.pre_remap else None,
            "h_post": p.post_remap.params["h"] if p.post_remap else None,
            "r_pre": p.pre_remap.params["r"] if p.pre_remap else None,
            "r_post": p.post_remap.params["r"] if p.post_remap else None,
            "total_choice_trials": p.total_choice_trials,
        }
        for p in profiles
    )

    return CohortReport(
        n_total=len(profiles),
        n_excluded=len(profiles) - len(included),
        counts=counts,
        two_stage=_two_stage_block(included),
        aggregated=aggregated,
        remap=remap,
        bayes=bayes,
        di_curves=di_curves,
        subjects=subject_rows,
    )
