"""Nonlinear least-squares fitting, BIC computation and model comparison.

Each supported family exposes a prediction function, an analytic Jacobian
and a cheap heuristic start. Fits run ``n_starts`` times (heuristic plus
seeded Latin-hypercube draws) through a bounded trust-region solver and
keep the best residual sum of squares, which makes results deterministic
for a given (data, seed) pair.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.stats import qmc

from .models import H_EPSILON

__all__ = [
    "DataSeries",
    "FitConfig",
    "FitResult",
    "ModelComparison",
    "FitError",
    "NonConvergenceError",
    "DegenerateDataError",
    "MismatchedDataError",
    "EmptyCellError",
    "FAMILIES",
    "fit_model",
    "bic",
    "compare_models",
    "r_squared",
    "two_stage",
    "aggregate_series",
    "predict",
]

# Reported RSS is floored at n*(RSS_FLOOR_SCALE*rms(y))^2: below solver
# tolerance, RSS differences are round-off and would make BIC comparisons
# of nested models on noiseless data depend on it.
RSS_FLOOR_SCALE = 1e-9


class FitError(Exception):
    pass


class NonConvergenceError(FitError):
    pass


class DegenerateDataError(FitError):
    pass


class MismatchedDataError(FitError):
    pass


class EmptyCellError(FitError):
    pass


@dataclass(frozen=True)
class DataSeries:
    """Ordered (t, y) observations with optional per-point SEM metadata."""

    t: tuple
    y: tuple
    sem: tuple | None = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if t.ndim != 1 or t.shape != y.shape:
            raise ValueError("t and y must be 1-d and the same length")
        if len(t) < 3:
            raise ValueError("a series needs at least 3 points")
        if np.any(t < 0):
            raise ValueError("t values must be non-negative")
        if len(np.unique(t)) != len(t):
            raise ValueError("t values must be distinct")
        if not np.all(np.isfinite(y)):
            raise ValueError("y values must be finite (handle missing upstream)")
        object.__setattr__(self, "t", tuple(float(v) for v in t))
        object.__setattr__(self, "y", tuple(float(v) for v in y))
        if self.sem is not None:
            sem = tuple(float(v) for v in self.sem)
            if len(sem) != len(t):
                raise ValueError("sem length must match t")
            object.__setattr__(self, "sem", sem)

    @property
    def n(self) -> int:
        return len(self.t)

    def arrays(self):
        return np.asarray(self.t), np.asarray(self.y)


@dataclass(frozen=True)
class FitConfig:
    seed: int = 0
    n_starts: int = 8
    max_iter: int = 500
    ftol: float = 1e-12
    xtol: float = 1e-12


@dataclass(frozen=True)
class FitResult:
    family: str
    params: dict
    se: dict
    rss: float
    loglik: float
    bic: float
    r2: float
    n: int
    k: int
    converged: bool
    starts_tried: int
    fixed: dict = field(default_factory=dict)

    def predict(self, t):
        return predict(self.family, self.params, t, **self.fixed)


@dataclass(frozen=True)
class ModelComparison:
    candidates: tuple
    selected: int
    delta_bic: float

    @property
    def best(self) -> FitResult:
        return self.candidates[self.selected]


# --- family definitions ---------------------------------------------------

PARAM_BOUNDS = {
    "delta": (1e-6, 5.0),
    "h": (0.0, 10.0),
    "r": (1e-6, 5.0),
    "beta": (0.05, 3.0),
    "a": (1e-12, 1e4),
    "c": (-500.0, 500.0),
}


def _gh_predict(h, r, t):
    if h < H_EPSILON:
        return np.exp(-r * t)
    return np.exp(-(r / h) * np.log1p(h * t))


def _gh_jacobian(h, r, t):
    phi = _gh_predict(h, r, t)
    if h < H_EPSILON:
        dh = phi * r * t * t / 2.0
        dr = -t * phi
    else:
        lg = np.log1p(h * t)
        dh = phi * (r / h) * (lg / h - t / (1.0 + h * t))
        dr = -(lg / h) * phi
    return np.column_stack([dh, dr])


def _linear_heuristic(t, y):
    a, c = np.polyfit(t, y, 1)
    return [c, a]


def _power_heuristic(t, y):
    # profile beta over a coarse grid; (c, a) solve linearly for fixed beta
    best = None
    for beta in (0.3, 0.5, 0.7, 1.0, 1.5, 2.0):
        X = np.column_stack([np.ones_like(t), np.power(t, beta)])
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        rss = float(np.sum((X @ coef - y) ** 2))
        if best is None or rss < best[0]:
            best = (rss, [coef[0], max(coef[1], 1e-6), beta])
    return best[1]


def _exp_heuristic(t, y):
    ypos = np.clip(y, 1e-10, None)
    slope = np.polyfit(t, np.log(ypos), 1)[0]
    return [min(max(-slope, 1e-5), 4.9)]


def _prop_heuristic(t, y):
    ypos = np.clip(y, 1e-10, None)
    mask = t > 0
    est = np.mean((1.0 / ypos[mask] - 1.0) / t[mask])
    return [min(max(est, 1e-5), 4.9)]


def _gh_heuristic(t, y):
    # profile h over a grid; r solves in closed form for fixed h
    ypos = np.clip(y, 1e-10, None)
    ln_y = np.log(ypos)
    best = None
    for h in (1e-6, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0):
        g = np.log1p(h * t)
        denom = float(np.sum(g * g))
        r = -h * float(np.sum(ln_y * g)) / denom if denom > 0 else 0.1
        r = min(max(r, 1e-5), 4.9)
        rss = float(np.sum((_gh_predict(h, r, t) - y) ** 2))
        if best is None or rss < best[0]:
            best = (rss, [h, r])
    return best[1]


class _Family:
    def __init__(self, name, param_names, predict, jacobian, heuristic):
        self.name = name
        self.param_names = param_names
        self.predict = predict
        self.jacobian = jacobian
        self.heuristic = heuristic
        self.bounds = tuple(PARAM_BOUNDS[p] for p in param_names)


FAMILIES = {
    "linear": _Family(
        "linear",
        ("c", "a"),
        lambda p, t: p[0] + p[1] * t,
        lambda p, t: np.column_stack([np.ones_like(t), t]),
        _linear_heuristic,
    ),
    "power": _Family(
        "power",
        ("c", "a", "beta"),
        lambda p, t: p[0] + p[1] * np.power(t, p[2]),
        lambda p, t: np.column_stack(
            [
                np.ones_like(t),
                np.power(t, p[2]),
                np.where(t > 0, p[1] * np.power(t, p[2]) * np.log(np.where(t > 0, t, 1.0)), 0.0),
            ]
        ),
        _power_heuristic,
    ),
    "exponential": _Family(
        "exponential",
        ("delta",),
        lambda p, t: np.exp(-p[0] * t),
        lambda p, t: np.column_stack([-t * np.exp(-p[0] * t)]),
        _exp_heuristic,
    ),
    "proportional_hyperbolic": _Family(
        "proportional_hyperbolic",
        ("delta",),
        lambda p, t: 1.0 / (1.0 + p[0] * t),
        lambda p, t: np.column_stack([-t / (1.0 + p[0] * t) ** 2]),
        _prop_heuristic,
    ),
    "general_hyperbolic": _Family(
        "general_hyperbolic",
        ("h", "r"),
        lambda p, t: _gh_predict(p[0], p[1], t),
        lambda p, t: _gh_jacobian(p[0], p[1], t),
        _gh_heuristic,
    ),
    # same surface as general_hyperbolic on compressed time t^c; the
    # exponent is held fixed during fitting
    "subjective_general_hyperbolic": _Family(
        "subjective_general_hyperbolic",
        ("h", "r"),
        lambda p, t: _gh_predict(p[0], p[1], t),
        lambda p, t: _gh_jacobian(p[0], p[1], t),
        _gh_heuristic,
    ),
}


def predict(family: str, params: dict, t, time_exponent: float = 1.0):
    """Evaluate a named family at t given a parameter dict."""
    fam = FAMILIES[family]
    t = np.asarray(t, dtype=float)
    if family == "subjective_general_hyperbolic":
        t = np.power(t, time_exponent)
    vec = np.array([params[p] for p in fam.param_names])
    return fam.predict(vec, t)


def _lhs_starts(fam, n, seed):
    sampler = qmc.LatinHypercube(d=len(fam.param_names), seed=seed)
    unit = sampler.random(n)
    lo = np.array([b[0] for b in fam.bounds])
    hi = np.array([b[1] for b in fam.bounds])
    return lo + unit * (hi - lo)


def fit_model(
    family: str,
    data: DataSeries,
    config: FitConfig | None = None,
    time_exponent: float = 1.0,
) -> FitResult:
    """Least-squares fit of one family to a series.

    ``time_exponent`` only applies to the subjective_general_hyperbolic
    family, whose time axis is compressed to t^c with c held fixed.

    Raises DegenerateDataError for zero-variance responses or too few
    points, NonConvergenceError when every start fails.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if config is None:
        config = FitConfig()
    fam = FAMILIES[family]
    t, y = data.arrays()
    if family == "subjective_general_hyperbolic":
        if time_exponent <= 0:
            raise ValueError("time_exponent must be positive")
        t = np.power(t, time_exponent)

    n = data.n
    n_params = len(fam.param_names)
    k = n_params + 1  # residual sigma counts as a free parameter
    if n < k + 1:
        raise DegenerateDataError(f"{family} needs at least {k + 1} points, got {n}")
    if np.ptp(y) == 0:
        raise DegenerateDataError("zero variance in responses")

    lo = np.array([b[0] for b in fam.bounds])
    hi = np.array([b[1] for b in fam.bounds])

    def residuals(p):
        return fam.predict(p, t) - y

    def jac(p):
        return fam.jacobian(p, t)

    starts = [np.clip(np.asarray(fam.heuristic(t, y), dtype=float), lo, hi)]
    if config.n_starts > 1:
        starts.extend(_lhs_starts(fam, config.n_starts - 1, config.seed))

    best = None
    n_ok = 0
    for x0 in starts:
        try:
            res = least_squares(
                residuals,
                x0,
                jac=jac,
                bounds=(lo, hi),
                method="trf",
                ftol=config.ftol,
                xtol=config.xtol,
                gtol=1e-12,
                max_nfev=config.max_iter * (n_params + 1),
            )
        except Exception:
            continue
        if not np.all(np.isfinite(res.x)):
            continue
        rss = float(np.sum(res.fun**2))
        if not math.isfinite(rss):
            continue
        n_ok += 1
        if best is None or rss < best[1]:
            best = (res, rss)
    if best is None or n_ok == 0:
        raise NonConvergenceError(f"no start converged for {family}")

    res, rss_raw = best
    params = dict(zip(fam.param_names, (float(v) for v in res.x)))

    rss_floor = n * (RSS_FLOOR_SCALE * math.sqrt(float(np.mean(y**2)))) ** 2
    rss = max(rss_raw, rss_floor)

    sigma2 = rss / n
    loglik = -0.5 * n * (math.log(2 * math.pi * sigma2) + 1.0)
    bic_value = bic(rss, n, k)
    r2 = r_squared(data, fam.predict(res.x, t))

    J = fam.jacobian(res.x, t)
    dof = max(n - n_params, 1)
    try:
        cov = np.linalg.pinv(J.T @ J) * (rss_raw / dof)
        se_vec = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        se_vec = np.full(n_params, np.nan)
    se = dict(zip(fam.param_names, (float(v) for v in se_vec)))

    fixed = {}
    if family == "subjective_general_hyperbolic":
        fixed["time_exponent"] = float(time_exponent)

    return FitResult(
        family=family,
        params=params,
        se=se,
        rss=rss,
        loglik=loglik,
        bic=bic_value,
        r2=r2,
        n=n,
        k=k,
        converged=True,
        starts_tried=len(starts),
        fixed=fixed,
    )


def bic(rss: float, n: int, k: int) -> float:
    """Gaussian maximum-likelihood BIC up to a constant: n*ln(rss/n) + k*ln(n).

    The additive constant is dropped consistently across models, so only
    differences are meaningful.
    """
    if rss < 0:
        raise ValueError("rss must be non-negative")
    if n <= k:
        raise ValueError(f"need more points than parameters (n={n}, k={k})")
    if rss == 0:
        warnings.warn("rss is exactly zero; BIC reported as -inf", RuntimeWarning)
        return -math.inf
    return n * math.log(rss / n) + k * math.log(n)


def compare_models(fits, complexity_order=None) -> ModelComparison:
    """Select the best model by BIC with a simplicity tie-break.

    The minimum-BIC candidate wins unless a simpler model (fewer
    parameters, or earlier in ``complexity_order``) sits within 2 BIC
    units of it, in which case the simpler model is preferred.
    delta_bic reports BIC(selected) - BIC(best).
    """
    fits = tuple(fits)
    if len(fits) < 2:
        raise ValueError("need at least two fits to compare")
    ns = {f.n for f in fits}
    if len(ns) > 1:
        raise MismatchedDataError(f"fits disagree on n: {sorted(ns)}")

    if complexity_order is None:
        rank = {f.family: (f.k, i) for i, f in enumerate(fits)}
    else:
        order = {name: i for i, name in enumerate(complexity_order)}
        rank = {f.family: (order.get(f.family, len(order)), f.k) for f in fits}

    best_idx = min(range(len(fits)), key=lambda i: fits[i].bic)
    best_bic = fits[best_idx].bic
    within = [i for i in range(len(fits)) if fits[i].bic <= best_bic + 2.0]
    selected = min(within, key=lambda i: rank[fits[i].family])
    return ModelComparison(
        candidates=fits,
        selected=selected,
        delta_bic=float(fits[selected].bic - best_bic),
    )


def r_squared(data: DataSeries | np.ndarray, predictions) -> float:
    """Fraction of variance explained, 1 - RSS/TSS."""
    if isinstance(data, DataSeries):
        y = np.asarray(data.y)
    else:
        y = np.asarray(data, dtype=float)
    pred = np.asarray(predictions, dtype=float)
    if y.shape != pred.shape:
        raise ValueError("predictions must match the data length")
    tss = float(np.sum((y - y.mean()) ** 2))
    if tss == 0:
        raise DegenerateDataError("zero total variance")
    rss = float(np.sum((y - pred) ** 2))
    return 1.0 - rss / tss


@dataclass(frozen=True)
class TwoStageSummary:
    family: str
    means: dict
    sems: dict
    n_used: int
    n_excluded: int


def two_stage(per_subject) -> TwoStageSummary:
    """Average per-subject fits: mean and SEM (sample SD / sqrt(n)) per parameter."""
    fits = [f for f in per_subject if f.converged]
    n_excluded = len(per_subject) - len(fits)
    if not fits:
        return TwoStageSummary("", {}, {}, 0, n_excluded)
    family = fits[0].family
    if any(f.family != family for f in fits):
        raise MismatchedDataError("two_stage requires fits of one family")
    names = list(fits[0].params)
    means, sems = {}, {}
    for p in names:
        vals = np.array([f.params[p] for f in fits])
        means[p] = float(vals.mean())
        sems[p] = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else None
    return TwoStageSummary(family, means, sems, len(fits), n_excluded)


def aggregate_series(cohort) -> DataSeries:
    """Per-point mean across subjects sharing one t-grid, with SEM attached.

    Entries are DataSeries or plain (t, y) pairs; in pairs, NaN marks a
    missing observation for that subject/point. A grid point with no
    observations at all raises EmptyCellError.
    """
    pairs = []
    for item in cohort:
        if isinstance(item, DataSeries):
            pairs.append((item.t, item.y))
        else:
            t, y = item
            pairs.append((tuple(float(v) for v in t), tuple(float(v) for v in y)))
    if not pairs:
        raise ValueError("empty cohort")
    grid = pairs[0][0]
    for t, _ in pairs[1:]:
        if t != grid:
            raise MismatchedDataError("all series must share one t-grid")
    Y = np.array([y for _, y in pairs], dtype=float)
    counts = np.sum(np.isfinite(Y), axis=0)
    if np.any(counts == 0):
        bad = [grid[i] for i in np.nonzero(counts == 0)[0]]
        raise EmptyCellError(f"no observations at t={bad}")
    # exactly-rounded sums keep the aggregate independent of subject order
    means, sems = [], []
    for j in range(Y.shape[1]):
        vals = sorted(float(v) for v in Y[:, j] if math.isfinite(v))
        n_j = len(vals)
        mean = math.fsum(vals) / n_j
        means.append(mean)
        if n_j > 1:
            var = math.fsum((v - mean) ** 2 for v in vals) / (n_j - 1)
            sems.append(math.sqrt(var / n_j))
        else:
            sems.append(0.0)
    return DataSeries(t=grid, y=tuple(means), sem=tuple(sems))
