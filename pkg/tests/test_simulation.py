"""Agent simulation and recovery-harness tests."""

import math

import pytest

from timepref import models
from timepref.simulation import (
    AgentSpec,
    Deterministic,
    Logistic,
    default_cohort,
    run_recovery,
    simulate_choice_session,
    simulate_magnitude_session,
    subjective_time_cohort,
)

STEP_BOUND = math.log(1.1)


def agent(discount, noise=None, c=1.0, sigma=0.0, seed=3, mapping=None):
    return AgentSpec(
        discount=discount,
        choice_noise=noise or Deterministic(),
        magnitude=mapping or models.Power(c=0.0, a=60.0, beta=0.67),
        magnitude_sigma_px=sigma,
        time_map_c=c,
        seed=seed,
    )


class TestChoiceSimulation:
    def test_exponential_agent_ep_near_analytic(self):
        a = agent(models.Exponential(delta=0.05))
        session = simulate_choice_session(a)
        point = session.equivalence_point(12.0)
        analytic = 100.0 / models.eval_exponential(0.05, 12.0)  # 182.21
        assert analytic == pytest.approx(182.2118800390509, abs=1e-9)
        assert abs(math.log(point.ep / analytic)) <= STEP_BOUND

    def test_general_hyperbolic_agent_ep_near_analytic(self):
        a = agent(models.GeneralHyperbolic(h=0.133, r=0.094))
        session = simulate_choice_session(a)
        point = session.equivalence_point(12.0)
        analytic = 100.0 / models.eval_general_hyperbolic(0.133, 0.094, 12.0)  # 196.25
        assert analytic == pytest.approx(196.25324536945823, abs=1e-9)
        assert abs(math.log(point.ep / analytic)) <= STEP_BOUND

    def test_every_interval_within_one_step(self):
        for discount in (
            models.Exponential(delta=0.045),
            models.ProportionalHyperbolic(delta=0.076),
            models.GeneralHyperbolic(h=0.133, r=0.094),
        ):
            a = agent(discount, seed=11)
            session = simulate_choice_session(a)
            for iv in session.config.intervals:
                analytic = 100.0 / models.discount_value(discount, iv)
                point = session.equivalence_point(iv)
                assert abs(math.log(point.ep / analytic)) <= STEP_BOUND

    def test_subjective_time_enters_through_exponent(self):
        a = agent(models.Exponential(delta=0.12), c=0.7)
        session = simulate_choice_session(a)
        for iv in (3.0, 36.0):
            analytic = 100.0 / models.eval_exponential(0.12, iv**0.7)
            point = session.equivalence_point(iv)
            assert abs(math.log(point.ep / analytic)) <= STEP_BOUND

    def test_low_temperature_matches_deterministic(self):
        det = simulate_choice_session(agent(models.Exponential(delta=0.05), seed=21))
        noisy = simulate_choice_session(
            agent(models.Exponential(delta=0.05), noise=Logistic(temperature=1e-9), seed=21)
        )
        det_choices = [
            (r.trial.interval, r.choice) for iv in det.config.intervals for r in det.records(iv)
        ]
        noisy_choices = [
            (r.trial.interval, r.choice)
            for iv in noisy.config.intervals
            for r in noisy.records(iv)
        ]
        assert det_choices == noisy_choices

    def test_seed_reproducibility(self):
        a = agent(
            models.ProportionalHyperbolic(delta=0.08),
            noise=Logistic(temperature=2.0, perseveration=0.3, hysteresis=0.18),
            seed=5,
        )
        s1 = simulate_choice_session(a)
        s2 = simulate_choice_session(a)
        assert s1.dv_series() == s2.dv_series()
        assert s1.total_trials == s2.total_trials


class TestMagnitudeSimulation:
    def test_noiseless_power_agent(self):
        a = agent(models.Exponential(delta=0.05))
        session = simulate_magnitude_session(a)
        series = session.series()
        at36 = dict(zip(series.t, series.y))[36.0]
        assert at36 == 662.0  # round(60 * 36^0.67)

    def test_noiseless_linear_agent(self):
        a = agent(models.Exponential(delta=0.05), mapping=models.Linear(c=0.0, a=10.0))
        series = simulate_magnitude_session(a).series()
        assert dict(zip(series.t, series.y))[12.0] == 120.0

    def test_timeout_rate_one_all_missing(self):
        a = agent(models.Exponential(delta=0.05))
        session = simulate_magnitude_session(a, timeout_rate=1.0)
        assert all(r.line_px is None for r in session.responses)

    def test_responses_clamped_to_line(self):
        a = agent(models.Exponential(delta=0.05),
                  mapping=models.Linear(c=0.0, a=30.0), sigma=50.0, seed=13)
        session = simulate_magnitude_session(a)
        assert all(0 <= r.line_px <= 685 for r in session.responses if r.line_px is not None)


class TestRecovery:
    def test_deterministic_beta_recovery(self):
        import random

        rnd = random.Random(1)
        cohort = []
        for i in range(24):
            beta = rnd.uniform(0.5, 0.9)
            cohort.append(
                agent(
                    models.ProportionalHyperbolic(delta=0.08),
                    mapping=models.Power(c=0.0, a=400.0 / 36.0**beta, beta=beta),
                    seed=100 + i,
                )
            )
        report = run_recovery(cohort)
        for row in report.rows:
            assert row.beta_hat is not None
            assert abs(row.beta_hat - row.beta_true) <= 0.05

    def test_exponential_agents_classified_exponential(self):
        import random

        rnd = random.Random(2)
        cohort = [
            agent(models.Exponential(delta=rnd.uniform(0.04, 0.06)), seed=200 + i)
            for i in range(20)
        ]
        report = run_recovery(cohort)
        n_exp = sum(r.discount_class == "exponential" for r in report.rows)
        assert n_exp >= 18  # >= 90%

    def test_report_reproducibility(self):
        cohort = default_cohort(seed=9, n=6)
        a = run_recovery(cohort)
        b = run_recovery(cohort)
        assert a == b

    def test_error_shrinks_with_noise(self):
        # recovery consistency: estimation error decreases to ~0 as the
        # magnitude noise shrinks
        errors = {}
        for sigma in (0.0, 5.0, 20.0):
            cohort = [
                agent(
                    models.ProportionalHyperbolic(delta=0.08),
                    mapping=models.Power(c=0.0, a=600.0 / 36.0**0.65, beta=0.65),
                    sigma=sigma,
                    seed=300 + i,
                )
                for i in range(8)
            ]
            report = run_recovery(cohort)
            assert all(r.beta_hat is not None for r in report.rows)
            errors[sigma] = max(abs(r.beta_hat - r.beta_true) for r in report.rows)
        # integer-pixel rounding leaves a small quantization floor at sigma=0
        assert errors[0.0] < 0.01
        assert errors[0.0] <= errors[5.0] <= errors[20.0] + 1e-6

    def test_empty_cohort_rejected(self):
        with pytest.raises(ValueError):
            run_recovery([])


class TestCohortGenerators:
    def test_default_cohort_composition(self):
        cohort = default_cohort(seed=1, n=24)
        assert len(cohort) == 24
        n_hyper = sum(
            isinstance(a.discount, models.ProportionalHyperbolic) for a in cohort
        )
        n_power = sum(isinstance(a.magnitude, models.Power) for a in cohort)
        assert n_hyper == 15 and n_power == 16

    def test_subjective_cohort_exponent(self):
        cohort = subjective_time_cohort(seed=1, n=5, c=0.7)
        for a in cohort:
            assert a.time_map_c == 0.7
            assert isinstance(a.magnitude, models.Power)
            assert a.magnitude.beta == 0.7

    def test_agent_spec_round_trip(self):
        for a in default_cohort(seed=2, n=4) + subjective_time_cohort(seed=2, n=2):
            assert AgentSpec.from_dict(a.to_dict()) == a

    def test_no_clamping_in_default_cohort(self):
        for a in default_cohort(seed=3, n=24):
            top = models.eval_psych(a.magnitude, 36.0)
            assert top + 4 * a.magnitude_sigma_px < 685
