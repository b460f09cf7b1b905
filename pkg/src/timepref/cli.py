"""Command-line entry points: simulate, fit, analyze, serve, report.

Exit codes: 0 success, 2 input/usage error, 3 estimation failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import simulation
from .analysis import SubjectData, analyze_subject, build_cohort_report
from .fitting import FAMILIES, FitConfig, NonConvergenceError, fit_model
from .report import render_text, write_csv_series, write_figures, write_report_dir
from .sessionio import (
    CHOICE,
    MAGNITUDE,
    SessionFileError,
    export_csv,
    load_directory,
    save_session,
)

EXIT_INPUT_ERROR = 2
EXIT_NO_CONVERGENCE = 3


class InputError(click.ClickException):
    exit_code = EXIT_INPUT_ERROR


@click.group()
def main():
    """Intertemporal-choice experiment toolkit."""


@main.command()
@click.option("--agents", "agents_file", type=click.Path(exists=True, dir_okay=False),
              help="JSON list of agent specs; omit to use a preset cohort.")
@click.option("--preset", type=click.Choice(["default", "subjective"]), default="default",
              show_default=True, help="Cohort preset when --agents is not given.")
@click.option("-n", "--n-agents", default=24, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--timeout-rate", default=0.0, show_default=True,
              help="Seeded magnitude-trial timeout probability.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def simulate(agents_file, preset, n_agents, seed, timeout_rate, out_dir):
    """Simulate a cohort and write session files plus CSV exports."""
    if agents_file:
        try:
            raw = json.loads(Path(agents_file).read_text(encoding="utf-8"))
            agents = [simulation.AgentSpec.from_dict(d) for d in raw]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad agents file: {exc}") from exc
    elif preset == "default":
        agents = simulation.default_cohort(seed=seed, n=n_agents)
    else:
        agents = simulation.subjective_time_cohort(seed=seed, n=n_agents)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    orders = ("magnitude_first", "choice_first")
    sessions = {"choice": [], "magnitude": []}
    for i, agent in enumerate(agents):
        label = agent.label or f"agent-{i:03d}"
        order = orders[i % 2]
        choice = simulation.simulate_choice_session(agent)
        mag = simulation.simulate_magnitude_session(agent, timeout_rate=timeout_rate)
        save_session(choice, out / f"{label}_choice.jsonl", label, task_order=order)
        save_session(mag, out / f"{label}_magnitude.jsonl", label, task_order=order)
        sessions["choice"].append((label, choice))
        sessions["magnitude"].append((label, mag))
    (out / "agents.json").write_text(
        json.dumps([a.to_dict() for a in agents], indent=2), encoding="utf-8"
    )
    export_csv(sessions["choice"], CHOICE, out / "choice_series.csv")
    export_csv(sessions["magnitude"], MAGNITUDE, out / "magnitude_series.csv")
    click.echo(f"wrote {2 * len(agents)} session files to {out}")


def _collect_subjects(in_dir):
    """Group complete sessions by subject; subjects need one of each task."""
    try:
        loaded = load_directory(in_dir)
    except SessionFileError as exc:
        raise InputError(str(exc)) from exc
    if not loaded:
        raise InputError(f"no session files in {in_dir}")
    by_subject: dict = {}
    for path, ls in loaded:
        entry = by_subject.setdefault(ls.header.subject_id, {})
        entry[ls.header.task] = ls.session
    subjects = []
    for subject_id in sorted(by_subject):
        entry = by_subject[subject_id]
        choice = entry.get(CHOICE)
        mag = entry.get(MAGNITUDE)
        if choice is None or mag is None:
            click.echo(f"warning: {subject_id} is missing a task; skipped", err=True)
            continue
        if choice.status != "complete" or mag.status != "complete":
            click.echo(f"warning: {subject_id} has an incomplete session; skipped", err=True)
            continue
        subjects.append(
            SubjectData(
                subject_id=subject_id,
                dv_series=choice.dv_series(),
                magnitude_series=mag.series(),
                total_choice_trials=choice.total_trials,
            )
        )
    if not subjects:
        raise InputError("no subject has both tasks complete")
    return subjects


@main.command()
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--model", "family", required=True, type=click.Choice(sorted(FAMILIES)))
@click.option("--task", type=click.Choice([CHOICE, MAGNITUDE]), default=None,
              help="Defaults to choice for discount families, magnitude otherwise.")
@click.option("--time-exponent", default=1.0, show_default=True,
              help="Fixed exponent for the subjective general hyperbolic family.")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_file", required=True, type=click.Path(dir_okay=False))
def fit(in_dir, family, task, time_exponent, seed, out_file):
    """Fit one model family to every subject in a session directory."""
    if task is None:
        task = MAGNITUDE if family in ("linear", "power") else CHOICE
    subjects = _collect_subjects(in_dir)
    config = FitConfig(seed=seed)
    results = {}
    failures = 0
    for subject in subjects:
        series = subject.dv_series if task == CHOICE else subject.magnitude_series
        try:
            fr = fit_model(family, series, config, time_exponent=time_exponent)
        except NonConvergenceError:
            failures += 1
            results[subject.subject_id] = {"converged": False}
            continue
        results[subject.subject_id] = {
            "converged": True,
            "params": fr.params,
            "se": fr.se,
            "rss": fr.rss,
            "loglik": fr.loglik,
            "bic": fr.bic,
            "r2": fr.r2,
            "n": fr.n,
            "k": fr.k,
        }
    Path(out_file).write_text(
        json.dumps({"family": family, "task": task, "fits": results}, indent=2, sort_keys=True),
        encoding="utf-8",
    )
    click.echo(f"fit {family} to {len(results)} subjects ({failures} failed)")
    if failures == len(results):
        sys.exit(EXIT_NO_CONVERGENCE)


@main.command()
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", default=0, show_default=True)
def analyze(in_dir, out_dir, seed):
    """Run the full pipeline and write the report directory."""
    subjects = _collect_subjects(in_dir)
    try:
        profiles = [analyze_subject(s, seed=seed) for s in subjects]
        report = build_cohort_report(profiles, seed=seed)
    except NonConvergenceError as exc:
        click.echo(f"estimation failed: {exc}", err=True)
        sys.exit(EXIT_NO_CONVERGENCE)
    paths = write_report_dir(report.to_dict(), out_dir)
    click.echo(f"report written to {paths['json'].parent}")
    click.echo(render_text(report.to_dict()))


@main.command()
@click.option("--in", "report_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--format", "fmt", type=click.Choice(["text", "csv"]), default="text",
              show_default=True)
@click.option("--out", "out_dir", default=None, type=click.Path(file_okay=False),
              help="Target for csv/figure output; defaults to the report directory.")
def report(report_dir, fmt, out_dir):
    """Re-render a previously written report."""
    json_path = Path(report_dir) / "report.json"
    if not json_path.exists():
        raise InputError(f"{json_path} not found; run analyze first")
    data = json.loads(json_path.read_text(encoding="utf-8"))
    if fmt == "text":
        click.echo(render_text(data))
    else:
        target = Path(out_dir) if out_dir else Path(report_dir)
        csvs = write_csv_series(data, target)
        figs = write_figures(data, target)
        for p in csvs + figs:
            click.echo(str(p))


@main.command()
@click.option("--port", default=8750, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data", "data_dir", required=True, envvar="TIMEPREF_DATA",
              type=click.Path(file_okay=False),
              help="Session directory; TIMEPREF_DATA overrides.")
def serve(port, host, data_dir):
    """Serve the session API for the browser front-end."""
    import uvicorn

    from .server import create_app

    app = create_app(data_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
