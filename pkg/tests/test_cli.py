"""CLI behavior tests via the click runner."""

import json

import pytest
from click.testing import CliRunner

from timepref.cli import main


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    runner = CliRunner()
    result = runner.invoke(
        main, ["simulate", "--out", str(out), "-n", "6", "--seed", "3"]
    )
    assert result.exit_code == 0, result.output
    return out


class TestSimulate:
    def test_writes_sessions_and_exports(self, sim_dir):
        files = sorted(p.name for p in sim_dir.iterdir())
        assert "agents.json" in files
        assert "choice_series.csv" in files
        assert "magnitude_series.csv" in files
        assert sum(name.endswith("_choice.jsonl") for name in files) == 6
        assert sum(name.endswith("_magnitude.jsonl") for name in files) == 6

    def test_agents_file_input(self, tmp_path):
        agents = [
            {
                "label": "custom-0",
                "discount": {"family": "Exponential", "delta": 0.05},
                "choice_noise": {"kind": "deterministic"},
                "magnitude": {"family": "Power", "c": 0.0, "a": 50.0, "beta": 0.7},
                "magnitude_sigma_px": 0.0,
                "time_map_c": 1.0,
                "seed": 5,
            }
        ]
        spec_path = tmp_path / "agents.json"
        spec_path.write_text(json.dumps(agents), encoding="utf-8")
        out = tmp_path / "out"
        result = CliRunner().invoke(
            main, ["simulate", "--agents", str(spec_path), "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        assert (out / "custom-0_choice.jsonl").exists()

    def test_bad_agents_file_exit_2(self, tmp_path):
        spec_path = tmp_path / "agents.json"
        spec_path.write_text("[{\"nope\": 1}]", encoding="utf-8")
        result = CliRunner().invoke(
            main, ["simulate", "--agents", str(spec_path), "--out", str(tmp_path / "o")]
        )
        assert result.exit_code == 2


class TestAnalyze:
    def test_end_to_end_report(self, sim_dir, tmp_path):
        report_dir = tmp_path / "report"
        result = CliRunner().invoke(
            main, ["analyze", "--in", str(sim_dir), "--out", str(report_dir)]
        )
        assert result.exit_code == 0, result.output
        for name in (
            "report.json",
            "report.txt",
            "figure1_magnitude.csv",
            "figure1_magnitude.png",
            "figure2_discounting.csv",
            "figure2_discounting.png",
            "classifications.csv",
        ):
            assert (report_dir / name).exists(), name
        report = json.loads((report_dir / "report.json").read_text())
        assert report["counts"]["n"] == 6
        assert "Cohort report" in result.output

    def test_empty_dir_exit_2(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        result = CliRunner().invoke(
            main, ["analyze", "--in", str(empty), "--out", str(tmp_path / "r")]
        )
        assert result.exit_code == 2
        assert "no session files" in result.output

    def test_unknown_flag_exit_2(self):
        result = CliRunner().invoke(main, ["analyze", "--frobnicate"])
        assert result.exit_code == 2


class TestFit:
    def test_fit_choice_model(self, sim_dir, tmp_path):
        out = tmp_path / "fits.json"
        result = CliRunner().invoke(
            main,
            ["fit", "--in", str(sim_dir), "--model", "general_hyperbolic",
             "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        fits = json.loads(out.read_text())
        assert fits["family"] == "general_hyperbolic"
        assert len(fits["fits"]) == 6
        assert all(v["converged"] for v in fits["fits"].values())

    def test_fit_magnitude_model_default_task(self, sim_dir, tmp_path):
        out = tmp_path / "fits.json"
        result = CliRunner().invoke(
            main, ["fit", "--in", str(sim_dir), "--model", "power", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        assert json.loads(out.read_text())["task"] == "magnitude"


class TestReport:
    def test_text_rerender(self, sim_dir, tmp_path):
        report_dir = tmp_path / "report"
        CliRunner().invoke(main, ["analyze", "--in", str(sim_dir), "--out", str(report_dir)])
        result = CliRunner().invoke(main, ["report", "--in", str(report_dir)])
        assert result.exit_code == 0
        assert "Classification counts" in result.output

    def test_csv_rerender_to_new_dir(self, sim_dir, tmp_path):
        report_dir = tmp_path / "report"
        CliRunner().invoke(main, ["analyze", "--in", str(sim_dir), "--out", str(report_dir)])
        target = tmp_path / "rendered"
        result = CliRunner().invoke(
            main,
            ["report", "--in", str(report_dir), "--format", "csv", "--out", str(target)],
        )
        assert result.exit_code == 0
        assert (target / "figure2_discounting.csv").exists()
        assert (target / "figure2_discounting.png").exists()

    def test_missing_report_exit_2(self, tmp_path):
        empty = tmp_path / "nothing"
        empty.mkdir()
        result = CliRunner().invoke(main, ["report", "--in", str(empty)])
        assert result.exit_code == 2


def test_serve_data_dir_env_override():
    option = next(p for p in main.commands["serve"].params if p.name == "data_dir")
    assert option.envvar == "TIMEPREF_DATA"
    # click surfaces the env value when the flag is absent
    result = CliRunner().invoke(main, ["serve", "--help"], env={"TIMEPREF_DATA": "/tmp/x"})
    assert result.exit_code == 0
