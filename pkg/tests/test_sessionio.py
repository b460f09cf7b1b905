"""Session file round-trip, corruption handling and CSV export tests."""

import json

import pytest

from timepref import models
from timepref.magnitude import new_magnitude_session
from timepref.sessionio import (
    CorruptEventError,
    SchemaMismatchError,
    export_csv,
    ingest_csv,
    load_directory,
    load_session,
    save_session,
)
from timepref.simulation import (
    AgentSpec,
    Deterministic,
    Logistic,
    simulate_choice_session,
    simulate_magnitude_session,
)


def make_agent(seed=3, noise=None):
    return AgentSpec(
        discount=models.ProportionalHyperbolic(delta=0.08),
        choice_noise=noise or Deterministic(),
        magnitude=models.Power(c=10.0, a=50.0, beta=0.7),
        magnitude_sigma_px=10.0,
        seed=seed,
    )


class TestRoundTrip:
    def test_choice_session_round_trip_bit_identical(self, tmp_path):
        session = simulate_choice_session(make_agent())
        path = save_session(session, tmp_path / "s.jsonl", "s01")
        loaded = load_session(path)
        assert loaded.header.subject_id == "s01"
        assert loaded.session.status == "complete"
        original = [session.equivalence_point(iv) for iv in session.config.intervals]
        replayed = [
            loaded.session.equivalence_point(iv) for iv in loaded.session.config.intervals
        ]
        assert original == replayed  # dataclass equality covers ep and dv exactly

    def test_noisy_choice_session_round_trip(self, tmp_path):
        session = simulate_choice_session(
            make_agent(seed=9, noise=Logistic(temperature=2.0, perseveration=0.3,
                                              hysteresis=0.18))
        )
        path = save_session(session, tmp_path / "s.jsonl", "s02")
        loaded = load_session(path)
        assert loaded.session.dv_series() == session.dv_series()
        assert loaded.session.total_trials == session.total_trials

    def test_magnitude_round_trip(self, tmp_path):
        session = simulate_magnitude_session(make_agent(seed=5), timeout_rate=0.05)
        path = save_session(session, tmp_path / "m.jsonl", "s03")
        loaded = load_session(path)
        assert loaded.session.series() == session.series()
        assert [r.line_px for r in loaded.session.responses] == [
            r.line_px for r in session.responses
        ]

    def test_second_save_is_byte_identical(self, tmp_path):
        session = simulate_choice_session(make_agent())
        p1 = save_session(session, tmp_path / "a.jsonl", "s04")
        loaded = load_session(p1)
        p2 = save_session(loaded.session, tmp_path / "b.jsonl", "s04")
        assert p1.read_bytes() == p2.read_bytes()

    def test_running_session_round_trip(self, tmp_path):
        session = new_magnitude_session(seed=8)
        for _ in range(10):
            session.record(session.next_trial(), 100)
        path = save_session(session, tmp_path / "partial.jsonl", "s05")
        loaded = load_session(path)
        assert loaded.session.status == "running"
        assert len(loaded.session.responses) == 10
        # the reconstructed session can continue
        loaded.session.record(loaded.session.next_trial(), 200)


class TestCorruption:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("", encoding="utf-8")
        with pytest.raises(SchemaMismatchError):
            load_session(path)

    def test_foreign_json(self, tmp_path):
        path = tmp_path / "foreign.jsonl"
        path.write_text('{"hello": "world"}\n', encoding="utf-8")
        with pytest.raises(SchemaMismatchError):
            load_session(path)

    def test_deleted_middle_line(self, tmp_path):
        session = simulate_choice_session(make_agent())
        path = save_session(session, tmp_path / "s.jsonl", "s01")
        lines = path.read_text(encoding="utf-8").splitlines()
        del lines[len(lines) // 2]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        with pytest.raises(CorruptEventError):
            load_session(path)

    def test_tampered_amount(self, tmp_path):
        session = simulate_choice_session(make_agent())
        path = save_session(session, tmp_path / "s.jsonl", "s01")
        lines = path.read_text(encoding="utf-8").splitlines()
        event = json.loads(lines[1])
        assert event["type"] == "trial"
        event["later_amount"] = 999.0
        lines[1] = json.dumps(event, sort_keys=True, separators=(",", ":"))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        with pytest.raises(CorruptEventError):
            load_session(path)

    def test_truncation_keeps_prefix_valid(self, tmp_path):
        # durability: a file cut after any event prefix still replays to a
        # valid session
        session = simulate_choice_session(make_agent())
        path = save_session(session, tmp_path / "s.jsonl", "s01")
        lines = path.read_text(encoding="utf-8").splitlines()
        # drop the status line plus the last few events
        for cut in (len(lines) - 2, len(lines) // 2 + 1, 2):
            part = tmp_path / f"cut{cut}.jsonl"
            part.write_text("\n".join(lines[:cut]) + "\n", encoding="utf-8")
            loaded = load_session(part)
            assert loaded.session.status in ("running", "complete")


class TestCsv:
    def test_choice_export_shape(self, tmp_path):
        session = simulate_choice_session(make_agent())
        out = tmp_path / "choice.csv"
        skipped = export_csv([("s01", session)], "choice", out)
        lines = out.read_text(encoding="utf-8").strip().splitlines()
        assert skipped == 0
        assert lines[0] == "subject,interval_months,ep,dv"
        assert len(lines) == 13  # header + 12 intervals

    def test_incomplete_skipped_with_count(self, tmp_path):
        complete = simulate_choice_session(make_agent())
        incomplete = __import__("timepref.staircase", fromlist=["ChoiceSession"]).ChoiceSession(1)
        out = tmp_path / "choice.csv"
        skipped = export_csv([("a", complete), ("b", incomplete)], "choice", out)
        assert skipped == 1
        lines = out.read_text(encoding="utf-8").strip().splitlines()
        assert all(ln.startswith("a,") for ln in lines[1:])

    def test_round_trip_choice(self, tmp_path):
        session = simulate_choice_session(make_agent())
        out = tmp_path / "choice.csv"
        export_csv([("s01", session)], "choice", out)
        series = ingest_csv(out, "choice")["s01"]
        assert series == session.dv_series()

    def test_round_trip_magnitude(self, tmp_path):
        session = simulate_magnitude_session(make_agent(seed=6), timeout_rate=0.03)
        out = tmp_path / "mag.csv"
        export_csv([("s01", session)], "magnitude", out)
        series = ingest_csv(out, "magnitude")["s01"]
        assert series == session.series()

    def test_magnitude_missing_counts(self, tmp_path):
        session = simulate_magnitude_session(make_agent(seed=6), timeout_rate=0.2)
        out = tmp_path / "mag.csv"
        export_csv([("s01", session)], "magnitude", out)
        import csv as csvmod

        with out.open() as fh:
            total_missing = sum(int(r["n_missing"]) for r in csvmod.DictReader(fh))
        actual = sum(
            1 for r in session.responses if not r.trial.is_training and r.line_px is None
        )
        assert total_missing == actual


def test_load_directory_sorted(tmp_path):
    for i, seed in enumerate((4, 5, 6)):
        save_session(
            simulate_magnitude_session(make_agent(seed=seed)),
            tmp_path / f"s{i}.jsonl",
            f"s{i}",
        )
    loaded = load_directory(tmp_path)
    assert [ls.header.subject_id for _, ls in loaded] == ["s0", "s1", "s2"]
