import json

import pytest

from streampulse.cli import (
    INPUT_ERROR,
    USAGE_ERROR,
    UsageError,
    duration_to_samples,
    load_config_file,
    main,
    parse_duration,
)
from streampulse.debut import read_labels_csv
from streampulse.synth import load_ground_truth


class TestParseDuration:
    def test_units(self):
        assert parse_duration("1d") == 86400
        assert parse_duration("2h") == 7200
        assert parse_duration("30m") == 1800
        assert parse_duration("45s") == 45
        assert parse_duration("900") == 900

    def test_rejects_nonpositive(self):
        with pytest.raises(UsageError):
            parse_duration("0")
        with pytest.raises(UsageError):
            parse_duration("-1h")

    def test_rejects_garbage(self):
        with pytest.raises(ValueError):
            parse_duration("soon")

    def test_samples(self):
        assert duration_to_samples("1d", 900) == 96
        assert duration_to_samples("7d", 900) == 672

    def test_samples_rejects_fractional_ticks(self):
        with pytest.raises(UsageError):
            duration_to_samples("1000s", 900)


def test_load_config_file(tmp_path):
    path = tmp_path / "cfg"
    path.write_text("# comment\nseed = 7\n\nout=corpus\nbroken line\n")
    assert load_config_file(str(path)) == {"seed": "7", "out": "corpus"}
    assert load_config_file(None) == {}


class TestExitCodes:
    def test_missing_subcommand(self):
        assert main([]) == USAGE_ERROR

    def test_unknown_flag(self):
        assert main(["detect", "--bogus"]) == USAGE_ERROR

    def test_missing_required_flag(self):
        assert main(["detect"]) == USAGE_ERROR

    def test_missing_input_file(self, tmp_path):
        assert main(["detect", "--snapshots", str(tmp_path / "nope.jsonl")]) == INPUT_ERROR

    def test_bad_synth_config(self, tmp_path):
        rc = main(
            ["synth", "--out", str(tmp_path), "--exponent", "1.0", "--snapshots", "10"]
        )
        assert rc == INPUT_ERROR


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Run the whole subcommand chain once on a small deterministic corpus."""
    root = tmp_path_factory.mktemp("pipeline")
    corpus = root / "corpus"
    assert main([
        "synth", "--out", str(corpus), "--games", "8", "--snapshots", "700",
        "--seed", "11", "--noise", "none", "--impactful", "4", "--inert", "4",
    ]) == 0
    assert main([
        "detect", "--snapshots", str(corpus / "snapshots.jsonl"),
        "--out", str(root / "events.jsonl"),
        "--summary", str(root / "events_by_window.csv"),
    ]) == 0
    assert main([
        "debuts", "--snapshots", str(corpus / "snapshots.jsonl"),
        "--events", str(root / "events.jsonl"),
        "--labels", str(root / "labels.csv"),
        "--summary", str(root / "debut_summary.json"),
    ]) == 0
    assert main([
        "fetch-metadata", "--labels", str(root / "labels.csv"),
        "--fixtures", str(corpus / "metadata_fixtures"),
        "--cache", str(root / "cache"),
        "--drop-report", str(root / "drops.csv"),
    ]) == 0
    assert main([
        "features", "--labels", str(root / "labels.csv"),
        "--metadata-dir", str(corpus / "metadata_fixtures"),
        "--out", str(root / "dataset.csv"),
        "--schema", str(root / "schema.json"),
    ]) == 0
    assert main([
        "train", "--dataset", str(root / "dataset.csv"), "--model", "dt",
        "--folds", "4", "--out", str(root / "cv_report.json"),
        "--importance", str(root / "importance.json"),
    ]) == 0
    assert main([
        "stats", "--snapshots", str(corpus / "snapshots.jsonl"),
        "--events", str(root / "events.jsonl"),
        "--outdir", str(root / "reports"),
    ]) == 0
    return root, corpus


class TestPipeline:
    def test_labels_match_ground_truth(self, pipeline):
        root, corpus = pipeline
        truth = load_ground_truth(corpus / "ground_truth.json")
        labels = {l.game: l.impactful for l in read_labels_csv(root / "labels.csv")}
        expected = {d["game"]: d["impactful"] for d in truth.debuts}
        assert labels == expected

    def test_summary_counts(self, pipeline):
        root, _ = pipeline
        summary = json.loads((root / "debut_summary.json").read_text())
        assert summary["debuts_labeled"] == 8
        assert summary["with_events"] == 4

    def test_metadata_all_resolved(self, pipeline):
        root, _ = pipeline
        assert (root / "drops.csv").read_text().strip() == "game,reason"

    def test_dataset_dimensions(self, pipeline):
        root, _ = pipeline
        header, *rows = (root / "dataset.csv").read_text().splitlines()
        assert len(rows) == 8
        assert header.split(",")[-1] == "label"

    def test_cv_report_fields(self, pipeline):
        root, _ = pipeline
        doc = json.loads((root / "cv_report.json").read_text())
        assert doc["model"] == "dt"
        assert len(doc["folds"]) == 4
        assert 0.0 <= doc["means"]["accuracy"] <= 1.0

    def test_importance_ranks_planted_signal_first(self, pipeline):
        root, _ = pipeline
        ranking = json.loads((root / "importance.json").read_text())
        assert ranking[0]["feature"] == "description_len"

    def test_stats_outputs(self, pipeline):
        root, _ = pipeline
        reports = root / "reports"
        assert (reports / "viewers_per_game.tsv").exists()
        assert (reports / "total_viewers.tsv").exists()
        assert (reports / "top_volatile_games.csv").exists()
        diag = json.loads((reports / "cycle_diagnostics.json").read_text())
        assert "weekend_uplift" in diag

    def test_train_ablate(self, pipeline):
        root, _ = pipeline
        rc = main([
            "train", "--dataset", str(root / "dataset.csv"), "--model", "dt",
            "--folds", "4", "--ablate", "description_len",
            "--out", str(root / "cv_ablated.json"),
        ])
        assert rc == 0
        assert (root / "cv_ablated.json").exists()

    def test_train_unknown_ablate_feature(self, pipeline):
        root, _ = pipeline
        rc = main([
            "train", "--dataset", str(root / "dataset.csv"),
            "--ablate", "no_such_feature", "--folds", "4",
            "--out", str(root / "unused.json"),
        ])
        assert rc == INPUT_ERROR

    def test_report_subcommand(self, pipeline):
        root, corpus = pipeline
        rc = main([
            "report", "--snapshots", str(corpus / "snapshots.jsonl"),
            "--outdir", str(root / "report_out"),
            "--debut-summary", str(root / "debut_summary.json"),
            "--cv-report", str(root / "cv_report.json"),
        ])
        assert rc == 0
        assert (root / "report_out" / "debut_impact_table.json").exists()
        assert (root / "report_out" / "cv_report.json").exists()


def test_synth_reruns_byte_identical(tmp_path):
    args = ["--games", "5", "--snapshots", "300", "--seed", "3", "--inert", "1"]
    assert main(["synth", "--out", str(tmp_path / "a")] + args) == 0
    assert main(["synth", "--out", str(tmp_path / "b")] + args) == 0
    rels = ["snapshots.jsonl", "manifest.txt", "ground_truth.json"]
    for rel in rels:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_config_file_supplies_defaults_and_flags_override(tmp_path):
    cfg = tmp_path / "synth.cfg"
    cfg.write_text(f"out={tmp_path / 'from_cfg'}\ngames=4\nsnapshots=30\nseed=9\n")
    assert main(["--config", str(cfg), "synth"]) == 0
    assert (tmp_path / "from_cfg" / "snapshots.jsonl").exists()
    # a flag beats the config value
    assert main(["--config", str(cfg), "synth", "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "snapshots.jsonl").exists()


def test_detect_uses_manifest_tick(tmp_path):
    assert main([
        "synth", "--out", str(tmp_path / "c"), "--games", "4",
        "--snapshots", "250", "--tick", "1800", "--seed", "5",
    ]) == 0
    # 1d at tick 1800 is 48 samples; default window string must still parse
    rc = main([
        "detect", "--snapshots", str(tmp_path / "c" / "snapshots.jsonl"),
        "--windows", "1d,2d", "--out", str(tmp_path / "ev.jsonl"),
        "--summary", str(tmp_path / "s.csv"),
    ])
    assert rc == 0
    assert (tmp_path / "ev.jsonl").exists()
