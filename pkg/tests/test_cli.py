import csv
import json
import logging
import pytest
from app.cli import COMMANDS, build_parser, main


def tiny_config(path) -> str:
    config = {
        "tasks": [
            {"generator": generator, "samples_per_split": 40, "seed": 1}
            for generator in ("moons", "circles", "xor")
        ],
        "architectures": {"tiny": [2, 6, 6, 2]},
        "conventional": {"epochs": 2},
        "overfit": {"steps": 10},
        "init_seeds": 2,
        "extraction": {"subset_count": 2, "subset_size": 3, "covariance_cap": 4},
        "estimator": {"train_threshold": 0.0},
        "meta": {
            "steps": 3,
            "bank_sample": 4,
            "min_k": 2,
            "correlation_threshold": 0.0,
            "test_threshold": 0.0,
            "gap_threshold": 1.0,
            "runs_per_task": 1,
            "modes": ["ph"],
        },
        "meta_tasks": ["moons_rot0_sx1"],
    }
    file = path / "config.json"
    file.write_text(json.dumps(config), encoding="utf-8")
    return str(file)


def last_error_line(capsys) -> str:
    return capsys.readouterr().err.strip().splitlines()[-1]


class TestParser:
    def test_every_command_is_registered(self):
        parser = build_parser()
        for name in COMMANDS:
            assert parser.parse_args([name]).command == name

    def test_rejects_unknown_g_mode(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["cv-perf", "--g-mode", "fancy"])


class TestCommands:
    def test_gen_data_single_task(self, tmp_path):
        assert main(["gen-data", "--out", str(tmp_path), "--task", "moons_rot45_sx2"]) == 0
        with (tmp_path / "data" / "moons_rot45_sx2.csv").open(encoding="utf-8") as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == 1200
        assert {row["split"] for row in rows} == {"train", "test"}

    def test_report_on_empty_store_fails_with_code(self, tmp_path, capsys):
        assert main(["report", "--out", str(tmp_path), "--arch", "synth_fc6"]) == 1
        assert last_error_line(capsys).startswith("error code=InsufficientDataError message=")
        assert not (tmp_path / "report.csv").exists()

    def test_unknown_parent_fails(self, tmp_path, capsys):
        assert main(["cv-perf", "--out", str(tmp_path), "--parent", "imagenet"]) == 1
        assert last_error_line(capsys) == "error code=ValueError message=Unknown parent class: imagenet"

    def test_commands_leave_logging_setup_to_the_entry_point(self, tmp_path, monkeypatch):
        calls = []
        monkeypatch.setattr(logging, "basicConfig", lambda **kwargs: calls.append(kwargs))
        assert main(["gen-data", "--out", str(tmp_path), "--task", "xor_rot0_sx1"]) == 0
        assert calls == []

    def test_extract_needs_checkpoint(self, tmp_path, capsys):
        assert main(["extract", "--out", str(tmp_path)]) == 1
        assert "code=ValueError" in last_error_line(capsys)


@pytest.mark.slow
class TestPipeline:
    def test_train_evaluate_meta_report(self, tmp_path):
        config = tiny_config(tmp_path)
        common = ["--config", config, "--out", str(tmp_path / "out"), "--arch", "tiny"]
        assert main(["train", *common]) == 0
        assert main(["cv-perf", "--g-mode", "both", *common]) == 0
        assert main(["meta", *common]) == 0

        out = tmp_path / "out"
        with (out / "meta.csv").open(encoding="utf-8") as handle:
            modes = [row["mode"] for row in csv.DictReader(handle)]
        assert modes == ["baseline", "ph"]
        with (out / "meta_curves.csv").open(encoding="utf-8") as handle:
            assert len(list(csv.DictReader(handle))) == 2 * 3

        assert main(["report", *common]) == 0
        first = (out / "report.csv").read_bytes(), (out / "report_manifest.json").read_bytes()
        assert main(["report", *common]) == 0
        second = (out / "report.csv").read_bytes(), (out / "report_manifest.json").read_bytes()
        assert first == second

    def test_reruns_produce_identical_records(self, tmp_path):
        config = tiny_config(tmp_path)
        for name in ("a", "b"):
            assert main(["train", "--state", "trained", "--config", config, "--out", str(tmp_path / name), "--arch", "tiny"]) == 0
        assert (tmp_path / "a" / "meta_records.jsonl").read_bytes() == (
            tmp_path / "b" / "meta_records.jsonl"
        ).read_bytes()
