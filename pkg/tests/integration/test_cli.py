"""
Integration tests for the command-line interface.
"""

import json

import pytest

from src.cli import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, main
from src.core.schemas import CLEAN_COLUMN, EvalReport
from src.repositories.dataset_repository import save_dataset

FAST_CONFIG = "\n".join([
    "samples_per_batch=2",
    "adv_steps=2",
    "hidden_width=8",
    "embedding_width=4",
    "batch_size=8",
    "pgd_steps=3",
    "ra_rounds=3",
    "",
])


@pytest.fixture
def fast_config(temp_dir):
    path = temp_dir / "fast.env"
    path.write_text(FAST_CONFIG, encoding="utf-8")
    return str(path)


@pytest.fixture
def generated(temp_dir):
    """A 30-panel synthetic dataset written by ``generate``."""
    out = temp_dir / "gen"
    code = main(["generate", "--seed", "7", "--n", "9", "--K", "5", "--samples", "30",
                 "--f", "2", "--out", str(out)])
    assert code == EXIT_OK
    return out / "dataset.txt"


@pytest.mark.integration
class TestCli:
    """Test subcommands end to end."""

    def test_generate_is_reproducible(self, temp_dir, generated):
        """The same seed writes byte-identical datasets."""
        again = temp_dir / "again"
        main(["generate", "--seed", "7", "--n", "9", "--K", "5", "--samples", "30",
              "--f", "2", "--out", str(again)])
        assert (again / "dataset.txt").read_bytes() == generated.read_bytes()
        assert (again / "similarity.txt").is_file()

    def test_common_flags_before_command(self, temp_dir, generated):
        """--seed and --out may precede the command name."""
        before = temp_dir / "before"
        code = main(["--seed", "7", "--out", str(before), "generate", "--n", "9", "--K", "5",
                     "--samples", "30", "--f", "2"])
        assert code == EXIT_OK
        assert (before / "dataset.txt").read_bytes() == generated.read_bytes()

    def test_flag_after_command_wins(self, temp_dir, generated):
        after = temp_dir / "after"
        code = main(["--seed", "1", "--out", str(temp_dir / "unused"), "generate", "--seed", "7",
                     "--out", str(after), "--n", "9", "--K", "5", "--samples", "30", "--f", "2"])
        assert code == EXIT_OK
        assert (after / "dataset.txt").read_bytes() == generated.read_bytes()
        assert not (temp_dir / "unused").exists()

    def test_default_output_directory(self, tmp_path):
        """isolated_env runs each test inside tmp_path, so the default lands there."""
        assert main(["generate", "--n", "9", "--K", "5", "--samples", "10", "--f", "2"]) == EXIT_OK
        assert (tmp_path / "out" / "dataset.txt").is_file()

    def test_certify_identical_clients(self, temp_dir, identical_dataset, capsys):
        data = save_dataset(identical_dataset, temp_dir / "same" / "dataset.txt")
        out = temp_dir / "cert"
        assert main(["certify", "--data", str(data), "--f", "2", "--out", str(out)]) == EXIT_OK
        summary = json.loads((out / "certificate_summary.json").read_text(encoding="utf-8"))
        assert summary["certified_fraction"] == 1.0
        assert (out / "certificates.csv").is_file()
        assert "100.00% certified" in capsys.readouterr().out

    def test_unknown_flag(self, capsys):
        assert main(["generate", "--bogus"]) == EXIT_VALIDATION
        assert "usage" in capsys.readouterr().err

    def test_missing_command(self):
        assert main([]) == EXIT_VALIDATION

    def test_invalid_settings(self, temp_dir):
        """2f >= n is a validation failure."""
        code = main(["generate", "--n", "4", "--f", "2", "--out", str(temp_dir)])
        assert code == EXIT_VALIDATION

    def test_missing_dataset(self, temp_dir):
        assert main(["certify", "--data", str(temp_dir / "none.txt")]) == EXIT_VALIDATION

    def test_evaluate_writes_report(self, temp_dir, generated, fast_config):
        out = temp_dir / "eval"
        code = main(["evaluate", "--data", str(generated), "--aggregators", "mean,cwtm",
                     "--attacks", "all", "--f", "0,2", "--seeds", "2", "--config", fast_config,
                     "--out", str(out)])
        assert code == EXIT_OK
        report = EvalReport.model_validate_json((out / "report.json").read_text(encoding="utf-8"))
        assert report.f_values == [0, 2]
        assert (out / "cells.csv").is_file() and (out / "summary.csv").is_file()
        for label in ("mean", "cwtm"):
            clean = report.cell(label, CLEAN_COLUMN, 0).accuracies
            assert all(report.cell(label, attack, 0).accuracies == clean for attack in report.attacks)

    def test_evaluate_is_deterministic(self, temp_dir, generated, fast_config):
        args = ["evaluate", "--data", str(generated), "--aggregators", "cwtm,ra-cwmed",
                "--attacks", "sia-wb,pgd-cw", "--f", "2", "--seeds", "1", "--config", fast_config]
        main(args + ["--out", str(temp_dir / "a")])
        main(args + ["--out", str(temp_dir / "b")])
        assert ((temp_dir / "a" / "report.json").read_bytes()
                == (temp_dir / "b" / "report.json").read_bytes())

    def test_train_then_evaluate_deepset(self, temp_dir, generated, fast_config):
        """Training twice gives identical checkpoints that evaluate as DeepSet-TM."""
        for name in ("m1", "m2"):
            code = main(["train", "--data", str(generated), "--f", "2", "--steps", "2",
                         "--config", fast_config, "--out", str(temp_dir / name)])
            assert code == EXIT_OK
        checkpoint = temp_dir / "m1" / "model.json"
        assert checkpoint.read_bytes() == (temp_dir / "m2" / "model.json").read_bytes()
        assert (temp_dir / "m1" / "trace.csv").is_file()
        code = main(["evaluate", "--data", str(generated), "--aggregators", "deepset-tm",
                     "--attacks", "lma", "--f", "2", "--seeds", "1", "--model", str(checkpoint),
                     "--config", fast_config, "--out", str(temp_dir / "eval")])
        assert code == EXIT_OK

    def test_evaluate_without_model(self, temp_dir, generated, fast_config):
        code = main(["evaluate", "--data", str(generated), "--aggregators", "deepset",
                     "--attacks", "lma", "--f", "2", "--config", fast_config,
                     "--out", str(temp_dir / "eval")])
        assert code == EXIT_RUNTIME

    def test_attack(self, temp_dir, generated):
        out = temp_dir / "attacked"
        code = main(["attack", "--data", str(generated), "--attack", "lma", "--f", "2",
                     "--target", "cwmed", "--out", str(out)])
        assert code == EXIT_OK
        assert (out / "attacked.txt").is_file()

    def test_attack_takes_one_name(self, temp_dir, generated):
        code = main(["attack", "--data", str(generated), "--attack", "lma,cpa", "--f", "2",
                     "--out", str(temp_dir)])
        assert code == EXIT_VALIDATION

    @pytest.mark.slow
    def test_selftest(self, temp_dir):
        assert main(["selftest", "--seed", "1", "--out", str(temp_dir)]) == EXIT_OK
