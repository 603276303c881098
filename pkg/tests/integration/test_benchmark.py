"""
Benchmark-scale checks on the desk-scale preset in config/benchmark.env
(n=17, f=4, K=10).

These train full models and run the whole attack suite; they are marked slow
and deselected by default. Run with ``pytest -m slow``.
"""

from pathlib import Path

import numpy as np
import pytest

from src.core.attacks import ATTACK_SUITE
from src.core.config import load_settings
from src.core.models import AttackKind
from src.core.nn.deepset import DeepSetModel
from src.core.rng import RngStreams
from src.services.evaluation_service import EvaluationService
from src.services.synthetic_service import generate_synthetic
from src.services.training_service import adversarial_train

STATIC = ["mean", "cwtm", "cwmed", "gm"]


@pytest.fixture(scope="module")
def bench_settings():
    """The shipped desk-scale preset, with fewer ablation rounds."""
    preset = Path(__file__).resolve().parents[2] / "config" / "benchmark.env"
    return load_settings(str(preset), {"seed": 0, "ra_rounds": 20})


@pytest.fixture(scope="module")
def bench_dataset(bench_settings):
    return generate_synthetic(bench_settings.synthetic_spec())


@pytest.fixture(scope="module")
def trained_models(bench_settings, bench_dataset):
    """Adversarially trained (f=4), clean-trained (f=0) and untrained DeepSets sharing one initialization."""
    init = DeepSetModel.init(bench_dataset.num_classes, RngStreams(bench_settings.seed).stream("init"),
                             p=bench_settings.embedding_width, hidden=bench_settings.hidden_width)
    adversarial, _ = adversarial_train(init, bench_dataset, bench_settings.train_config(4))
    clean, _ = adversarial_train(init, bench_dataset, bench_settings.train_config(0))
    return {"default": adversarial, "clean": clean, "untrained": init}


@pytest.mark.slow
@pytest.mark.integration
class TestBenchmark:
    """Qualitative orderings at benchmark scale."""

    def test_certificate_soundness(self, bench_settings, bench_dataset):
        report = EvaluationService(bench_settings).evaluate(
            bench_dataset, ["cwtm"], ATTACK_SUITE, [4], seeds=1
        )
        assert report.certificates[0].soundness_violations == 0

    def test_margin_curve_trend(self, bench_settings):
        """Higher margin/sigma means lower CWTM error; more adversaries never help."""
        frame = EvaluationService(bench_settings).margin_error_curve(
            [0, 2, 4], [0.1, 1.0, 10.0], seeds=5
        )
        at_four = frame[frame["f"] == 4].sort_values("ratio")
        assert np.all(np.diff(at_four["error"].to_numpy()) < 0)
        for _, group in frame.groupby("alpha"):
            errors = group.sort_values("f")["error"].to_numpy()
            assert np.all(np.diff(errors) >= 0)

    def test_deepset_tm_beats_static_rules(self, bench_settings, bench_dataset, trained_models):
        service = EvaluationService(bench_settings, trained_models)
        report = service.evaluate(bench_dataset, STATIC + ["deepset-tm"], ATTACK_SUITE, [4],
                                  seeds=5)
        best_static = max(report.worst_case(label, 4) for label in STATIC)
        assert report.worst_case("deepset-tm", 4) >= best_static + 2.0

    def test_ablation_ordering(self, bench_settings, bench_dataset, trained_models):
        """Trimming and adversarial training each help; together they help most."""
        labels = ["deepset@clean", "deepset-tm@clean", "deepset", "deepset-tm"]
        report = EvaluationService(bench_settings, trained_models).evaluate(
            bench_dataset, labels, ATTACK_SUITE, [4], seeds=5
        )
        plain = report.worst_case("deepset@clean", 4)
        full = report.worst_case("deepset-tm", 4)
        for partial in ("deepset-tm@clean", "deepset"):
            middle = report.worst_case(partial, 4)
            assert plain + 0.5 <= middle <= full - 0.5

    def test_pgd_budget_insensitive(self, bench_settings, bench_dataset, trained_models):
        accuracies = []
        for steps in (50, 100, 150):
            settings = bench_settings.model_copy(update={"pgd_steps": steps})
            report = EvaluationService(settings, trained_models).evaluate(
                bench_dataset, ["deepset-tm"], (AttackKind.PGD_CW,), [4], seeds=1
            )
            accuracies.append(report.cell("deepset-tm", AttackKind.PGD_CW.value, 4).mean)
        assert max(accuracies) - min(accuracies) <= 1.0

    def test_training_beats_initialization_under_pgd(self, bench_settings, bench_dataset,
                                                      trained_models):
        report = EvaluationService(bench_settings, trained_models).evaluate(
            bench_dataset, ["deepset-tm", "deepset-tm@untrained"], (AttackKind.PGD_CW,), [4], seeds=1
        )
        trained = report.cell("deepset-tm", AttackKind.PGD_CW.value, 4).mean
        untrained = report.cell("deepset-tm@untrained", AttackKind.PGD_CW.value, 4).mean
        assert trained > untrained
