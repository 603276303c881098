"""
Integration tests for the evaluation pipeline.
"""

import numpy as np
import pytest

from src.core.attacks import ATTACK_SUITE
from src.core.exceptions import MissingModelError, ValidationError
from src.core.models import AttackKind, SystemParams
from src.core.schemas import CLEAN_COLUMN
from src.services.evaluation_service import (
    EvaluationService,
    certify_dataset,
    estimate_robustness_gap,
    evaluate,
    gap_statistics,
)

STATIC = ["mean", "cwtm", "cwmed"]


@pytest.mark.integration
class TestEvaluationReport:
    """Test report invariants on a small synthetic dataset."""

    @pytest.fixture
    def report(self, settings, small_dataset):
        service = EvaluationService(settings)
        return service.evaluate(small_dataset, STATIC, ATTACK_SUITE, [0, 2], seeds=2)

    def test_grid_shape(self, report):
        """One clean column plus one column per attack, per aggregator and f."""
        assert report.aggregators == STATIC
        assert len(report.cells) == len(STATIC) * 2 * (len(ATTACK_SUITE) + 1)
        assert all(len(cell.accuracies) == 2 for cell in report.cells)

    def test_worst_case_is_minimum_over_attacks(self, report):
        for summary in report.summaries:
            columns = [c.mean for c in report.cells
                       if c.aggregator == summary.aggregator and c.f == summary.f
                       and c.attack != CLEAN_COLUMN]
            assert summary.worst_case == min(columns)

    def test_no_adversaries_equals_clean(self, report):
        """At f=0 every attack column reproduces the clean accuracy."""
        for label in STATIC:
            clean = report.cell(label, CLEAN_COLUMN, 0)
            for kind in ATTACK_SUITE:
                assert report.cell(label, kind.value, 0).accuracies == clean.accuracies

    def test_gap_inequality(self, report):
        """Robust risk never exceeds oracle risk plus the estimated gap."""
        assert report.gaps
        for gap in report.gaps:
            assert 0.0 <= gap.gap <= 1.0
            assert gap.slack >= -1e-9

    def test_certificates_are_sound(self, report):
        assert [c.f for c in report.certificates] == [0, 2]
        assert all(c.soundness_violations == 0 for c in report.certificates)

    def test_std_is_population_std(self, report):
        cell = report.cell("cwtm", AttackKind.LMA.value, 2)
        assert cell.std == pytest.approx(float(np.std(cell.accuracies)))

    def test_deterministic_bytes(self, report, settings, small_dataset):
        again = EvaluationService(settings).evaluate(small_dataset, STATIC, ATTACK_SUITE, [0, 2], seeds=2)
        assert again.model_dump_json() == report.model_dump_json()


@pytest.mark.integration
class TestEvaluationService:
    """Test aggregator handling, gaps and curves."""

    def test_cells_do_not_depend_on_aggregator_list(self, settings, small_dataset):
        service = EvaluationService(settings)
        attacks = (AttackKind.SIA_WHITE_BOX, AttackKind.PGD_CW)
        alone = service.evaluate(small_dataset, ["ra-cwtm"], attacks, [2], seeds=1)
        mixed = service.evaluate(small_dataset, ["mean", "ra-cwtm"], attacks, [2], seeds=1)
        for kind in attacks:
            assert (alone.cell("ra-cwtm", kind.value, 2).accuracies
                    == mixed.cell("ra-cwtm", kind.value, 2).accuracies)

    def test_ablation_at_largest_bound(self, settings, small_dataset):
        """ra-cwtm runs at n=9, f=4 where the kept 5 clients only admit a trim of 2."""
        report = EvaluationService(settings).evaluate(
            small_dataset.subset(range(20)), ["ra-cwtm"], (AttackKind.LMA,), [4], seeds=1
        )
        assert report.cell("ra-cwtm", AttackKind.LMA.value, 4) is not None

    def test_missing_model(self, settings, small_dataset):
        with pytest.raises(MissingModelError, match="--model"):
            EvaluationService(settings).evaluate(small_dataset, ["deepset-tm"], ATTACK_SUITE, [2], 1)

    def test_deepset_variants(self, settings, small_dataset, tiny_model):
        service = EvaluationService(settings, {"default": tiny_model, "clean": tiny_model})
        report = service.evaluate(small_dataset, ["deepset", "deepset-tm", "deepset-tm@clean"],
                                  (AttackKind.LMA, AttackKind.PGD_CW), [2], seeds=1)
        assert report.aggregators == ["deepset", "deepset-tm", "deepset-tm@clean"]
        assert (report.cell("deepset-tm", "lma", 2).accuracies
                == report.cell("deepset-tm@clean", "lma", 2).accuracies)

    def test_cpa_without_similarity(self, settings, small_dataset):
        """An implicit full suite drops cpa with a note; naming it is an error."""
        dataset = small_dataset.subset(range(20))
        dataset.similarity = None
        service = EvaluationService(settings)
        report = service.evaluate(dataset, ["mean"], ATTACK_SUITE, [1], seeds=1)
        assert AttackKind.CPA.value not in report.attacks
        assert any("cpa" in note for note in report.notes)
        with pytest.raises(ValidationError, match="similarity"):
            service.evaluate(dataset, ["mean"], (AttackKind.CPA,), [1], 1, explicit_attacks=True)

    def test_gap_zero_for_identical_clients(self, settings, identical_dataset):
        """Trimming absorbs f outliers around identical honest rows."""
        gap = estimate_robustness_gap(identical_dataset, "cwtm", "mean", ATTACK_SUITE, 2, settings)
        assert gap == 0.0

    def test_gap_zero_without_adversaries(self, settings, small_dataset):
        gap = estimate_robustness_gap(small_dataset, "mean", "mean", ATTACK_SUITE, 0, settings)
        assert gap == 0.0

    def test_gap_statistics(self):
        labels = np.array([0, 1, 2, 0])
        oracle = np.array([0, 1, 1, 0])
        attacked = np.array([[0, 1, 1, 2], [0, 2, 1, 0]])
        gap, oracle_error, robust_risk = gap_statistics(labels, oracle, attacked)
        assert (gap, oracle_error, robust_risk) == (0.5, 0.25, 0.75)

    def test_module_level_evaluate(self, settings, small_dataset):
        report = evaluate(small_dataset, ["cwmed"], (AttackKind.LOGIT_FLIPPING,),
                          SystemParams(9, 2, 5), seeds=1, settings=settings)
        assert report.f_values == [2]
        with pytest.raises(ValidationError):
            evaluate(small_dataset, ["cwmed"], (AttackKind.LMA,), SystemParams(7, 2, 5), 1, settings)


@pytest.mark.integration
class TestCertificatesAndCurves:
    """Test certificate summaries and margin/error points."""

    def test_identical_clients_fully_certified(self, identical_dataset):
        frame, summary = certify_dataset(identical_dataset, SystemParams(9, 2, 5))
        assert summary["certified_fraction"] == 1.0
        assert summary["degenerate"] == 0
        assert list(frame.columns) == ["input_id", "margin", "sigma_x", "kappa", "bound",
                                       "certified", "degenerate"]

    def test_zero_dissimilarity_point(self, settings, identical_dataset):
        """With identical clients the attacked error equals the clean ensemble error."""
        point = EvaluationService(settings).margin_error_point(identical_dataset, 2)
        assert point["error"] == point["clean_error"]
        assert point["ratio"] > 1e6

    def test_curve_columns(self, settings):
        frame = EvaluationService(settings).margin_error_curve([0, 2], [0.3, 10.0], seeds=1)
        assert list(frame.columns) == ["alpha", "f", "ratio", "error", "error_std",
                                       "clean_error", "certified_fraction"]
        assert len(frame) == 4
        at_zero = frame[frame["f"] == 0]
        assert np.allclose(at_zero["error"], at_zero["clean_error"])
