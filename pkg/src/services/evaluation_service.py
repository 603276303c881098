"""
Evaluation pipeline: clean, per-attack and worst-case accuracy over seeds,
certificate statistics, robustness-gap estimates and margin/error curves.

Random streams are addressed per cell (f, seed, attack, aggregator label), so
results do not depend on the order or selection of aggregators in a run.
"""

import logging
import zlib
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..core.aggregators import AggregatorFactory, BaseAggregator, certify_batch
from ..core.attacks import ATTACK_SUITE
from ..core.config import Settings
from ..core.exceptions import ValidationError
from ..core.models import AggregatorKind, AttackKind, ProbitDataset, SystemParams
from ..core.nn.deepset import DeepSetModel
from ..core.rng import RngStreams
from ..core.schemas import (
    CLEAN_COLUMN,
    AggregatorSummary,
    CellResult,
    CertificateSummary,
    EvalReport,
    GapEstimate,
)
from .attack_service import corrupt_probits
from .synthetic_service import generate_synthetic

logger = logging.getLogger(__name__)

SOUNDNESS_RULE = "cwtm"
CURVE_ATTACKS = (AttackKind.SIA_WHITE_BOX, AttackKind.LMA)
QUANTILES = (0.1, 0.5, 0.9)
NOTES = [
    "Robust accuracies and risks are lower bounds relative to the implemented attack suite.",
    "Accuracy is micro-averaged over panels; std is the population std over seeds.",
    "Certificate soundness compares attacked CWTM predictions with the argmax of the clean mean.",
]


def label_code(label: str) -> int:
    """Stable integer coordinate for an aggregator label."""
    return zlib.crc32(label.encode("utf-8"))


def accuracy(predictions: np.ndarray, labels: np.ndarray) -> float:
    return float(100.0 * np.mean(np.asarray(predictions) == np.asarray(labels)))


def gap_statistics(labels: np.ndarray, oracle_clean: np.ndarray,
                   attacked: np.ndarray) -> Tuple[float, float, float]:
    """(gap, oracle error, robust risk) with the per-panel worst case over attacks.

    ``attacked`` has shape (attacks, panels). A panel counts toward the gap
    when any attack moves the robust prediction off the oracle's clean one.
    """
    attacked = np.atleast_2d(attacked)
    gap = float(np.mean(np.any(attacked != oracle_clean, axis=0)))
    oracle_error = float(np.mean(oracle_clean != labels))
    robust_risk = float(np.mean(np.any(attacked != labels, axis=0)))
    return gap, oracle_error, robust_risk


def _quantiles(values: np.ndarray) -> Dict[str, float]:
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        return {}
    return {f"q{int(q * 100)}": float(np.quantile(finite, q)) for q in QUANTILES}


def certificate_frame(dataset: ProbitDataset, params: SystemParams,
                      tie_quantum: float = 1e-12) -> pd.DataFrame:
    columns = certify_batch(dataset.probits, params.f, tie_quantum)
    frame = pd.DataFrame({"input_id": list(dataset.input_ids)})
    for name in ("margin", "sigma_x", "kappa", "bound", "certified", "degenerate"):
        frame[name] = columns[name]
    return frame


def certify_dataset(dataset: ProbitDataset, params: SystemParams,
                    tie_quantum: float = 1e-12) -> Tuple[pd.DataFrame, dict]:
    """Per-panel certificates plus a summary of the certified fraction and quantiles."""
    if dataset.n != params.n or dataset.num_classes != params.K:
        raise ValidationError(
            f"dataset shape (n={dataset.n}, K={dataset.num_classes}) does not match "
            f"n={params.n}, K={params.K}"
        )
    frame = certificate_frame(dataset, params, tie_quantum)
    margins = frame["margin"].to_numpy(dtype=float)
    sigma = frame["sigma_x"].to_numpy(dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(sigma > 0, margins / np.where(sigma > 0, sigma, 1.0), np.inf)
    summary = {
        "panels": len(frame),
        "f": params.f,
        "kappa": float(frame["kappa"].iloc[0]) if len(frame) else 0.0,
        "certified": int(frame["certified"].sum()),
        "certified_fraction": float(frame["certified"].mean()) if len(frame) else 0.0,
        "degenerate": int(frame["degenerate"].sum()),
        "margin_quantiles": _quantiles(margins),
        "sigma_quantiles": _quantiles(sigma),
        "ratio_quantiles": _quantiles(ratio),
    }
    logger.info(
        f"📜 Certified {summary['certified']}/{summary['panels']} panels "
        f"at f={params.f} ({summary['degenerate']} degenerate)"
    )
    return frame, summary


def resolve_attacks(attacks: Sequence[AttackKind], similarity: Optional[np.ndarray],
                    explicit: bool) -> Tuple[Tuple[AttackKind, ...], List[str]]:
    """Drop CPA from an implicit full suite when no similarity matrix is available."""
    notes: List[str] = []
    if AttackKind.CPA in attacks and similarity is None:
        if explicit:
            raise ValidationError(
                "cpa needs a class similarity matrix; pass --similarity <file> "
                "or use a generated dataset"
            )
        logger.warning("⚠️ No similarity matrix: skipping cpa")
        notes.append("cpa skipped: no class similarity matrix available.")
        attacks = tuple(a for a in attacks if a is not AttackKind.CPA)
    if not attacks:
        raise ValidationError("no attacks to evaluate")
    return tuple(attacks), notes


@dataclass
class SeedPredictions:
    """Predictions of one aggregator for one (f, seed): clean and per attack."""
    clean: np.ndarray
    attacked: np.ndarray


class EvaluationService:
    """Runs the seeded evaluation grid for a fixed dataset."""

    def __init__(self, settings: Optional[Settings] = None,
                 models: Optional[Dict[str, DeepSetModel]] = None):
        self.settings = settings or Settings()
        self.models = dict(models or {})
        self.streams = RngStreams(self.settings.seed)
        logger.info("🧪 Evaluation service initialized")

    def build_aggregators(self, labels: Sequence[str], f: int,
                          n: Optional[int] = None) -> Dict[str, BaseAggregator]:
        factory = AggregatorFactory.from_settings(self.settings, f, self.models, n)
        return factory.create_all(labels, rounds=self.settings.ra_rounds,
                                  inner_trim=self.settings.ra_inner_trim)

    def predictions(self, dataset: ProbitDataset, aggregator: BaseAggregator,
                    attacks: Sequence[AttackKind], f: int, seed_index: int) -> SeedPredictions:
        """Clean and attacked predictions for one aggregator at one seed."""
        code = label_code(aggregator.label)
        clean = aggregator.classify(
            dataset.probits,
            self.streams.stream("ablation", f, seed_index, len(ATTACK_SUITE), code),
        )
        attacked = np.empty((len(attacks), len(dataset)), dtype=np.int64)
        for row, kind in enumerate(attacks):
            suite_index = ATTACK_SUITE.index(kind)
            corrupted, _ = corrupt_probits(
                dataset.probits,
                dataset.labels,
                self.settings.attack_config(kind, dataset.similarity),
                f,
                self.settings.policy,
                self.streams.stream("adversary", f, seed_index, suite_index),
                self.streams.stream("attack", f, seed_index, suite_index, code),
                aggregator,
            )
            attacked[row] = aggregator.classify(
                corrupted, self.streams.stream("ablation", f, seed_index, suite_index, code)
            )
            logger.debug(
                f"📋 f={f} seed={seed_index} {aggregator.label} / {kind.value}: "
                f"{accuracy(attacked[row], dataset.labels):.2f}%"
            )
        return SeedPredictions(clean=np.asarray(clean), attacked=attacked)

    def evaluate(self, dataset: ProbitDataset, aggregators: Sequence[str],
                 attacks: Sequence[AttackKind], f_values: Sequence[int], seeds: int,
                 explicit_attacks: bool = False) -> EvalReport:
        if seeds < 1:
            raise ValidationError("need at least one seed")
        if len(dataset) == 0:
            raise ValidationError("cannot evaluate an empty dataset")
        attacks, notes = resolve_attacks(tuple(attacks), dataset.similarity, explicit_attacks)
        oracle_label = AggregatorKind.parse(self.settings.oracle).label
        cells: List[CellResult] = []
        summaries: List[AggregatorSummary] = []
        gaps: List[GapEstimate] = []
        certificates: List[CertificateSummary] = []
        labels_out: List[str] = []

        for f in f_values:
            params = SystemParams(dataset.n, f, dataset.num_classes)
            built = self.build_aggregators(aggregators, f, dataset.n)
            labels_out = list(built)
            extra = self.build_aggregators(
                [label for label in (oracle_label, SOUNDNESS_RULE) if label not in built],
                f,
                dataset.n,
            )
            logger.info(
                f"🚀 Evaluating {len(built)} aggregators x {len(attacks)} attacks "
                f"at f={f} over {seeds} seeds"
            )
            runs: Dict[str, List[SeedPredictions]] = {
                label: [self.predictions(dataset, agg, attacks, f, s) for s in range(seeds)]
                for label, agg in {**built, **extra}.items()
            }

            for label in built:
                clean_acc = [accuracy(run.clean, dataset.labels) for run in runs[label]]
                cells.append(_cell(label, CLEAN_COLUMN, f, clean_acc))
                attack_cells = []
                for row, kind in enumerate(attacks):
                    accs = [accuracy(run.attacked[row], dataset.labels) for run in runs[label]]
                    attack_cells.append(_cell(label, kind.value, f, accs))
                cells.extend(attack_cells)
                worst = min(attack_cells, key=lambda c: c.mean)
                summaries.append(AggregatorSummary(
                    aggregator=label, f=f, clean_accuracy=float(np.mean(clean_acc)),
                    worst_case=worst.mean, worst_attack=worst.attack,
                    robust_risk=1.0 - worst.mean / 100.0,
                ))
                stats = np.array([
                    gap_statistics(dataset.labels, oracle.clean, run.attacked)
                    for oracle, run in zip(runs[oracle_label], runs[label])
                ]).mean(axis=0)
                gaps.append(GapEstimate(
                    aggregator=label, oracle=oracle_label, f=f, gap=float(stats[0]),
                    oracle_error=float(stats[1]), robust_risk=float(stats[2]),
                    slack=float(stats[1] + stats[0] - stats[2]),
                ))

            certificates.append(self._certificate_summary(dataset, params, runs[SOUNDNESS_RULE]))

        report = EvalReport(
            seed=self.settings.seed, seeds=seeds, n=dataset.n, num_classes=dataset.num_classes,
            panels=len(dataset), f_values=list(f_values), aggregators=labels_out,
            attacks=[a.value for a in attacks], oracle=oracle_label,
            adversary_policy=self.settings.policy.value,
            renormalized_rows=dataset.renormalized_rows, cells=cells, summaries=summaries,
            gaps=gaps, certificates=certificates, notes=NOTES + notes,
        )
        logger.info("✅ Evaluation finished")
        return report

    def _certificate_summary(self, dataset: ProbitDataset, params: SystemParams,
                             cwtm_runs: List[SeedPredictions]) -> CertificateSummary:
        frame, summary = certify_dataset(dataset, params, self.settings.tie_quantum)
        reference = np.argmax(dataset.probits.mean(axis=1), axis=-1)
        trusted = frame["certified"].to_numpy(dtype=bool) & ~frame["degenerate"].to_numpy(dtype=bool)
        violations = 0
        for run in cwtm_runs:
            flipped = np.any(run.attacked != reference, axis=0) & trusted
            violations += int(flipped.sum())
        if violations:
            logger.error(f"❌ {violations} certificate soundness violations at f={params.f}")
        return CertificateSummary(
            f=params.f, panels=summary["panels"], certified_fraction=summary["certified_fraction"],
            degenerate=summary["degenerate"], soundness_violations=violations,
            margin_quantiles=summary["margin_quantiles"],
            sigma_quantiles=summary["sigma_quantiles"],
            ratio_quantiles=summary["ratio_quantiles"],
        )

    def estimate_robustness_gap(self, dataset: ProbitDataset, robust: str, oracle: str,
                                attacks: Sequence[AttackKind], f: int,
                                seed_index: int = 0) -> float:
        """Fraction of panels where some attack moves ``robust`` off ``oracle``'s clean prediction.

        A lower bound on the gap over all f-corruptions, since the suite cannot
        exhaust them.
        """
        built = self.build_aggregators([robust, oracle], f, dataset.n)
        robust_label = next(iter(built))
        oracle_label = list(built)[-1]
        robust_run = self.predictions(dataset, built[robust_label], attacks, f, seed_index)
        oracle_run = self.predictions(dataset, built[oracle_label], (), f, seed_index)
        return gap_statistics(dataset.labels, oracle_run.clean, robust_run.attacked)[0]

    def margin_error_point(self, dataset: ProbitDataset, f: int, seed_index: int = 0) -> dict:
        """Mean margin/sigma ratio and the CWTM error under the worse of SIA-wb and LMA."""
        _, summary = certify_dataset(dataset, SystemParams(dataset.n, f, dataset.num_classes),
                                     self.settings.tie_quantum)
        ratio = batch_margin_ratio(dataset)
        cwtm = self.build_aggregators([SOUNDNESS_RULE], f, dataset.n)[SOUNDNESS_RULE]
        run = self.predictions(dataset, cwtm, CURVE_ATTACKS, f, seed_index)
        errors = [100.0 - accuracy(row, dataset.labels) for row in run.attacked]
        ensemble = np.argmax(dataset.probits.mean(axis=1), axis=-1)
        return {
            "ratio": ratio,
            "error": max(errors),
            "clean_error": 100.0 - accuracy(ensemble, dataset.labels),
            "certified_fraction": summary["certified_fraction"],
        }

    def margin_error_curve(self, f_values: Sequence[int], alpha_values: Sequence[float],
                           seeds: int) -> pd.DataFrame:
        """One row per (alpha, f): mean ratio and CWTM error over ``seeds`` generated datasets."""
        rows = []
        for alpha in alpha_values:
            datasets = [
                generate_synthetic(self.settings.synthetic_spec(alpha=alpha, seed=self.settings.seed + s))
                for s in range(seeds)
            ]
            for f in f_values:
                points = [self.margin_error_point(ds, f, s) for s, ds in enumerate(datasets)]
                errors = np.array([p["error"] for p in points])
                rows.append({
                    "alpha": alpha,
                    "f": f,
                    "ratio": float(np.mean([p["ratio"] for p in points])),
                    "error": float(errors.mean()),
                    "error_std": float(errors.std()),
                    "clean_error": float(np.mean([p["clean_error"] for p in points])),
                    "certified_fraction": float(np.mean([p["certified_fraction"] for p in points])),
                })
                logger.info(f"📈 alpha={alpha} f={f}: ratio {rows[-1]['ratio']:.3f}, "
                            f"error {rows[-1]['error']:.2f}%")
        return pd.DataFrame(rows)


def batch_margin_ratio(dataset: ProbitDataset) -> float:
    """Mean of margin(mean probit) / sigma_x over panels with a finite ratio; inf if none."""
    columns = certify_batch(dataset.probits, 0)
    margins, sigma = columns["margin"], columns["sigma_x"]
    finite = np.isfinite(margins) & (sigma > 0)
    if not np.any(finite):
        return float("inf")
    return float(np.mean(margins[finite] / sigma[finite]))


def _cell(aggregator: str, attack: str, f: int, accuracies: List[float]) -> CellResult:
    values = np.asarray(accuracies, dtype=float)
    return CellResult(aggregator=aggregator, attack=attack, f=f, accuracies=values.tolist(),
                      mean=float(values.mean()), std=float(values.std()))


def evaluate(dataset: ProbitDataset, aggregators: Sequence[str], attacks: Sequence[AttackKind],
             params: SystemParams, seeds: int, settings: Optional[Settings] = None,
             models: Optional[Dict[str, DeepSetModel]] = None) -> EvalReport:
    """Single-f evaluation of ``aggregators`` against ``attacks`` over ``seeds`` seeds."""
    if dataset.n != params.n or dataset.num_classes != params.K:
        raise ValidationError("dataset shape does not match the system parameters")
    return EvaluationService(settings, models).evaluate(dataset, aggregators, attacks,
                                                        [params.f], seeds, explicit_attacks=True)


def estimate_robustness_gap(dataset: ProbitDataset, robust: str, oracle: str,
                            attacks: Sequence[AttackKind], f: int,
                            settings: Optional[Settings] = None,
                            models: Optional[Dict[str, DeepSetModel]] = None) -> float:
    return EvaluationService(settings, models).estimate_robustness_gap(dataset, robust, oracle,
                                                                       attacks, f)
