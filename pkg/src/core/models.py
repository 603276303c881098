"""
Data models and types for the robust federated inference toolkit.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import ValidationError

SIMPLEX_TOLERANCE = 1e-9


def _frozen_array(values, dtype=float) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


def check_simplex_rows(rows: np.ndarray, tolerance: float = SIMPLEX_TOLERANCE) -> None:
    """Raise ValidationError unless every row along the last axis lies on the simplex."""
    if not np.all(np.isfinite(rows)):
        raise ValidationError("probit rows must be finite")
    if np.any(rows < 0.0) or np.any(rows > 1.0):
        raise ValidationError("probit entries must lie in [0, 1]")
    deviation = np.abs(rows.sum(axis=-1) - 1.0)
    if np.any(deviation > tolerance):
        raise ValidationError(
            f"probit rows must sum to 1 (max deviation {float(deviation.max()):.3e})"
        )


@dataclass(frozen=True)
class ProbitVector:
    """One client's class-probability vector for one input."""
    values: np.ndarray

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.ndim != 1 or values.size < 1:
            raise ValidationError("a probit vector must be a non-empty 1-D array")
        check_simplex_rows(values)
        object.__setattr__(self, "values", values)

    @property
    def num_classes(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class ProbitPanel:
    """The n x K matrix of client probits for one input, with its true label."""
    probits: np.ndarray
    label: int
    input_id: str = ""

    def __post_init__(self):
        probits = _frozen_array(self.probits)
        if probits.ndim != 2 or probits.shape[0] < 1 or probits.shape[1] < 1:
            raise ValidationError("a panel must be an (n, K) matrix with n >= 1")
        check_simplex_rows(probits)
        label = int(self.label)
        if not 0 <= label < probits.shape[1]:
            raise ValidationError(f"label {label} outside [0, {probits.shape[1]})")
        object.__setattr__(self, "probits", probits)
        object.__setattr__(self, "label", label)

    @property
    def n(self) -> int:
        return int(self.probits.shape[0])

    @property
    def num_classes(self) -> int:
        return int(self.probits.shape[1])


@dataclass(frozen=True)
class SystemParams:
    """Client count n, adversary bound f and class count K."""
    n: int
    f: int
    K: int

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"n must be positive, got {self.n}")
        if self.f < 0 or 2 * self.f >= self.n:
            raise ValidationError(f"need 0 <= f and 2f < n, got n={self.n}, f={self.f}")
        if self.K < 2:
            raise ValidationError(f"K must be at least 2, got {self.K}")


@dataclass
class ProbitDataset:
    """A stack of panels sharing n and K: probits has shape (N, n, K)."""
    probits: np.ndarray
    labels: np.ndarray
    input_ids: Tuple[str, ...]
    similarity: Optional[np.ndarray] = None
    seed: Optional[int] = None
    renormalized_rows: int = 0

    def __post_init__(self):
        self.probits = np.asarray(self.probits, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.input_ids = tuple(str(i) for i in self.input_ids)
        if self.probits.ndim != 3:
            raise ValidationError("dataset probits must have shape (N, n, K)")
        count = self.probits.shape[0]
        if self.labels.shape != (count,) or len(self.input_ids) != count:
            raise ValidationError("labels and input ids must match the panel count")
        if count and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ValidationError("dataset labels outside [0, K)")
        if self.similarity is not None:
            self.similarity = np.asarray(self.similarity, dtype=float)

    def __len__(self) -> int:
        return int(self.probits.shape[0])

    @property
    def n(self) -> int:
        return int(self.probits.shape[1])

    @property
    def num_classes(self) -> int:
        return int(self.probits.shape[2])

    def panel(self, index: int) -> ProbitPanel:
        return ProbitPanel(self.probits[index], int(self.labels[index]), self.input_ids[index])

    def subset(self, indices: Sequence[int]) -> "ProbitDataset":
        indices = np.asarray(indices, dtype=np.int64)
        return ProbitDataset(
            probits=self.probits[indices],
            labels=self.labels[indices],
            input_ids=tuple(self.input_ids[i] for i in indices),
            similarity=self.similarity,
            seed=self.seed,
        )

    def with_probits(self, probits: np.ndarray) -> "ProbitDataset":
        """Same labels and ids, different client rows (used for corrupted copies)."""
        return ProbitDataset(
            probits=probits,
            labels=self.labels.copy(),
            input_ids=self.input_ids,
            similarity=self.similarity,
            seed=self.seed,
            renormalized_rows=self.renormalized_rows,
        )


class AggregatorName(Enum):
    """Aggregation rule variants."""
    MEAN = "mean"
    CWTM = "cwtm"
    CWMED = "cwmed"
    GM = "gm"
    DEEPSET = "deepset"
    DEEPSET_TM = "deepset-tm"
    RANDOMIZED_ABLATION = "ra"


STATIC_AGGREGATORS = (
    AggregatorName.MEAN, AggregatorName.CWTM, AggregatorName.CWMED, AggregatorName.GM
)
DEFAULT_MODEL_NAME = "default"


@dataclass(frozen=True)
class AggregatorKind:
    """An aggregation rule, possibly wrapped in randomized ablation."""
    variant: AggregatorName
    inner: Optional["AggregatorKind"] = None
    rounds: Optional[int] = None
    inner_trim: Optional[int] = None
    model_name: str = DEFAULT_MODEL_NAME

    def __post_init__(self):
        if self.variant is AggregatorName.RANDOMIZED_ABLATION:
            if self.inner is None:
                raise ValidationError("randomized ablation needs an inner rule")
            if self.inner.variant is AggregatorName.RANDOMIZED_ABLATION:
                raise ValidationError("randomized ablation cannot wrap randomized ablation")
            if self.rounds is None or self.rounds < 1:
                raise ValidationError("randomized ablation rounds must be positive")
        elif self.inner is not None:
            raise ValidationError(f"{self.variant.value} takes no inner rule")

    @property
    def is_static(self) -> bool:
        return self.variant in STATIC_AGGREGATORS

    @property
    def uses_model(self) -> bool:
        if self.variant is AggregatorName.RANDOMIZED_ABLATION:
            return self.inner.uses_model
        return self.variant in (AggregatorName.DEEPSET, AggregatorName.DEEPSET_TM)

    @property
    def label(self) -> str:
        if self.variant is AggregatorName.RANDOMIZED_ABLATION:
            return f"ra-{self.inner.label}"
        if self.uses_model and self.model_name != DEFAULT_MODEL_NAME:
            return f"{self.variant.value}@{self.model_name}"
        return self.variant.value

    @classmethod
    def parse(cls, text: str, rounds: int = 100,
              inner_trim: Optional[int] = None) -> "AggregatorKind":
        """Parse labels such as ``cwtm``, ``ra-cwmed`` or ``deepset-tm@clean``."""
        text = text.strip().lower()
        if text.startswith("ra-"):
            inner = cls.parse(text[3:], rounds=rounds)
            return cls(AggregatorName.RANDOMIZED_ABLATION, inner=inner, rounds=rounds,
                       inner_trim=inner_trim)
        name, _, model_name = text.partition("@")
        try:
            variant = AggregatorName(name)
        except ValueError:
            known = ", ".join(v.value for v in AggregatorName if v.value != "ra")
            raise ValidationError(f"unknown aggregator '{text}' (known: {known}, ra-<rule>)")
        if model_name and variant not in (AggregatorName.DEEPSET, AggregatorName.DEEPSET_TM):
            raise ValidationError(f"only DeepSet aggregators take a model name: '{text}'")
        return cls(variant, model_name=model_name or DEFAULT_MODEL_NAME)


@dataclass(frozen=True)
class Certificate:
    """Margin-based robustness certificate for the CWTM robust-argmax scheme."""
    margin_value: float
    sigma_x: float
    kappa: float
    bound: float
    certified: bool
    degenerate: bool = False


@dataclass(frozen=True)
class FkRobustnessReport:
    """Outcome of an (f, kappa)-robustness check over subsets of size n - f."""
    holds: bool
    max_ratio: float
    witness: Tuple[int, ...]
    subsets_checked: int
    sampled: bool = False


@dataclass(frozen=True)
class GeometricMedianResult:
    """Weiszfeld solution with its convergence status."""
    point: np.ndarray
    converged: bool
    iterations: int


class AttackKind(Enum):
    """The six-attack evaluation suite."""
    LOGIT_FLIPPING = "logit-flipping"
    SIA_BLACK_BOX = "sia-bb"
    SIA_WHITE_BOX = "sia-wb"
    LMA = "lma"
    CPA = "cpa"
    PGD_CW = "pgd-cw"

    @property
    def black_box(self) -> bool:
        return self in (AttackKind.LOGIT_FLIPPING, AttackKind.SIA_BLACK_BOX)


class AdversaryPolicy(Enum):
    """How adversary index sets are drawn across panels."""
    FIXED = "fixed"
    PER_QUERY = "per-query"


@dataclass(frozen=True)
class AttackConfig:
    """Attack selection and budgets."""
    kind: AttackKind
    amplification: float = 2.0
    pgd_steps: int = 50
    pgd_step_size: float = 0.05
    similarity: Optional[np.ndarray] = None
    pgd_loss: str = "cw"

    def __post_init__(self):
        if not self.amplification > 0:
            raise ValidationError("amplification must be positive")
        if self.pgd_steps < 0:
            raise ValidationError("pgd_steps must be non-negative")
        if self.pgd_loss not in ("cw", "ce"):
            raise ValidationError(f"pgd_loss must be 'cw' or 'ce', got '{self.pgd_loss}'")
        if self.similarity is not None:
            matrix = _frozen_array(self.similarity)
            if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
                raise ValidationError("similarity matrix must be square")
            if not np.allclose(matrix, matrix.T, atol=1e-9):
                raise ValidationError("similarity matrix must be symmetric")
            if not np.allclose(np.diag(matrix), 1.0, atol=1e-9):
                raise ValidationError("similarity matrix must have a unit diagonal")
            object.__setattr__(self, "similarity", matrix)


@dataclass(frozen=True)
class CorruptedPanel:
    """A panel with adversary rows replaced; honest rows are bit-equal to the source."""
    probits: np.ndarray
    adversary_set: Tuple[int, ...]
    label: int
    input_id: str = ""


@dataclass(frozen=True)
class TrainConfig:
    """Adversarial training hyperparameters."""
    f: int
    steps: Optional[int] = None
    epochs: float = 5.0
    samples_per_batch: int = 300
    fgsm_step: float = 0.05
    adv_steps: int = 50
    learning_rate: float = 5e-5
    batch_size: int = 64
    seed: int = 0
    shared_draws: bool = True
    log_every: int = 10

    def __post_init__(self):
        if self.samples_per_batch < 1:
            raise ValidationError("samples_per_batch (N) must be at least 1")
        if self.adv_steps < 1:
            raise ValidationError("adv_steps (S) must be at least 1")
        if self.steps is not None and self.steps < 1:
            raise ValidationError("steps (E) must be at least 1")
        if self.steps is None and not self.epochs > 0:
            raise ValidationError("epochs must be positive when steps is unset")
        if self.batch_size < 1 or self.f < 0:
            raise ValidationError("batch_size must be positive and f non-negative")

    def total_steps(self, dataset_size: int) -> int:
        if self.steps is not None:
            return self.steps
        return max(1, math.ceil(self.epochs * dataset_size / self.batch_size))


@dataclass
class TrainingTrace:
    """Per-step losses recorded during training."""
    steps: List[int] = field(default_factory=list)
    clean_loss: List[float] = field(default_factory=list)
    adversarial_loss: List[float] = field(default_factory=list)

    def append(self, step: int, clean_loss: float, adversarial_loss: float) -> None:
        self.steps.append(step)
        self.clean_loss.append(clean_loss)
        self.adversarial_loss.append(adversarial_loss)

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class SyntheticSpec:
    """Knobs of the synthetic client-probit generator."""
    n: int
    K: int
    alpha: float
    samples: int
    skill: float = 4.0
    noise: float = 1.0
    temperature_spread: float = 0.25
    exposure_floor: float = 0.1
    embedding_dim: int = 16
    ambiguity: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValidationError("alpha must be positive")
        if self.samples < 1:
            raise ValidationError("samples must be at least 1")
        if self.n < 1 or self.K < 2:
            raise ValidationError("need n >= 1 and K >= 2")
        if self.noise < 0 or self.skill < 0 or self.temperature_spread < 0:
            raise ValidationError("skill, noise and temperature spread must be non-negative")
        if not 0.0 <= self.ambiguity <= 1.0:
            raise ValidationError("ambiguity must be in [0, 1]")
