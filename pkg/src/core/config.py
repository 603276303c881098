"""
Configuration management using Pydantic Settings.

Precedence, lowest first: field defaults, ``RFI_*`` environment variables,
``.env``, the ``--config`` key-value file, explicit overrides (CLI flags).
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import dotenv_values
from pydantic import Field, ValidationError as PydanticValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ValidationError
from .models import (
    AdversaryPolicy,
    AggregatorKind,
    AttackConfig,
    AttackKind,
    SyntheticSpec,
    SystemParams,
    TrainConfig,
)

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """Toolkit settings with validation."""

    model_config = SettingsConfigDict(
        env_prefix="RFI_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    seed: int = Field(0, ge=0)

    # System
    n_clients: int = Field(17, ge=1)
    num_adversaries: int = Field(4, ge=0)
    num_classes: int = Field(10, ge=2)

    # Synthetic generator
    alpha: float = Field(0.5, gt=0)
    samples: int = Field(2000, ge=1)
    skill: float = Field(4.0, ge=0)
    noise: float = Field(1.0, ge=0)
    temperature_spread: float = Field(0.25, ge=0)
    exposure_floor: float = Field(0.1, ge=0)
    embedding_dim: int = Field(16, ge=1)
    ambiguity: float = Field(0.2, ge=0, le=1)

    # Margin / certificate
    tie_quantum: float = Field(1e-12, gt=0)

    # Geometric median
    gm_tol: float = Field(1e-9, gt=0)
    gm_max_iter: int = Field(1000, ge=1)
    gm_floor: float = Field(1e-12, gt=0)

    # Randomized ablation
    ra_rounds: int = Field(100, ge=1)
    ra_inner_trim: Optional[int] = Field(None, ge=0)

    # Attacks
    attacks: str = "all"
    amplification: float = Field(2.0, gt=0)
    pgd_steps: int = Field(50, ge=0)
    pgd_step_size: float = Field(0.05, gt=0)
    pgd_loss: str = "cw"
    adversary_policy: str = AdversaryPolicy.PER_QUERY.value

    # DeepSet architecture
    hidden_width: int = Field(128, ge=1)
    embedding_width: int = Field(64, ge=1)

    # Adversarial training
    train_steps: Optional[int] = Field(None, ge=1)
    train_epochs: float = Field(5.0, gt=0)
    samples_per_batch: int = Field(300, ge=1)
    fgsm_step: float = Field(0.05, gt=0)
    adv_steps: int = Field(50, ge=1)
    learning_rate: float = Field(5e-5, gt=0)
    batch_size: int = Field(64, ge=1)
    shared_draws: bool = True
    log_every: int = Field(10, ge=1)

    # Evaluation
    aggregators: str = "mean,cwtm,cwmed,gm,deepset-tm"
    oracle: str = "mean"
    eval_seeds: int = Field(5, ge=1)

    # Logging
    log_level: str = "INFO"
    log_file: Optional[str] = None

    @model_validator(mode="after")
    def _check_adversary_bound(self) -> "Settings":
        if 2 * self.num_adversaries >= self.n_clients:
            raise ValueError(
                f"need 2f < n, got n_clients={self.n_clients}, "
                f"num_adversaries={self.num_adversaries}"
            )
        if self.pgd_loss not in ("cw", "ce"):
            raise ValueError(f"pgd_loss must be 'cw' or 'ce', got '{self.pgd_loss}'")
        AdversaryPolicy(self.adversary_policy)
        AggregatorKind.parse(self.oracle)
        return self

    def system_params(self, f: Optional[int] = None) -> SystemParams:
        return SystemParams(
            n=self.n_clients,
            f=self.num_adversaries if f is None else f,
            K=self.num_classes,
        )

    def synthetic_spec(self, alpha: Optional[float] = None,
                       seed: Optional[int] = None) -> SyntheticSpec:
        return SyntheticSpec(
            n=self.n_clients,
            K=self.num_classes,
            alpha=self.alpha if alpha is None else alpha,
            samples=self.samples,
            skill=self.skill,
            noise=self.noise,
            temperature_spread=self.temperature_spread,
            exposure_floor=self.exposure_floor,
            embedding_dim=self.embedding_dim,
            ambiguity=self.ambiguity,
            seed=self.seed if seed is None else seed,
        )

    def attack_config(self, kind: AttackKind, similarity=None) -> AttackConfig:
        return AttackConfig(
            kind=kind,
            amplification=self.amplification,
            pgd_steps=self.pgd_steps,
            pgd_step_size=self.pgd_step_size,
            similarity=similarity,
            pgd_loss=self.pgd_loss,
        )

    def train_config(self, f: Optional[int] = None) -> TrainConfig:
        return TrainConfig(
            f=self.num_adversaries if f is None else f,
            steps=self.train_steps,
            epochs=self.train_epochs,
            samples_per_batch=self.samples_per_batch,
            fgsm_step=self.fgsm_step,
            adv_steps=self.adv_steps,
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            seed=self.seed,
            shared_draws=self.shared_draws,
            log_every=self.log_every,
        )

    @property
    def policy(self) -> AdversaryPolicy:
        return AdversaryPolicy(self.adversary_policy)


def read_config_file(path: str) -> Dict[str, str]:
    """Read a flat ``key=value`` file; keys must name Settings fields."""
    config_path = Path(path)
    if not config_path.is_file():
        raise ValidationError(f"config file not found: {path}")
    raw = dotenv_values(config_path)
    values: Dict[str, str] = {}
    for key, value in raw.items():
        name = key.strip().lower()
        if name not in Settings.model_fields:
            raise ValidationError(f"unknown config key '{key}' in {path}")
        if value is not None and value != "":
            values[name] = value
    logger.info(f"📋 Loaded {len(values)} settings from {path}")
    return values


def load_settings(config_path: Optional[str] = None,
                  overrides: Optional[Dict[str, Any]] = None) -> Settings:
    """Build Settings from an optional config file plus explicit overrides."""
    values: Dict[str, Any] = read_config_file(config_path) if config_path else {}
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return Settings(**values)
    except PydanticValidationError as e:
        raise ValidationError(f"invalid settings: {e}") from e
