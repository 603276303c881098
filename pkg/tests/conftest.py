"""
Pytest configuration and shared fixtures.
"""

import os
import shutil
import sys
import tempfile
from pathlib import Path
from typing import Generator

import numpy as np
import pytest

# Add the project root to the Python path so ``src`` imports resolve
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.core.config import Settings
from src.core.models import ProbitDataset, SyntheticSpec
from src.core.nn.deepset import DeepSetModel
from src.core.simplex import softmax
from src.services.synthetic_service import generate_synthetic


@pytest.fixture(autouse=True)
def isolated_env(monkeypatch, tmp_path):
    """Keep RFI_* variables and a stray .env out of settings-dependent tests."""
    for key in list(os.environ):
        if key.upper().startswith("RFI_"):
            monkeypatch.delenv(key, raising=False)
    monkeypatch.chdir(tmp_path)


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """Create a temporary directory for test files."""
    temp_path = Path(tempfile.mkdtemp())
    yield temp_path
    shutil.rmtree(temp_path, ignore_errors=True)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def settings() -> Settings:
    """Small, fast settings for service-level tests."""
    return Settings(
        n_clients=9,
        num_adversaries=2,
        num_classes=5,
        samples=40,
        alpha=1.0,
        pgd_steps=5,
        eval_seeds=2,
        ra_rounds=5,
        hidden_width=16,
        embedding_width=8,
    )


@pytest.fixture
def small_dataset() -> ProbitDataset:
    """80 synthetic panels with n=9 clients and K=5 classes."""
    return generate_synthetic(SyntheticSpec(n=9, K=5, alpha=1.0, samples=80, seed=3))


@pytest.fixture
def identical_dataset() -> ProbitDataset:
    """30 panels whose 9 clients all report the same probit vector."""
    generator = np.random.default_rng(7)
    rows = softmax(3.0 * generator.standard_normal((30, 5)))
    return ProbitDataset(
        probits=np.repeat(rows[:, None, :], 9, axis=1),
        labels=np.argmax(rows, axis=-1),
        input_ids=tuple(f"same-{i}" for i in range(30)),
        similarity=np.eye(5),
        seed=7,
    )


@pytest.fixture
def tiny_model() -> DeepSetModel:
    """Untrained DeepSet for K=5."""
    return DeepSetModel.init(5, np.random.default_rng(0), p=8, hidden=16)
