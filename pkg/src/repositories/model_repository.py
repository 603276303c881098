"""
DeepSet checkpoints as deterministic JSON (sorted keys, exact float repr).
"""

import json
import logging
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from ..core.exceptions import DatasetFormatError, ValidationError
from ..core.nn.deepset import DeepSetModel
from ..core.nn.layers import Mlp2
from .base import FileRepository, PathLike

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "rfi-deepset"
CHECKPOINT_VERSION = 1


class ModelRepository(FileRepository[DeepSetModel]):
    """Version 1 container: dimensions, seed and every weight block."""

    def save(self, model: DeepSetModel, path: PathLike, seed: Optional[int] = None) -> Path:
        target = self._prepare(path)
        document = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "seed": seed,
            "num_classes": model.num_classes,
            "embedding_width": model.p,
            "hidden_width": model.hidden,
            "parameters": {name: block.tolist() for name, block in model.parameters().items()},
        }
        target.write_text(json.dumps(document, sort_keys=True) + "\n", encoding="utf-8")
        logger.info(f"💾 Saved DeepSet checkpoint to {target}")
        return target

    def load(self, path: PathLike) -> DeepSetModel:
        return self.load_with_seed(path)[0]

    def load_with_seed(self, path: PathLike) -> Tuple[DeepSetModel, Optional[int]]:
        source = Path(path)
        if not source.is_file():
            raise ValidationError(f"checkpoint not found: {path}")
        try:
            document = json.loads(source.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise DatasetFormatError(f"checkpoint is not valid JSON: {e.msg}", e.lineno) from e
        if document.get("format") != CHECKPOINT_FORMAT:
            raise ValidationError(f"{path} is not a DeepSet checkpoint")
        if document.get("version") != CHECKPOINT_VERSION:
            raise ValidationError(f"unsupported checkpoint version {document.get('version')}")
        params: Dict[str, np.ndarray] = {
            name: np.asarray(block, dtype=float) for name, block in document["parameters"].items()
        }
        try:
            model = DeepSetModel(rho=Mlp2.from_parameters(params, "rho."),
                                 mu=Mlp2.from_parameters(params, "mu."))
        except (KeyError, ValueError) as e:
            raise ValidationError(f"checkpoint has a missing or malformed parameter block: {e}") from e
        if model.num_classes != document["num_classes"] or model.p != document["embedding_width"]:
            raise ValidationError("checkpoint dimensions disagree with its weight blocks")
        logger.info(f"📂 Loaded DeepSet checkpoint {source} (K={model.num_classes}, p={model.p})")
        return model, document.get("seed")


def save_checkpoint(model: DeepSetModel, path: PathLike, seed: Optional[int] = None) -> Path:
    return ModelRepository().save(model, path, seed)


def load_checkpoint(path: PathLike) -> DeepSetModel:
    return ModelRepository().load(path)
