"""
Report persistence: EvalReport JSON plus CSV tables written with pandas.
"""

import logging
from pathlib import Path
from typing import Dict

import pandas as pd

from ..core.exceptions import ValidationError
from ..core.models import TrainingTrace
from ..core.schemas import EvalReport
from .base import FileRepository, PathLike

logger = logging.getLogger(__name__)

REPORT_FILE = "report.json"
CELLS_FILE = "cells.csv"
SUMMARY_FILE = "summary.csv"


class ReportRepository(FileRepository[EvalReport]):
    """EvalReport as indented JSON."""

    def save(self, report: EvalReport, path: PathLike) -> Path:
        target = self._prepare(path)
        target.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
        return target

    def load(self, path: PathLike) -> EvalReport:
        source = Path(path)
        if not source.is_file():
            raise ValidationError(f"report not found: {path}")
        return EvalReport.model_validate_json(source.read_text(encoding="utf-8"))


def cells_frame(report: EvalReport) -> pd.DataFrame:
    """One row per (aggregator, attack, f) cell with per-seed accuracies."""
    rows = []
    for cell in report.cells:
        row = {"aggregator": cell.aggregator, "attack": cell.attack, "f": cell.f,
               "mean": cell.mean, "std": cell.std}
        row.update({f"seed_{i}": acc for i, acc in enumerate(cell.accuracies)})
        rows.append(row)
    return pd.DataFrame(rows)


def summary_frame(report: EvalReport) -> pd.DataFrame:
    return pd.DataFrame([s.model_dump() for s in report.summaries])


def write_frame(frame: pd.DataFrame, path: PathLike) -> Path:
    target = FileRepository._prepare(path)
    frame.to_csv(target, index=False)
    logger.info(f"💾 Wrote {len(frame)} rows to {target}")
    return target


def write_report(report: EvalReport, out_dir: PathLike) -> Dict[str, Path]:
    """Write report.json, cells.csv and summary.csv under ``out_dir``."""
    out = Path(out_dir)
    written = {
        "report": ReportRepository().save(report, out / REPORT_FILE),
        "cells": write_frame(cells_frame(report), out / CELLS_FILE),
        "summary": write_frame(summary_frame(report), out / SUMMARY_FILE),
    }
    logger.info(f"✅ Report written to {out}")
    return written


def trace_frame(trace: TrainingTrace) -> pd.DataFrame:
    return pd.DataFrame({
        "step": trace.steps,
        "clean_loss": trace.clean_loss,
        "adversarial_loss": trace.adversarial_loss,
    })
