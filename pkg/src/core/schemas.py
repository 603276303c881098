"""
Pydantic schemas for evaluation reports.
"""

from typing import Dict, List, Optional

from pydantic import BaseModel, Field

REPORT_VERSION = 1
CLEAN_COLUMN = "none"


class CellResult(BaseModel):
    """Accuracy of one aggregator under one attack at one adversary count."""
    aggregator: str
    attack: str
    f: int
    accuracies: List[float] = Field(..., description="Accuracy (%) per seed")
    mean: float
    std: float = Field(..., description="Population standard deviation over seeds")


class AggregatorSummary(BaseModel):
    """Clean and worst-case accuracy of one aggregator at one adversary count."""
    aggregator: str
    f: int
    clean_accuracy: float
    worst_case: float
    worst_attack: str
    robust_risk: float = Field(..., description="1 - worst_case / 100, a suite-relative lower bound")


class GapEstimate(BaseModel):
    """Robustness-gap estimate against the oracle aggregator, averaged over seeds."""
    aggregator: str
    oracle: str
    f: int
    gap: float = Field(..., ge=0.0, le=1.0)
    oracle_error: float
    robust_risk: float = Field(..., description="Per-panel worst case over the attack suite")
    slack: float = Field(..., description="oracle_error + gap - robust_risk (never negative)")


class CertificateSummary(BaseModel):
    """Certificate statistics of the clean panels for the CWTM scheme."""
    f: int
    panels: int
    certified_fraction: float
    degenerate: int
    soundness_violations: int
    margin_quantiles: Dict[str, float]
    sigma_quantiles: Dict[str, float]
    ratio_quantiles: Dict[str, float]


class EvalReport(BaseModel):
    """Full evaluation report; serialized without timestamps so reruns are byte-identical."""
    version: int = REPORT_VERSION
    seed: int
    seeds: int
    n: int
    num_classes: int
    panels: int
    f_values: List[int]
    aggregators: List[str]
    attacks: List[str]
    oracle: str
    adversary_policy: str
    renormalized_rows: int = 0
    cells: List[CellResult]
    summaries: List[AggregatorSummary]
    gaps: List[GapEstimate]
    certificates: List[CertificateSummary]
    notes: List[str] = Field(default_factory=list)

    def worst_case(self, aggregator: str, f: int) -> Optional[float]:
        for summary in self.summaries:
            if summary.aggregator == aggregator and summary.f == f:
                return summary.worst_case
        return None

    def cell(self, aggregator: str, attack: str, f: int) -> Optional[CellResult]:
        for cell in self.cells:
            if (cell.aggregator, cell.attack, cell.f) == (aggregator, attack, f):
                return cell
        return None
