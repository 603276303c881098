"""
Exception hierarchy for the robust federated inference toolkit.
"""

from typing import Any, Optional


class RobustInferenceError(Exception):
    """Base exception for the toolkit."""
    pass


class ValidationError(RobustInferenceError):
    """Invariant or precondition violation in user-supplied data or settings."""
    pass


class DatasetFormatError(ValidationError):
    """Panel or similarity file could not be parsed."""

    def __init__(self, message: str, line_number: Optional[int] = None,
                 panel_id: Optional[str] = None):
        self.line_number = line_number
        self.panel_id = panel_id
        location = []
        if line_number is not None:
            location.append(f"line {line_number}")
        if panel_id is not None:
            location.append(f"panel {panel_id}")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")


class EnumerationLimitError(ValidationError):
    """Exhaustive subset enumeration would exceed the configured client cap."""
    pass


class AttackError(RobustInferenceError):
    """An attack produced an invalid corruption or a non-finite gradient."""
    pass


class TrainingDivergedError(RobustInferenceError):
    """Training loss became non-finite."""

    def __init__(self, message: str, trace: Any = None):
        self.trace = trace
        super().__init__(message)


class MissingModelError(RobustInferenceError):
    """A DeepSet aggregator was requested without a trained model."""
    pass
