"""
Dataset record models.

A record is one example: the classifier's class probabilities, optionally the
annotated plausibility vector lambda and optionally a realized crisp label.
Calibration needs lambda; prediction only needs the model probabilities.
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional

from src.credal.simplex import LabelSpace, ProbabilityVector
from src.utils.exceptions import DimensionMismatch, ValidationError


@dataclass(frozen=True)
class CalibrationRecord:
    """One example's model probabilities and (optional) plausibility vector."""

    id: str
    model_probs: ProbabilityVector
    plausibility: Optional[ProbabilityVector] = None
    label: Optional[int] = None

    def __post_init__(self):
        if self.plausibility is not None and self.plausibility.k != self.model_probs.k:
            raise DimensionMismatch(
                f"record {self.id}: model_probs has {self.model_probs.k} entries, "
                f"plausibility has {self.plausibility.k}")
        if self.label is not None and not 0 <= self.label < self.model_probs.k:
            raise ValidationError(f"record {self.id}: label {self.label} outside 0..{self.k - 1}")

    @property
    def k(self) -> int:
        return self.model_probs.k

    def to_dict(self) -> Dict[str, Any]:
        """Row layout of the dataset file."""
        row: Dict[str, Any] = {'id': self.id, 'model_probs': list(self.model_probs.entries)}
        if self.plausibility is not None:
            row['plausibility'] = list(self.plausibility.entries)
        if self.label is not None:
            row['label'] = int(self.label)
        return row


@dataclass(frozen=True)
class DatasetHeader:
    """First line of a dataset file."""

    label_space: LabelSpace
    schema: str = "credal-v1"

    def to_dict(self) -> Dict[str, Any]:
        header: Dict[str, Any] = {'schema': self.schema, 'k': self.label_space.k_count}
        if self.label_space.names is not None:
            header['names'] = list(self.label_space.names)
        return header
