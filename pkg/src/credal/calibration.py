"""
Split-conformal calibration on plausibility-annotated data.

Each calibration example carries the classifier's probabilities p(x) and an
annotated plausibility vector lambda. Per-label conformity scores E(x, k)
(by default the model probability itself) are averaged under lambda to give
the plausibility score e(x, lambda) = sum_k lambda_k E(x, k); the threshold
tau is the floor(alpha (n + 1))-th smallest calibration score.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from src.credal.simplex import ProbabilityVector, check_dimensions
from src.data.models import CalibrationRecord
from src.utils.exceptions import DimensionMismatch, EmptyCalibration, ValidationError

logger = logging.getLogger(__name__)

# Guards floor(alpha * (n + 1)) against products like 0.29 * 100 = 28.999999999999996.
_INDEX_SLACK = 1e-9


@dataclass(frozen=True)
class ConformityScores:
    """Per-label conformity scores E(x, k) for one input."""

    per_label: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.per_label)
        if not all(math.isfinite(v) for v in values):
            raise ValidationError("conformity scores must be finite")
        object.__setattr__(self, 'per_label', values)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.per_label, dtype=float)

    def __len__(self) -> int:
        return len(self.per_label)


@dataclass(frozen=True)
class CalibratedThreshold:
    """The conformal threshold tau together with how it was obtained."""

    tau: float
    alpha: float
    n_calibration: int
    k_index: int
    conformity: str = "identity"
    score_trace: Optional[Tuple[float, ...]] = None

    @property
    def is_vacuous(self) -> bool:
        """True when tau is the -inf sentinel (the region is the whole simplex)."""
        return self.tau == float('-inf')


ConformityFunction = Callable[[ProbabilityVector], np.ndarray]


def _identity_conformity(model_probs: ProbabilityVector) -> np.ndarray:
    return model_probs.array


CONFORMITY_FUNCTIONS: Dict[str, ConformityFunction] = {
    "identity": _identity_conformity,
}


def register_conformity(name: str, function: ConformityFunction):
    """Make an alternative conformity function available by name."""
    CONFORMITY_FUNCTIONS[name] = function


def conformity_scores(model_probs: ProbabilityVector, conformity: str = "identity") -> ConformityScores:
    """E(x, k) for every label; higher means more conformal."""
    try:
        function = CONFORMITY_FUNCTIONS[conformity]
    except KeyError:
        raise ValidationError(f"unknown conformity function '{conformity}'; "
                              f"available: {sorted(CONFORMITY_FUNCTIONS)}")
    scores = np.asarray(function(model_probs), dtype=float)
    if scores.shape != (model_probs.k,):
        raise DimensionMismatch(f"conformity '{conformity}' returned shape {scores.shape}")
    return ConformityScores(tuple(scores.tolist()))


def plausibility_score(scores: ConformityScores, lam: ProbabilityVector) -> float:
    """e(x, lambda) = sum_k lambda_k E_k."""
    check_dimensions(scores.per_label, lam.entries)
    return float(np.dot(lam.array, scores.array))


def quantile_index(alpha: float, n: int) -> int:
    """floor(alpha (n + 1)), clamped to n."""
    k = int(math.floor(alpha * (n + 1) + _INDEX_SLACK))
    return min(max(k, 0), n)


def calibration_scores(records: Sequence[CalibrationRecord], conformity: str = "identity") -> np.ndarray:
    """Plausibility scores e_i of the calibration records, in record order."""
    if not records:
        raise EmptyCalibration("calibration needs at least one record")
    k_count = records[0].k
    scores = np.empty(len(records))
    for i, record in enumerate(records):
        if record.k != k_count:
            raise DimensionMismatch(f"record {record.id} has {record.k} classes, expected {k_count}")
        if record.plausibility is None:
            raise ValidationError(f"record {record.id} has no plausibility vector")
        scores[i] = plausibility_score(conformity_scores(record.model_probs, conformity), record.plausibility)
    return scores


def calibrate(records: Sequence[CalibrationRecord], alpha: float, conformity: str = "identity",
              keep_trace: bool = True) -> CalibratedThreshold:
    """
    Compute the conformal threshold tau at level alpha.

    Under exchangeability a new example satisfies e >= tau with probability
    at least 1 - alpha. When floor(alpha (n + 1)) is 0 the threshold is -inf.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError(f"alpha must lie in [0, 1], got {alpha}")
    scores = calibration_scores(records, conformity)
    n = scores.size
    k = quantile_index(alpha, n)
    sorted_scores = np.sort(scores, kind='stable')
    tau = float(sorted_scores[k - 1]) if k >= 1 else float('-inf')

    logger.info(f"Calibrated on {n} records: alpha={alpha}, k={k}, tau={tau:.6g}")
    return CalibratedThreshold(
        tau=tau,
        alpha=float(alpha),
        n_calibration=n,
        k_index=k,
        conformity=conformity,
        score_trace=tuple(sorted_scores.tolist()) if keep_trace else None,
    )
