"""
Imprecise highest-density prediction sets.

Lower probabilities of label sets come from the region's per-label envelope:

    P_(A) = max(sum_{k in A} lower_k, 1 - sum_{k not in A} upper_k)

clamped to [0, 1], with the conjugate upper probability 1 - P_(A^c). The
imprecise highest-density set is selected over all 2^K subsets, either by
ascending-P_ sort (``ihds_algorithm1``) or directly as a minimum-cardinality
feasible set (``ihds_min_cardinality``). ``prps`` is the precise-union
baseline: the union of highest-density sets of the distributions in the
region.
"""

import enum
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from src.credal.region import CredalRegion, ProbabilityEnvelope, default_resolution, simplex_lattice
from src.credal.simplex import LabelSet, highest_density_masks
from src.utils.exceptions import LabelSpaceTooLarge, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_K_CAP = 20
# A computed lower probability within this distance of 1 - delta counts as reaching it.
FEASIBILITY_TOL = 1e-12
SURE_LOSS_TOL = 1e-9


class SetMethod(str, enum.Enum):
    IHDS_ALG1 = "ihds_alg1"
    IHDS_MIN_ORACLE = "ihds_min_oracle"
    PRPS = "prps"


@dataclass(frozen=True)
class PredictionSetResult:
    """A label set together with how it was produced."""

    set: LabelSet
    lower_probability: float
    method: SetMethod
    delta: float

    def to_dict(self):
        return {
            'set': list(self.set.members),
            'lower_probability': self.lower_probability,
            'method': self.method.value,
            'delta': self.delta,
        }


def subset_sums(values: np.ndarray) -> np.ndarray:
    """sum_{k in A} values_k for every bitmask A = 0 .. 2^K - 1."""
    sums = np.zeros(1)
    for v in values:
        sums = np.concatenate([sums, sums + v])
    return sums


class LowerProbabilityTable:
    """
    Lower probabilities of every subset of a K-label space.

    The full table of 2^K values is built lazily on first bulk access; single
    lookups go through ``lower`` directly.
    """

    def __init__(self, envelope: ProbabilityEnvelope, k_cap: Optional[int] = DEFAULT_K_CAP):
        envelope.check_sure_loss(SURE_LOSS_TOL)
        self.envelope = envelope
        self.k_cap = k_cap
        self._table: Optional[np.ndarray] = None

    @property
    def k(self) -> int:
        return self.envelope.k

    def lower(self, a: LabelSet) -> float:
        if a.k_count != self.k:
            raise ValidationError(f"label set over {a.k_count} labels for a {self.k}-label envelope")
        if self._table is not None:
            return float(self._table[a.mask])
        indicator = a.indicator()
        from_lowers = float(np.dot(indicator, self.envelope.lower_array))
        from_uppers = 1.0 - float(np.dot(1.0 - indicator, self.envelope.upper_array))
        return float(np.clip(max(from_lowers, from_uppers), 0.0, 1.0))

    def upper(self, a: LabelSet) -> float:
        return 1.0 - self.lower(a.complement())

    def table(self) -> np.ndarray:
        """P_ for every bitmask, indexed by mask."""
        if self._table is None:
            if self.k_cap is not None and self.k > self.k_cap:
                raise LabelSpaceTooLarge(f"K={self.k} exceeds the subset enumeration cap {self.k_cap}")
            lower_sums = subset_sums(self.envelope.lower_array)
            upper_sums = subset_sums(self.envelope.upper_array)
            total_upper = float(self.envelope.upper_array.sum())
            complement_upper = total_upper - upper_sums
            table = np.clip(np.maximum(lower_sums, 1.0 - complement_upper), 0.0, 1.0)
            # The full set has an empty complement.
            table[-1] = 1.0
            table.setflags(write=False)
            self._table = table
        return self._table


def lower_probability(env: ProbabilityEnvelope, a: LabelSet) -> float:
    return LowerProbabilityTable(env, k_cap=None).lower(a)


def upper_probability(env: ProbabilityEnvelope, a: LabelSet) -> float:
    """Conjugate upper probability 1 - P_(A^c)."""
    return LowerProbabilityTable(env, k_cap=None).upper(a)


def exact_lower_probability(region: CredalRegion, a: LabelSet) -> float:
    """Exact infimum of P(A) over the region, attained at one of its vertices."""
    vertices = region.extreme_points().matrix
    return float(np.clip((vertices @ a.indicator()).min(), 0.0, 1.0))


def exact_upper_probability(region: CredalRegion, a: LabelSet) -> float:
    vertices = region.extreme_points().matrix
    return float(np.clip((vertices @ a.indicator()).max(), 0.0, 1.0))


def _validate_delta(delta: float):
    if not 0.0 <= delta <= 1.0:
        raise ValidationError(f"delta must lie in [0, 1], got {delta}")


def _cardinalities(k_count: int) -> np.ndarray:
    masks = np.arange(1 << k_count, dtype=np.int64)
    counts = np.zeros_like(masks)
    for k in range(k_count):
        counts += (masks >> k) & 1
    return counts


def ihds_algorithm1(env: ProbabilityEnvelope, delta: float, k_cap: int = DEFAULT_K_CAP) -> PredictionSetResult:
    """
    Imprecise highest-density set by ascending lower probability.

    Subsets are sorted by P_ ascending, then cardinality, then bitmask, and
    the first with P_ >= 1 - delta is returned. The full set always
    qualifies, so the scan terminates.
    """
    _validate_delta(delta)
    table = LowerProbabilityTable(env, k_cap).table()
    masks = np.arange(table.size, dtype=np.int64)
    cards = _cardinalities(env.k)
    order = np.lexsort((masks, cards, np.round(table, 12)))
    feasible = table[order] >= 1.0 - delta - FEASIBILITY_TOL
    chosen = int(order[int(np.argmax(feasible))])
    return PredictionSetResult(LabelSet(chosen, env.k), float(table[chosen]), SetMethod.IHDS_ALG1, float(delta))


def ihds_min_cardinality(env: ProbabilityEnvelope, delta: float, k_cap: int = DEFAULT_K_CAP) -> PredictionSetResult:
    """Smallest feasible subset (ties by bitmask); audits ``ihds_algorithm1``."""
    _validate_delta(delta)
    table = LowerProbabilityTable(env, k_cap).table()
    masks = np.arange(table.size, dtype=np.int64)
    cards = _cardinalities(env.k)
    feasible = np.flatnonzero(table >= 1.0 - delta - FEASIBILITY_TOL)
    best = feasible[np.lexsort((masks[feasible], cards[feasible]))[0]]
    return PredictionSetResult(LabelSet(int(best), env.k), float(table[best]),
                               SetMethod.IHDS_MIN_ORACLE, float(delta))


@lru_cache(maxsize=32)
def _lattice_masks(k_count: int, resolution: int, delta: float) -> np.ndarray:
    masks = highest_density_masks(simplex_lattice(k_count, resolution), delta)
    masks.setflags(write=False)
    return masks


def prps(region: CredalRegion, delta: float, resolution: Optional[int] = None) -> PredictionSetResult:
    """
    Union of precise highest-density sets over the region.

    The region is sampled on the simplex lattice of the given resolution,
    always augmented with its exact extreme points. The reported lower
    probability is the envelope value of the resulting set.
    """
    _validate_delta(delta)
    resolution = resolution or default_resolution(region.k)
    lattice = simplex_lattice(region.k, resolution)
    inside = region.contains_many(lattice)
    lattice_masks = _lattice_masks(region.k, resolution, float(delta))[inside]
    vertex_masks = highest_density_masks(region.extreme_points().matrix, delta)

    union = int(np.bitwise_or.reduce(np.concatenate([lattice_masks, vertex_masks]).astype(np.int64)))
    label_set = LabelSet(union, region.k)
    p_lower = LowerProbabilityTable(region.envelope(), k_cap=None).lower(label_set)
    return PredictionSetResult(label_set, p_lower, SetMethod.PRPS, float(delta))
