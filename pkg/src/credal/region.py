"""
Credal regions c(x) = {lambda in simplex : sum_k lambda_k E_k >= tau}.

The region is stored by its scores E and threshold tau, never as a point
cloud. Because the plausibility score is linear in lambda, the region is the
simplex cut by one half-space, and membership, per-label bounds and extreme
points all have closed forms. Lattice discretization is kept as an oracle.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np

from src.credal.calibration import CalibratedThreshold, ConformityScores, conformity_scores
from src.credal.simplex import LabelSpace, ProbabilityVector, check_dimensions
from src.utils.exceptions import EmptyRegion, LatticeTooLarge, SureLossViolation, ValidationError

logger = logging.getLogger(__name__)

MEMBERSHIP_TOL = 1e-12
VERTEX_DEDUP_TOL = 1e-10
ENVELOPE_TOL = 1e-9
LATTICE_BUDGET = 2_000_000


@dataclass(frozen=True)
class ProbabilityEnvelope:
    """Per-label lower and upper probabilities induced by a credal region."""

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        check_dimensions(lower, upper)
        for lo, up in zip(lower, upper):
            if not (-ENVELOPE_TOL <= lo <= up + ENVELOPE_TOL and up <= 1.0 + ENVELOPE_TOL):
                raise ValidationError(f"invalid probability bounds [{lo}, {up}]")
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)

    @property
    def k(self) -> int:
        return len(self.lower)

    @property
    def lower_array(self) -> np.ndarray:
        return np.asarray(self.lower)

    @property
    def upper_array(self) -> np.ndarray:
        return np.asarray(self.upper)

    def avoids_sure_loss(self, tol: float = ENVELOPE_TOL) -> bool:
        return sum(self.lower) <= 1.0 + tol and sum(self.upper) >= 1.0 - tol

    def check_sure_loss(self, tol: float = ENVELOPE_TOL):
        if not self.avoids_sure_loss(tol):
            raise SureLossViolation(
                f"sum of lower bounds {sum(self.lower):.12g} and upper bounds {sum(self.upper):.12g} "
                f"do not bracket 1")


@dataclass(frozen=True)
class ExtremePoints:
    """Vertices of the region polytope."""

    vertices: Tuple[ProbabilityVector, ...]

    @property
    def matrix(self) -> np.ndarray:
        """Vertices as rows of an (S, K) array."""
        return np.array([v.entries for v in self.vertices], dtype=float)

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)


@dataclass(frozen=True)
class CredalRegion:
    """
    Simplex intersected with the half-space {lambda : lambda . E >= tau}.

    Construction fails with EmptyRegion when max_k E_k < tau.
    """

    scores: ConformityScores
    tau: float
    label_space: LabelSpace

    def __post_init__(self):
        if len(self.scores) != self.label_space.k_count:
            raise ValidationError(
                f"{len(self.scores)} scores for a {self.label_space.k_count}-label space")
        if np.isnan(self.tau) or self.tau == float('inf'):
            raise ValidationError(f"invalid threshold {self.tau}")
        top = float(np.max(self.scores.array))
        if top < self.tau - MEMBERSHIP_TOL:
            raise EmptyRegion(f"max score {top:.12g} is below tau {self.tau:.12g}")

    @classmethod
    def from_threshold(cls, model_probs: ProbabilityVector, threshold: CalibratedThreshold,
                       label_space: Optional[LabelSpace] = None) -> "CredalRegion":
        """Region of a test point from its model probabilities and a calibrated tau."""
        label_space = label_space or LabelSpace(model_probs.k)
        scores = conformity_scores(model_probs, threshold.conformity)
        return cls(scores, threshold.tau, label_space)

    @property
    def k(self) -> int:
        return self.label_space.k_count

    @property
    def is_vacuous(self) -> bool:
        return self.tau == float('-inf')

    def _at_or_above(self, values: np.ndarray) -> np.ndarray:
        return values >= self.tau - MEMBERSHIP_TOL

    def contains(self, lam: ProbabilityVector) -> bool:
        """Weak-inequality membership test."""
        check_dimensions(lam.entries, self.scores.per_label)
        if self.is_vacuous:
            return True
        return bool(self._at_or_above(np.dot(lam.array, self.scores.array)))

    def contains_many(self, points: np.ndarray) -> np.ndarray:
        """Membership of every row of an (N, K) array."""
        points = np.atleast_2d(points)
        if self.is_vacuous:
            return np.ones(points.shape[0], dtype=bool)
        return self._at_or_above(points @ self.scores.array)

    def envelope(self) -> ProbabilityEnvelope:
        """Closed-form per-label lower and upper probabilities over the region."""
        if self.is_vacuous:
            return ProbabilityEnvelope((0.0,) * self.k, (1.0,) * self.k)

        scores = self.scores.array
        tau = self.tau
        lower = np.zeros(self.k)
        upper = np.zeros(self.k)
        for k in range(self.k):
            others = np.delete(scores, k)
            best_other = float(others.max())
            own = float(scores[k])

            if own >= tau - MEMBERSHIP_TOL:
                upper[k] = 1.0
            elif best_other > own:
                upper[k] = np.clip((best_other - tau) / (best_other - own), 0.0, 1.0)

            if best_other >= tau - MEMBERSHIP_TOL:
                lower[k] = 0.0
            else:
                lower[k] = np.clip((tau - best_other) / (own - best_other), 0.0, 1.0)

        return ProbabilityEnvelope(tuple(lower.tolist()), tuple(upper.tolist()))

    def extreme_points(self) -> ExtremePoints:
        """
        Vertices of the polytope: simplex corners e_k with E_k >= tau, and for
        every pair E_j >= tau > E_k the point where the cut crosses edge (e_j, e_k).
        """
        identity = np.eye(self.k)
        if self.is_vacuous:
            return ExtremePoints(tuple(ProbabilityVector(tuple(row.tolist())) for row in identity))

        scores = self.scores.array
        above = self._at_or_above(scores)
        candidates: List[np.ndarray] = [identity[k] for k in range(self.k) if above[k]]
        for j, k in itertools.product(range(self.k), repeat=2):
            if above[j] and not above[k]:
                t = np.clip((self.tau - scores[k]) / (scores[j] - scores[k]), 0.0, 1.0)
                point = np.zeros(self.k)
                point[j] = t
                point[k] = 1.0 - t
                candidates.append(point)

        unique: List[np.ndarray] = []
        for point in candidates:
            if all(np.max(np.abs(point - kept)) > VERTEX_DEDUP_TOL for kept in unique):
                unique.append(point)
        return ExtremePoints(tuple(ProbabilityVector(tuple(p.tolist())) for p in unique))

    def discretize(self, resolution: int) -> List[ProbabilityVector]:
        """Lattice points c / m (c nonnegative integers summing to m) inside the region."""
        lattice = simplex_lattice(self.k, resolution)
        inside = lattice[self.contains_many(lattice)]
        return [ProbabilityVector(tuple(row.tolist())) for row in inside]


def lattice_size(k_count: int, resolution: int) -> int:
    """Number of points c / m on the simplex lattice: C(m + K - 1, K - 1)."""
    return math.comb(resolution + k_count - 1, k_count - 1)


@lru_cache(maxsize=16)
def simplex_lattice(k_count: int, resolution: int) -> np.ndarray:
    """
    All points c / m of the simplex lattice, in lexicographic order of c.

    Built by stars and bars; the array is cached and read-only. Lattices with
    more than LATTICE_BUDGET points raise LatticeTooLarge.
    """
    if resolution < 1:
        raise ValidationError(f"resolution must be a positive integer, got {resolution}")
    size = lattice_size(k_count, resolution)
    if size > LATTICE_BUDGET:
        raise LatticeTooLarge(f"a K={k_count} lattice at resolution {resolution} has {size} points; "
                              f"the limit is {LATTICE_BUDGET}")
    bars = np.fromiter(itertools.combinations(range(resolution + k_count - 1), k_count - 1),
                       dtype=np.dtype((np.int64, (k_count - 1,))), count=size).reshape(size, k_count - 1)
    padded = np.hstack([np.full((size, 1), -1, dtype=np.int64), bars,
                        np.full((size, 1), resolution + k_count - 1, dtype=np.int64)])
    counts = np.diff(padded, axis=1) - 1
    lattice = counts / float(resolution)
    lattice.setflags(write=False)
    return lattice


@lru_cache(maxsize=None)
def default_resolution(k_count: int) -> int:
    """
    Lattice resolution policy: max(20, 600 // K), lowered until the lattice
    fits LATTICE_BUDGET points.
    """
    preferred = max(20, (200 * 3) // k_count)
    resolution = preferred
    while resolution > 1 and lattice_size(k_count, resolution) > LATTICE_BUDGET:
        resolution -= 1
    if resolution < preferred:
        logger.warning(f"Lattice resolution for K={k_count} lowered from {preferred} to {resolution} "
                       f"({lattice_size(k_count, resolution)} points)")
    return resolution
