"""
Entropy-based uncertainty of a credal region.

Total uncertainty is the upper entropy of the region, aleatoric uncertainty
its lower entropy, epistemic uncertainty their difference. Entropy is
concave, so the lower entropy is attained at a vertex. The upper entropy is
either log2 K (uniform vector inside the region) or found on the cutting
hyperplane by exponential tilting, then certified by conditional-gradient
(Frank-Wolfe) steps whose linear subproblem is solved over the vertices.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import softmax
from scipy.stats import entropy as scipy_entropy

from src.credal.region import CredalRegion, ExtremePoints, default_resolution, simplex_lattice
from src.credal.simplex import ProbabilityVector

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITERATIONS = 10000
# Frank-Wolfe gives up after this many steps without measurable progress.
_STALL_PATIENCE = 50
_GRADIENT_FLOOR = 1e-300

LINEAR_FORM_NOTE = (
    "sup over beta of sum_s beta_s H(P_s) is linear in beta and equals max_s H(P_s); "
    "the lower TU bound therefore reduces to the largest vertex entropy"
)


@dataclass(frozen=True)
class ExtremePointBounds:
    """Extreme-point bounds on TU, AU and EU for a region with S vertices."""

    tu_interval: Tuple[float, float]
    au_point: float
    eu_interval: Tuple[float, float]
    s_count: int
    note: str = LINEAR_FORM_NOTE

    def to_dict(self):
        return {
            'tu_interval': list(self.tu_interval),
            'au_point': self.au_point,
            'eu_interval': list(self.eu_interval),
            's_count': self.s_count,
            'note': self.note,
        }


@dataclass(frozen=True)
class UncertaintyReport:
    lower_entropy: float
    upper_entropy: float
    epistemic: float
    argmin_vertex: ProbabilityVector
    argmax_point: ProbabilityVector
    optimizer_iterations: int
    duality_gap: float = 0.0
    certified: bool = True
    extreme_point_bounds: Optional[ExtremePointBounds] = field(default=None)

    @property
    def total(self) -> float:
        return self.upper_entropy

    @property
    def aleatoric(self) -> float:
        return self.lower_entropy

    def to_dict(self):
        return {
            'tu': self.upper_entropy,
            'au': self.lower_entropy,
            'eu': self.epistemic,
            'argmin_vertex': list(self.argmin_vertex.entries),
            'argmax_point': list(self.argmax_point.entries),
            'optimizer_iterations': self.optimizer_iterations,
            'duality_gap': self.duality_gap,
            'certified': self.certified,
            'extreme_point_bounds': self.extreme_point_bounds.to_dict() if self.extreme_point_bounds else None,
        }


@dataclass(frozen=True)
class UpperEntropyResult:
    value: float
    point: ProbabilityVector
    iterations: int
    duality_gap: float
    certified: bool


def entropy_bits(p: np.ndarray) -> float:
    """Shannon entropy in bits of a nonnegative vector, clipped to [0, log2 K]."""
    value = float(scipy_entropy(np.clip(p, 0.0, None), base=2))
    return min(max(value, 0.0), math.log2(p.size))


def _row_entropies(matrix: np.ndarray) -> np.ndarray:
    return np.clip(scipy_entropy(np.clip(matrix, 0.0, None), base=2, axis=1), 0.0, math.log2(matrix.shape[1]))


def _as_vector(p: np.ndarray) -> ProbabilityVector:
    p = np.clip(p, 0.0, None)
    return ProbabilityVector(tuple((p / p.sum()).tolist()))


def lower_entropy(region: CredalRegion) -> Tuple[float, ProbabilityVector]:
    """Minimum entropy over the region and the vertex attaining it."""
    vertices = region.extreme_points()
    entropies = _row_entropies(vertices.matrix)
    best = int(np.argmin(entropies))
    return float(entropies[best]), vertices.vertices[best]


def _entropy_gradient(x: np.ndarray) -> np.ndarray:
    return -(np.log2(np.maximum(x, _GRADIENT_FLOOR)) + 1.0 / math.log(2.0))


def _frank_wolfe_gap(x: np.ndarray, vertices: np.ndarray) -> Tuple[float, int]:
    grad = _entropy_gradient(x)
    scores = vertices @ grad
    best = int(np.argmax(scores))
    return float(scores[best] - grad @ x), best


def _tilted_start(region: CredalRegion, vertices: np.ndarray) -> np.ndarray:
    """
    Maximum-entropy point of the hyperplane {lambda . E = tau}: lambda ∝ exp(theta E).

    Only used when the uniform vector lies outside the region, so theta > 0.
    Residual infeasibility is removed by mixing with the vertex of largest score.
    """
    scores = region.scores.array
    tau = region.tau
    best_vertex = vertices[int(np.argmax(vertices @ scores))]
    if float(scores.max()) - tau <= 1e-12:
        return best_vertex.copy()

    def excess(theta: float) -> float:
        return float(softmax(theta * scores) @ scores) - tau

    upper = 1.0
    while excess(upper) < 0.0 and upper < 1e12:
        upper *= 2.0
    if excess(upper) < 0.0:
        point = softmax(upper * scores)
    else:
        point = softmax(brentq(excess, 0.0, upper, xtol=1e-14, rtol=1e-14, maxiter=500) * scores)

    shortfall = tau - float(point @ scores)
    if shortfall > 0.0:
        reach = float(best_vertex @ scores) - float(point @ scores)
        weight = min(1.0, shortfall / reach) if reach > 0.0 else 1.0
        point = (1.0 - weight) * point + weight * best_vertex
    return point


def upper_entropy(region: CredalRegion, tol: float = DEFAULT_TOL,
                  max_iterations: int = DEFAULT_MAX_ITERATIONS) -> UpperEntropyResult:
    """
    Maximum entropy over the region.

    The returned value is the entropy of a feasible point, so it never exceeds
    the true supremum; ``duality_gap`` bounds the shortfall.
    """
    k = region.k
    uniform = ProbabilityVector.uniform(k)
    if region.contains(uniform):
        return UpperEntropyResult(math.log2(k), uniform, 0, 0.0, True)

    vertices = region.extreme_points().matrix
    x = _tilted_start(region, vertices)
    value = entropy_bits(x)

    iterations = 0
    stalled = 0
    gap, target = _frank_wolfe_gap(x, vertices)
    while gap >= tol and iterations < max_iterations:
        direction = vertices[target] - x
        step = minimize_scalar(lambda g: -entropy_bits(x + g * direction), bounds=(0.0, 1.0),
                               method='bounded', options={'xatol': 1e-12})
        candidate = x + float(step.x) * direction
        candidate_value = entropy_bits(candidate)
        iterations += 1
        if candidate_value > value + 1e-15:
            x, value = candidate, candidate_value
            stalled = 0
        else:
            stalled += 1
            if stalled >= _STALL_PATIENCE:
                break
        gap, target = _frank_wolfe_gap(x, vertices)

    certified = gap < tol
    if not certified:
        logger.warning(f"Entropy ascent stopped after {iterations} iterations with gap {gap:.3g}; "
                       f"checking lattice points")
        resolution = default_resolution(k) if k <= 3 else min(20, default_resolution(k))
        lattice = simplex_lattice(k, resolution)
        inside = lattice[region.contains_many(lattice)]
        if inside.shape[0]:
            entropies = _row_entropies(inside)
            best = int(np.argmax(entropies))
            if entropies[best] > value:
                x, value = inside[best].copy(), float(entropies[best])

    vertex_entropies = _row_entropies(vertices)
    best_vertex = int(np.argmax(vertex_entropies))
    if vertex_entropies[best_vertex] > value:
        x, value = vertices[best_vertex].copy(), float(vertex_entropies[best_vertex])

    return UpperEntropyResult(value, _as_vector(x), iterations, max(gap, 0.0), certified)


def extreme_point_bounds(vertices: ExtremePoints) -> ExtremePointBounds:
    """Bounds on TU, AU and EU computed from the vertex entropies alone."""
    entropies = _row_entropies(vertices.matrix)
    s_count = len(vertices)
    lowest = float(entropies.min())
    highest = float(entropies.max())
    tu_lower = highest
    tu_upper = highest + math.log2(s_count)
    return ExtremePointBounds(
        tu_interval=(tu_lower, tu_upper),
        au_point=lowest,
        eu_interval=(max(0.0, tu_lower - lowest), tu_upper - lowest),
        s_count=s_count,
    )


def decompose(region: CredalRegion, tol: float = DEFAULT_TOL, max_iterations: int = DEFAULT_MAX_ITERATIONS,
              with_bounds: bool = True) -> UncertaintyReport:
    """TU = AU + EU for one region."""
    au, argmin_vertex = lower_entropy(region)
    upper = upper_entropy(region, tol=tol, max_iterations=max_iterations)
    tu = max(upper.value, au)
    return UncertaintyReport(
        lower_entropy=au,
        upper_entropy=tu,
        epistemic=tu - au,
        argmin_vertex=argmin_vertex,
        argmax_point=upper.point,
        optimizer_iterations=upper.iterations,
        duality_gap=upper.duality_gap,
        certified=upper.certified,
        extreme_point_bounds=extreme_point_bounds(region.extreme_points()) if with_bounds else None,
    )
