"""
Evaluation metrics for credal regions and prediction sets.

Coverage of the annotated plausibility vector by its region, expected label
coverage of a set under that vector, set size, and an empirical check of the
type-2 validity bound P[upper(A) <= delta, Y in A] <= delta / (1 - alpha).
"""

import itertools
import math
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.credal.credal_sets import LowerProbabilityTable
from src.credal.region import CredalRegion, ProbabilityEnvelope
from src.credal.simplex import LabelSet, ProbabilityVector
from src.utils.exceptions import LengthMismatch, ValidationError


def _check_lengths(first: Sequence, second: Sequence, what: str):
    if len(first) != len(second):
        raise LengthMismatch(f"{len(first)} {what} for {len(second)} plausibility vectors")


def distribution_coverage(regions: Sequence[Optional[CredalRegion]], lambdas: Sequence[ProbabilityVector]) -> float:
    """
    Fraction of points whose plausibility vector lies in its region.

    A None region stands for an empty one and never covers.
    """
    _check_lengths(regions, lambdas, "regions")
    if not regions:
        raise ValidationError("coverage needs at least one point")
    hits = sum(1 for region, lam in zip(regions, lambdas) if region is not None and region.contains(lam))
    return hits / len(regions)


def label_coverage(sets: Sequence[LabelSet], lambdas: Sequence[ProbabilityVector]) -> float:
    """Mean plausibility mass captured by each set."""
    _check_lengths(sets, lambdas, "sets")
    if not sets:
        raise ValidationError("coverage needs at least one point")
    return float(np.mean([float(s.indicator() @ lam.array) for s, lam in zip(sets, lambdas)]))


def avg_inefficiency(sets: Sequence[LabelSet]) -> float:
    """Mean set cardinality."""
    if not sets:
        raise ValidationError("inefficiency needs at least one set")
    return float(np.mean([len(s) for s in sets]))


def default_probes(k_count: int) -> List[LabelSet]:
    """All singletons and, for K <= 5, all pairs."""
    probes = [LabelSet.from_members([k], k_count) for k in range(k_count)]
    if k_count <= 5:
        probes += [LabelSet.from_members(pair, k_count) for pair in itertools.combinations(range(k_count), 2)]
    return probes


def probe_name(probe: LabelSet) -> str:
    return "{" + ",".join(str(k) for k in probe.members) + "}"


def type2_validity_estimate(envelopes: Sequence[Optional[ProbabilityEnvelope]], true_labels: Sequence[int],
                            delta: float, probes: Optional[Sequence[LabelSet]] = None,
                            k_count: Optional[int] = None) -> Dict[str, float]:
    """
    Empirical frequency of {upper(A) <= delta and Y in A} for every probe set A.

    Points with an empty region (None envelope) count as never firing.
    """
    _check_lengths(envelopes, true_labels, "envelopes")
    if not envelopes:
        raise ValidationError("type-2 estimate needs at least one point")
    if probes is None:
        known = [env.k for env in envelopes if env is not None]
        k_count = k_count or (known[0] if known else None)
        if k_count is None:
            raise ValidationError("cannot infer the number of labels for default probes")
        probes = default_probes(k_count)

    tables = [LowerProbabilityTable(env, k_cap=None) if env is not None else None for env in envelopes]
    estimates: Dict[str, float] = {}
    for probe in probes:
        fired = 0
        for table, label in zip(tables, true_labels):
            if table is not None and int(label) in probe and table.upper(probe) <= delta:
                fired += 1
        estimates[probe_name(probe)] = fired / len(envelopes)
    return estimates


def type2_bound(delta: float, alpha: float) -> float:
    """
    Upper bound delta / (1 - alpha) on the type-2 validity rate of any probe set.

    The bound scales with delta, not alpha: delta = 0.5, alpha = 0.05 gives
    about 0.526, while delta = alpha = 0.05 gives about 0.0526.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValidationError(f"alpha must lie in [0, 1), got {alpha}")
    return delta / (1.0 - alpha)


def binomial_slack(p: float, n: int, sigmas: float = 3.0) -> float:
    """sigmas standard errors of a binomial proportion p over n trials."""
    if n < 1:
        raise ValidationError("slack needs at least one trial")
    p = min(max(p, 0.0), 1.0)
    return sigmas * math.sqrt(p * (1.0 - p) / n)
