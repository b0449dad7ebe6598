"""
Seeded evaluation runs.

Each seed shuffles the dataset, splits it into calibration and test parts,
calibrates tau, predicts every test point (region, envelope, IHDS, PRPS) and
scores the predictions. Seeds run on a thread pool; results are reduced in
seed order, so scheduling never changes the report.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.analysis.metrics import (avg_inefficiency, binomial_slack, distribution_coverage, label_coverage,
                                  type2_bound, type2_validity_estimate)
from src.credal.calibration import CalibratedThreshold, calibrate
from src.credal.credal_sets import (DEFAULT_K_CAP, PredictionSetResult, SetMethod, ihds_algorithm1,
                                    ihds_min_cardinality, prps)
from src.credal.region import CredalRegion, ProbabilityEnvelope, default_resolution
from src.credal.simplex import LabelSet, LabelSpace, ProbabilityVector
from src.credal.uncertainty import UncertaintyReport, decompose
from src.data.models import CalibrationRecord
from src.data.synthetic import GeneratorSpec, generate_synthetic, sample_labels
from src.utils.config import worker_count
from src.utils.exceptions import CredalError, EmptyRegion, LatticeTooLarge, PointFailure, ValidationError

logger = logging.getLogger(__name__)


def derive_delta(epsilon: float, alpha: float) -> float:
    """delta such that (1 - alpha)(1 - delta) = 1 - epsilon."""
    return 1.0 - (1.0 - epsilon) / (1.0 - alpha)


def grid_alphas(epsilon: float, grid_steps: int) -> List[float]:
    """alpha = epsilon * j / grid_steps for j = 1 .. grid_steps - 1."""
    if grid_steps < 2:
        raise ValidationError(f"grid_steps must be at least 2, got {grid_steps}")
    return [epsilon * j / grid_steps for j in range(1, grid_steps)]


@dataclass
class ExperimentConfig:
    """
    One evaluation setting.

    Without explicit levels alpha = delta = epsilon / 2; with alpha alone,
    delta is derived so that (1 - alpha)(1 - delta) = 1 - epsilon.
    """

    epsilon: float
    alpha: Optional[float] = None
    delta: Optional[float] = None
    seeds: List[int] = field(default_factory=lambda: list(range(20)))
    split_fraction: float = 0.5
    resolution: Optional[int] = None
    k_cap: int = DEFAULT_K_CAP
    conformity: str = "identity"
    with_uncertainty: bool = False

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValidationError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.alpha is None and self.delta is None:
            self.alpha = self.delta = self.epsilon / 2.0
        elif self.delta is None:
            self.delta = derive_delta(self.epsilon, self.alpha)
        elif self.alpha is None:
            self.alpha = derive_delta(self.epsilon, self.delta)

        if not 0.0 < self.alpha < self.epsilon:
            raise ValidationError(f"alpha must lie in (0, epsilon={self.epsilon}), got {self.alpha}")
        if not 0.0 <= self.delta < 1.0:
            raise ValidationError(f"delta must lie in [0, 1), got {self.delta}")
        if not 0.0 < self.split_fraction < 1.0:
            raise ValidationError(f"split_fraction must lie in (0, 1), got {self.split_fraction}")
        if not self.seeds:
            raise ValidationError("at least one seed is required")
        if self.resolution is not None and self.resolution < 1:
            raise ValidationError(f"resolution must be positive, got {self.resolution}")


@dataclass
class PointPrediction:
    """Everything predicted for one test point. ``region`` is None when the region is empty."""

    point_id: str
    region: Optional[CredalRegion]
    envelope: Optional[ProbabilityEnvelope]
    ihds: LabelSet
    ihds_lower: float
    min_oracle: LabelSet
    prps: LabelSet
    uncertainty: Optional[UncertaintyReport] = None
    runtime_ms: float = 0.0

    @property
    def is_empty(self) -> bool:
        return self.region is None

    def to_row(self, delta: float) -> Dict:
        """Output row of the predict command."""
        k = self.ihds.k_count
        row: Dict = {'id': self.point_id, 'empty_region': self.is_empty}
        if self.envelope is not None:
            row['lower'] = list(self.envelope.lower)
            row['upper'] = list(self.envelope.upper)
        else:
            row['lower'] = row['upper'] = None
        row['delta'] = delta
        row['ihds'] = list(self.ihds.members)
        row['ihds_lower_probability'] = self.ihds_lower
        row['ihds_min_cardinality'] = list(self.min_oracle.members)
        row['prps'] = list(self.prps.members)
        if self.uncertainty is not None:
            row['tu'] = self.uncertainty.upper_entropy
            row['au'] = self.uncertainty.lower_entropy
            row['eu'] = self.uncertainty.epistemic
            row['entropy_certified'] = self.uncertainty.certified
        else:
            row['tu'] = row['au'] = row['eu'] = None
            row['entropy_certified'] = None
        if self.region is not None:
            row['one_hot_in_region'] = any(self.region.contains(ProbabilityVector.one_hot(k, j)) for j in range(k))
            row['uniform_in_region'] = self.region.contains(ProbabilityVector.uniform(k))
        else:
            row['one_hot_in_region'] = row['uniform_in_region'] = False
        return row


def predict_point(record: CalibrationRecord, threshold: CalibratedThreshold, delta: float,
                  resolution: Optional[int] = None, k_cap: int = DEFAULT_K_CAP,
                  label_space: Optional[LabelSpace] = None, with_uncertainty: bool = False,
                  uncertainty_tol: float = 1e-7, max_iterations: int = 10000) -> PointPrediction:
    """
    Region, envelope, IHDS (ascending search and the minimum-cardinality oracle) and
    PRPS for one point. Empty regions give empty sets; an oversized lattice
    is reported as LatticeTooLarge and other failures are re-raised as
    PointFailure carrying the point id.
    """
    k = record.k
    try:
        start = time.perf_counter()
        try:
            region = CredalRegion.from_threshold(record.model_probs, threshold, label_space)
        except EmptyRegion:
            empty = LabelSet.empty(k)
            return PointPrediction(record.id, None, None, empty, 0.0, empty, empty,
                                   runtime_ms=(time.perf_counter() - start) * 1000.0)
        envelope = region.envelope()
        ihds: PredictionSetResult = ihds_algorithm1(envelope, delta, k_cap)
        union = prps(region, delta, resolution or default_resolution(k))
        runtime_ms = (time.perf_counter() - start) * 1000.0

        oracle = ihds_min_cardinality(envelope, delta, k_cap)
        uncertainty = decompose(region, uncertainty_tol, max_iterations) if with_uncertainty else None
    except (PointFailure, LatticeTooLarge):
        raise
    except CredalError as e:
        raise PointFailure(record.id, e) from e

    return PointPrediction(record.id, region, envelope, ihds.set, ihds.lower_probability, oracle.set,
                           union.set, uncertainty, runtime_ms)


@dataclass
class SeedResult:
    seed: int
    n_calibration: int
    n_test: int
    tau: float
    distribution_coverage: float
    ihds_label_coverage: float
    prps_label_coverage: float
    ihds_inefficiency: float
    prps_inefficiency: float
    inclusion_rate: float
    disagreement_rate: float
    empty_regions: int
    runtime_ms: float
    type2_estimates: Dict[str, float] = field(default_factory=dict)
    mean_tu: Optional[float] = None
    mean_au: Optional[float] = None
    mean_eu: Optional[float] = None


@dataclass
class MetricsReport:
    """Seed-aggregated results of one experiment configuration."""

    config: ExperimentConfig
    distribution_coverage: float
    label_coverage: float
    avg_inefficiency: float
    prps_label_coverage: float
    prps_inefficiency: float
    per_seed: List[SeedResult]
    type2_estimates: Dict[str, float]
    type2_bound: float
    runtime_per_point_ms: float
    inclusion_rate: float
    disagreement_rate: float
    empty_regions: int
    std: Dict[str, float] = field(default_factory=dict)

    @property
    def n_test_total(self) -> int:
        return sum(s.n_test for s in self.per_seed)

    def type2_violations(self, sigmas: float = 3.0) -> Dict[str, float]:
        """Probes whose pooled frequency exceeds the bound plus binomial slack."""
        limit = self.type2_bound + binomial_slack(self.type2_bound, self.n_test_total, sigmas)
        return {probe: value for probe, value in self.type2_estimates.items() if value > limit}

    def to_frame(self) -> pd.DataFrame:
        """One row per seed and method."""
        rows = []
        for s in self.per_seed:
            for method, cover, size in ((SetMethod.IHDS_ALG1.value, s.ihds_label_coverage, s.ihds_inefficiency),
                                        (SetMethod.PRPS.value, s.prps_label_coverage, s.prps_inefficiency)):
                rows.append({
                    'epsilon': self.config.epsilon,
                    'alpha': self.config.alpha,
                    'delta': self.config.delta,
                    'seed': s.seed,
                    'method': method,
                    'distribution_coverage': s.distribution_coverage,
                    'label_coverage': cover,
                    'avg_inefficiency': size,
                    'inclusion_rate': s.inclusion_rate,
                    'disagreement_rate': s.disagreement_rate,
                    'empty_regions': s.empty_regions,
                    'tau': s.tau,
                    'runtime_ms': s.runtime_ms,
                })
        return pd.DataFrame(rows)

    def summary(self) -> Dict:
        return {
            'epsilon': self.config.epsilon,
            'alpha': self.config.alpha,
            'delta': self.config.delta,
            'seeds': len(self.per_seed),
            'distribution_coverage': self.distribution_coverage,
            'distribution_coverage_std': self.std.get('distribution_coverage'),
            'ihds_label_coverage': self.label_coverage,
            'ihds_label_coverage_std': self.std.get('ihds_label_coverage'),
            'prps_label_coverage': self.prps_label_coverage,
            'ihds_inefficiency': self.avg_inefficiency,
            'ihds_inefficiency_std': self.std.get('ihds_inefficiency'),
            'prps_inefficiency': self.prps_inefficiency,
            'inclusion_rate': self.inclusion_rate,
            'disagreement_rate': self.disagreement_rate,
            'empty_regions': self.empty_regions,
            'type2_bound': self.type2_bound,
            'type2_max_estimate': max(self.type2_estimates.values()) if self.type2_estimates else None,
            'runtime_per_point_ms': self.runtime_per_point_ms,
        }


class ExperimentRunner:
    """Runs an ExperimentConfig over a dataset, one seed per task."""

    def __init__(self, config: ExperimentConfig, records: Sequence[CalibrationRecord],
                 label_space: Optional[LabelSpace] = None, workers: Optional[int] = None):
        if len(records) < 2:
            raise ValidationError("an experiment needs at least 2 records")
        if any(r.plausibility is None for r in records):
            raise ValidationError("every record needs a plausibility vector for evaluation")
        self.config = config
        self.records = list(records)
        self.label_space = label_space or LabelSpace(self.records[0].k)
        self.workers = workers or worker_count()
        self.logger = logging.getLogger(__name__)

    def split(self, seed: int):
        """Seeded shuffle, then calibration and test parts."""
        order = np.random.default_rng(seed).permutation(len(self.records))
        n_cal = min(max(int(math.floor(self.config.split_fraction * len(order))), 1), len(order) - 1)
        calibration = [self.records[i] for i in order[:n_cal]]
        test = [self.records[i] for i in order[n_cal:]]
        return calibration, test

    def run_seed(self, seed: int) -> SeedResult:
        config = self.config
        calibration, test = self.split(seed)
        threshold = calibrate(calibration, config.alpha, config.conformity, keep_trace=False)

        predictions = [predict_point(record, threshold, config.delta, config.resolution, config.k_cap,
                                     self.label_space, with_uncertainty=config.with_uncertainty)
                       for record in test]
        lambdas = [r.plausibility for r in test]
        ihds_sets = [p.ihds for p in predictions]
        prps_sets = [p.prps for p in predictions]

        if all(r.label is not None for r in test):
            true_labels = [r.label for r in test]
        else:
            true_labels = sample_labels(lambdas, [seed, 1]).tolist()

        empty = sum(1 for p in predictions if p.is_empty)
        if empty:
            self.logger.warning(f"seed {seed}: {empty} of {len(test)} test points have an empty region")

        uncertain = [p.uncertainty for p in predictions if p.uncertainty is not None]
        return SeedResult(
            seed=seed,
            n_calibration=len(calibration),
            n_test=len(test),
            tau=threshold.tau,
            distribution_coverage=distribution_coverage([p.region for p in predictions], lambdas),
            ihds_label_coverage=label_coverage(ihds_sets, lambdas),
            prps_label_coverage=label_coverage(prps_sets, lambdas),
            ihds_inefficiency=avg_inefficiency(ihds_sets),
            prps_inefficiency=avg_inefficiency(prps_sets),
            inclusion_rate=float(np.mean([i.issubset(u) for i, u in zip(ihds_sets, prps_sets)])),
            disagreement_rate=float(np.mean([p.ihds != p.min_oracle for p in predictions])),
            empty_regions=empty,
            runtime_ms=float(np.median([p.runtime_ms for p in predictions])),
            type2_estimates=type2_validity_estimate([p.envelope for p in predictions], true_labels, config.delta,
                                                    k_count=self.label_space.k_count),
            mean_tu=float(np.mean([u.upper_entropy for u in uncertain])) if uncertain else None,
            mean_au=float(np.mean([u.lower_entropy for u in uncertain])) if uncertain else None,
            mean_eu=float(np.mean([u.epistemic for u in uncertain])) if uncertain else None,
        )

    def run(self) -> MetricsReport:
        config = self.config
        self.logger.info(f"Running epsilon={config.epsilon:.4g} alpha={config.alpha:.4g} delta={config.delta:.4g} "
                         f"over {len(config.seeds)} seeds with {self.workers} workers")
        with ThreadPoolExecutor(max_workers=min(self.workers, len(config.seeds))) as pool:
            per_seed = list(pool.map(self.run_seed, config.seeds))
        return self._aggregate(per_seed)

    def _aggregate(self, per_seed: List[SeedResult]) -> MetricsReport:
        frame = pd.DataFrame([{
            'distribution_coverage': s.distribution_coverage,
            'ihds_label_coverage': s.ihds_label_coverage,
            'prps_label_coverage': s.prps_label_coverage,
            'ihds_inefficiency': s.ihds_inefficiency,
            'prps_inefficiency': s.prps_inefficiency,
            'inclusion_rate': s.inclusion_rate,
            'disagreement_rate': s.disagreement_rate,
        } for s in per_seed])
        means = frame.mean()
        std = frame.std(ddof=1).fillna(0.0) if len(per_seed) > 1 else frame.mean() * 0.0

        type2 = pd.DataFrame([s.type2_estimates for s in per_seed])
        weights = np.array([s.n_test for s in per_seed], dtype=float)
        pooled = {probe: float(np.average(type2[probe], weights=weights)) for probe in type2.columns}

        return MetricsReport(
            config=self.config,
            distribution_coverage=float(means['distribution_coverage']),
            label_coverage=float(means['ihds_label_coverage']),
            avg_inefficiency=float(means['ihds_inefficiency']),
            prps_label_coverage=float(means['prps_label_coverage']),
            prps_inefficiency=float(means['prps_inefficiency']),
            per_seed=per_seed,
            type2_estimates=pooled,
            type2_bound=type2_bound(self.config.delta, self.config.alpha),
            runtime_per_point_ms=float(np.median([s.runtime_ms for s in per_seed])),
            inclusion_rate=float(means['inclusion_rate']),
            disagreement_rate=float(means['disagreement_rate']),
            empty_regions=sum(s.empty_regions for s in per_seed),
            std={k: float(v) for k, v in std.items()},
        )


def run_experiment(config: ExperimentConfig, dataset: Sequence[CalibrationRecord],
                   label_space: Optional[LabelSpace] = None, workers: Optional[int] = None) -> MetricsReport:
    return ExperimentRunner(config, dataset, label_space, workers).run()


def alpha_delta_grid(dataset: Sequence[CalibrationRecord], epsilons: Sequence[float], grid_steps: int = 10,
                     seeds: Optional[List[int]] = None, label_space: Optional[LabelSpace] = None,
                     **config_options) -> pd.DataFrame:
    """IHDS and PRPS inefficiency for alpha on a grid in (0, epsilon), delta derived."""
    rows = []
    for epsilon in epsilons:
        for alpha in grid_alphas(epsilon, grid_steps):
            config = ExperimentConfig(epsilon=epsilon, alpha=alpha,
                                      seeds=list(seeds) if seeds is not None else list(range(20)),
                                      **config_options)
            report = run_experiment(config, dataset, label_space)
            rows.append({
                'epsilon': epsilon,
                'alpha': alpha,
                'delta': config.delta,
                'ihds_inefficiency': report.avg_inefficiency,
                'prps_inefficiency': report.prps_inefficiency,
                'distribution_coverage': report.distribution_coverage,
                'ihds_label_coverage': report.label_coverage,
            })
    return pd.DataFrame(rows)


def runtime_by_k(ks: Sequence[int] = (3, 5), n: int = 400, seed: int = 0, resolution: int = 20,
                 alpha: float = 0.05, delta: float = 0.05) -> pd.DataFrame:
    """Median per-point prediction time on synthetic K-class problems at one fixed resolution."""
    rows = []
    for k in ks:
        data = generate_synthetic(GeneratorSpec.isotropic(k), n, seed)
        config = ExperimentConfig(epsilon=min(alpha + delta, 0.99), alpha=alpha, delta=delta,
                                  seeds=[seed], resolution=resolution)
        runner = ExperimentRunner(config, data.records, data.label_space, workers=1)
        result = runner.run_seed(seed)
        rows.append({'k': k, 'resolution': resolution, 'median_ms': result.runtime_ms, 'n_test': result.n_test})
    return pd.DataFrame(rows)
