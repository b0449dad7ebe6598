"""
Synthetic ambiguous-ground-truth data.

Features are drawn from a K-component Gaussian mixture. The plausibility
vector of each example is the exact mixture posterior at its feature point,
the realized label is the component that generated it, and the "model" is
the posterior flattened by a temperature, so it is plausible but imperfect.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.special import logsumexp, softmax
from scipy.stats import multivariate_normal

from src.credal.simplex import LabelSpace, ProbabilityVector
from src.data.models import CalibrationRecord, DatasetHeader
from src.data.processors import Dataset
from src.utils.config import SyntheticSettings
from src.utils.exceptions import InvalidSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GeneratorSpec:
    means: np.ndarray
    covariances: np.ndarray
    priors: np.ndarray
    temperature: float = 1.5

    def __post_init__(self):
        means = np.atleast_2d(np.asarray(self.means, dtype=float))
        covariances = np.asarray(self.covariances, dtype=float)
        priors = np.asarray(self.priors, dtype=float)
        k, d = means.shape

        if k < 2:
            raise InvalidSpec("the mixture needs at least 2 components")
        if covariances.shape != (k, d, d):
            raise InvalidSpec(f"expected {k} covariance matrices of shape {d}x{d}, got {covariances.shape}")
        if priors.shape != (k,):
            raise InvalidSpec(f"expected {k} priors, got {priors.shape}")
        if np.any(priors <= 0) or abs(priors.sum() - 1.0) > 1e-9:
            raise InvalidSpec(f"priors must be positive and sum to 1, got {priors.tolist()}")
        for i, cov in enumerate(covariances):
            if not np.allclose(cov, cov.T) or np.any(np.linalg.eigvalsh(cov) <= 0):
                raise InvalidSpec(f"covariance {i} is not symmetric positive definite")
        if not self.temperature > 0:
            raise InvalidSpec(f"temperature must be positive, got {self.temperature}")

        object.__setattr__(self, 'means', means)
        object.__setattr__(self, 'covariances', covariances)
        object.__setattr__(self, 'priors', priors)
        object.__setattr__(self, 'temperature', float(self.temperature))

    @property
    def k(self) -> int:
        return self.means.shape[0]

    @classmethod
    def from_settings(cls, settings: SyntheticSettings, temperature: Optional[float] = None) -> "GeneratorSpec":
        return cls(np.asarray(settings.means), np.asarray(settings.covariances), np.asarray(settings.priors),
                   settings.temperature if temperature is None else temperature)

    @classmethod
    def isotropic(cls, k: int, radius: float = 1.5, temperature: float = 1.5) -> "GeneratorSpec":
        """K unit-covariance components with means evenly spaced on a circle."""
        angles = 2.0 * np.pi * np.arange(k) / k
        means = radius * np.column_stack([np.cos(angles), np.sin(angles)])
        return cls(means, np.stack([np.eye(2)] * k), np.full(k, 1.0 / k), temperature)

    def to_dict(self):
        return {
            'means': self.means.tolist(),
            'covariances': self.covariances.tolist(),
            'priors': self.priors.tolist(),
            'temperature': self.temperature,
        }

    def log_joint(self, features: np.ndarray) -> np.ndarray:
        """log prior_k + log N(x | mean_k, cov_k) for every row and component."""
        columns = [np.log(self.priors[k]) + multivariate_normal(self.means[k], self.covariances[k]).logpdf(features)
                   for k in range(self.k)]
        return np.atleast_2d(np.column_stack(columns))

    def posterior(self, features: np.ndarray) -> np.ndarray:
        joint = self.log_joint(features)
        return np.exp(joint - logsumexp(joint, axis=1, keepdims=True))


@dataclass
class SyntheticDataset:
    records: List[CalibrationRecord]
    generator_spec: GeneratorSpec
    seed: int
    features: np.ndarray

    @property
    def label_space(self) -> LabelSpace:
        return LabelSpace(self.generator_spec.k)

    def to_dataset(self) -> Dataset:
        return Dataset(DatasetHeader(self.label_space), list(self.records))


def generate_synthetic(spec: GeneratorSpec, n: int, seed: int) -> SyntheticDataset:
    """Sample n examples; the same spec and seed always give the same data."""
    if n < 1:
        raise InvalidSpec(f"n must be at least 1, got {n}")
    rng = np.random.default_rng(seed)
    components = rng.choice(spec.k, size=n, p=spec.priors)
    features = np.empty((n, spec.means.shape[1]))
    for k in range(spec.k):
        rows = components == k
        if rows.any():
            features[rows] = rng.multivariate_normal(spec.means[k], spec.covariances[k], size=int(rows.sum()))

    log_joint = spec.log_joint(features)
    posterior = np.exp(log_joint - logsumexp(log_joint, axis=1, keepdims=True))
    if spec.temperature == 1.0:
        model = posterior
    else:
        model = softmax((log_joint - logsumexp(log_joint, axis=1, keepdims=True)) / spec.temperature, axis=1)

    records = []
    for i in range(n):
        lam = ProbabilityVector.from_values(posterior[i])
        probs = lam if model is posterior else ProbabilityVector.from_values(model[i])
        records.append(CalibrationRecord(f"s{i:05d}", probs, lam, int(components[i])))

    logger.info(f"Generated {n} synthetic records (K={spec.k}, seed={seed}, temperature={spec.temperature})")
    return SyntheticDataset(records, spec, seed, features)


def sample_labels(plausibilities: Sequence[ProbabilityVector], seed: Union[int, Sequence[int]]) -> np.ndarray:
    """Draw one realized label per plausibility vector with a seeded stream."""
    rng = np.random.default_rng(seed)
    probs = np.array([p.entries for p in plausibilities], dtype=float)
    if probs.size == 0:
        return np.zeros(0, dtype=int)
    draws = rng.random(probs.shape[0])
    cumulative = np.cumsum(probs, axis=1)
    labels = (draws[:, np.newaxis] > cumulative).sum(axis=1)
    return np.minimum(labels, probs.shape[1] - 1)
