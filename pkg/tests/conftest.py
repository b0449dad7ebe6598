"""
Pytest configuration and common fixtures.

This module provides common test fixtures and configuration for the test suite.
"""

import os
import shutil
import sys
import tempfile

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.credal.calibration import ConformityScores  # noqa: E402
from src.credal.region import CredalRegion  # noqa: E402
from src.credal.simplex import LabelSpace, ProbabilityVector  # noqa: E402
from src.data.models import CalibrationRecord, DatasetHeader  # noqa: E402
from src.data.processors import Dataset  # noqa: E402
from src.data.synthetic import GeneratorSpec, generate_synthetic  # noqa: E402

FIXTURE_SCORES = (0.7, 0.2, 0.1)
FIXTURE_TAU = 0.25


def make_region(scores, tau, names=None) -> CredalRegion:
    return CredalRegion(ConformityScores(tuple(scores)), tau, LabelSpace(len(scores), names))


def random_region(rng: np.random.Generator, k: int) -> CredalRegion:
    """Dirichlet scores with tau drawn between the smallest and largest score."""
    scores = rng.dirichlet(np.ones(k))
    tau = float(rng.uniform(scores.min(), scores.max()))
    return make_region(scores.tolist(), tau)


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test files."""
    temp_dir = tempfile.mkdtemp()
    yield temp_dir
    shutil.rmtree(temp_dir)


@pytest.fixture
def fixture_region() -> CredalRegion:
    """E = (0.7, 0.2, 0.1), tau = 0.25: vertices (1,0,0), (0.1,0.9,0), (0.25,0,0.75)."""
    return make_region(FIXTURE_SCORES, FIXTURE_TAU)


@pytest.fixture
def vacuous_region() -> CredalRegion:
    return make_region(FIXTURE_SCORES, float('-inf'))


@pytest.fixture
def nine_records():
    """Nine calibration records whose plausibility scores are 0.1, 0.2, ..., 0.9."""
    records = []
    for i in range(1, 10):
        score = i / 10.0
        # Model probs (score, 1 - score) with one-hot plausibility on label 0 give e = score.
        records.append(CalibrationRecord(
            f"r{i}",
            ProbabilityVector((score, 1.0 - score)),
            ProbabilityVector((1.0, 0.0)),
        ))
    return records


@pytest.fixture
def small_synthetic():
    """300 examples from the default three-component mixture."""
    spec = GeneratorSpec(np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 1.7]]), np.stack([np.eye(2)] * 3),
                         np.full(3, 1.0 / 3.0), temperature=1.5)
    return generate_synthetic(spec, 300, seed=7)


@pytest.fixture
def fixture_dataset():
    """Three rows with labelled names; row 'a' carries the fixture scores."""
    header = DatasetHeader(LabelSpace(3, ("cat", "dog", "fox")))
    records = [
        CalibrationRecord("a", ProbabilityVector((0.7, 0.2, 0.1)), ProbabilityVector((0.6, 0.3, 0.1)), 0),
        CalibrationRecord("b", ProbabilityVector((0.2, 0.5, 0.3)), ProbabilityVector((0.0, 1.0, 0.0)), 1),
        CalibrationRecord("c", ProbabilityVector((0.25, 0.25, 0.5)), ProbabilityVector((0.2, 0.2, 0.6))),
    ]
    return Dataset(header, records)
