"""
Unit tests for credal regions: membership, envelope, vertices and lattice.
"""

import logging
import unittest

import numpy as np
import pytest
from scipy.optimize import linprog

from src.credal.calibration import CalibratedThreshold
from src.credal.region import (LATTICE_BUDGET, CredalRegion, ProbabilityEnvelope, default_resolution, lattice_size,
                               simplex_lattice)
from src.credal.simplex import LabelSpace, ProbabilityVector
from src.utils.exceptions import EmptyRegion, LatticeTooLarge, SureLossViolation, ValidationError
from tests.conftest import make_region, random_region


def _sorted_rows(matrix):
    return sorted(tuple(round(v, 9) for v in row) for row in np.asarray(matrix))


class TestMembership(unittest.TestCase):

    def setUp(self):
        self.region = make_region((0.7, 0.2, 0.1), 0.25)

    def test_contains_inner_point(self):
        self.assertTrue(self.region.contains(ProbabilityVector((0.5, 0.3, 0.2))))

    def test_excludes_low_score_point(self):
        self.assertFalse(self.region.contains(ProbabilityVector((0.0, 1.0, 0.0))))

    def test_boundary_is_included(self):
        self.assertTrue(self.region.contains(ProbabilityVector((0.25, 0.0, 0.75))))

    def test_vacuous_contains_everything(self):
        region = make_region((0.7, 0.2, 0.1), float('-inf'))
        self.assertTrue(region.contains(ProbabilityVector((0.0, 0.0, 1.0))))
        self.assertTrue(region.is_vacuous)

    def test_contains_many_matches_contains(self):
        points = np.array([[0.5, 0.3, 0.2], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])
        self.assertEqual(self.region.contains_many(points).tolist(), [True, False, True])

    def test_empty_region_raises(self):
        with self.assertRaises(EmptyRegion):
            make_region((0.4, 0.3, 0.3), 0.5)

    def test_wrong_label_space(self):
        from src.credal.calibration import ConformityScores
        with self.assertRaises(ValidationError):
            CredalRegion(ConformityScores((0.5, 0.5)), 0.2, LabelSpace(3))

    def test_from_threshold(self):
        threshold = CalibratedThreshold(tau=0.25, alpha=0.1, n_calibration=10, k_index=1)
        region = CredalRegion.from_threshold(ProbabilityVector((0.7, 0.2, 0.1)), threshold)
        self.assertEqual(region.scores.per_label, (0.7, 0.2, 0.1))
        self.assertEqual(region.tau, 0.25)


class TestEnvelope(unittest.TestCase):

    def test_fixture_envelope(self):
        env = make_region((0.7, 0.2, 0.1), 0.25).envelope()
        np.testing.assert_allclose(env.upper, (1.0, 0.9, 0.75), atol=1e-12)
        np.testing.assert_allclose(env.lower, (0.1, 0.0, 0.0), atol=1e-12)

    def test_vacuous_envelope(self):
        env = make_region((0.7, 0.2, 0.1), float('-inf')).envelope()
        self.assertEqual(env.lower, (0.0, 0.0, 0.0))
        self.assertEqual(env.upper, (1.0, 1.0, 1.0))

    def test_single_vertex_envelope(self):
        env = make_region((1.0, 0.0, 0.0), 1.0).envelope()
        np.testing.assert_allclose(env.lower, (1.0, 0.0, 0.0), atol=1e-12)
        np.testing.assert_allclose(env.upper, (1.0, 0.0, 0.0), atol=1e-12)

    def test_envelope_avoids_sure_loss(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            env = random_region(rng, int(rng.integers(2, 6))).envelope()
            self.assertTrue(env.avoids_sure_loss())

    def test_sure_loss_detected(self):
        with self.assertRaises(SureLossViolation):
            ProbabilityEnvelope((0.6, 0.6), (0.7, 0.7)).check_sure_loss()

    def test_invalid_bounds(self):
        with self.assertRaises(ValidationError):
            ProbabilityEnvelope((0.5, 0.0), (0.4, 1.0))


class TestExtremePoints(unittest.TestCase):

    def test_fixture_vertices(self):
        vertices = make_region((0.7, 0.2, 0.1), 0.25).extreme_points()
        self.assertEqual(_sorted_rows(vertices.matrix),
                         _sorted_rows([[1, 0, 0], [0.1, 0.9, 0], [0.25, 0, 0.75]]))

    def test_vacuous_vertices(self):
        vertices = make_region((0.7, 0.2, 0.1), float('-inf')).extreme_points()
        self.assertEqual(_sorted_rows(vertices.matrix), _sorted_rows(np.eye(3)))

    def test_single_vertex(self):
        vertices = make_region((1.0, 0.0, 0.0), 1.0).extreme_points()
        self.assertEqual(len(vertices), 1)
        self.assertEqual(vertices.vertices[0].entries, (1.0, 0.0, 0.0))

    def test_vertices_are_members(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            region = random_region(rng, 4)
            for v in region.extreme_points():
                self.assertTrue(region.contains(v))


class TestDiscretize(unittest.TestCase):

    def test_vacuous_lattice_size(self):
        region = make_region((0.7, 0.2, 0.1), float('-inf'))
        self.assertEqual(len(region.discretize(2)), 6)

    def test_fixture_lattice(self):
        points = make_region((0.7, 0.2, 0.1), 0.25).discretize(2)
        self.assertEqual(_sorted_rows([p.entries for p in points]),
                         _sorted_rows([[1, 0, 0], [0.5, 0.5, 0], [0.5, 0, 0.5]]))

    def test_resolution_one_gives_member_corners(self):
        points = make_region((0.7, 0.2, 0.1), 0.25).discretize(1)
        self.assertEqual([p.entries for p in points], [(1.0, 0.0, 0.0)])

    def test_lattice_is_cached_and_read_only(self):
        lattice = simplex_lattice(3, 10)
        self.assertIs(lattice, simplex_lattice(3, 10))
        self.assertFalse(lattice.flags.writeable)
        self.assertEqual(lattice.shape, (66, 3))
        np.testing.assert_allclose(lattice.sum(axis=1), 1.0)

    def test_lattice_rejects_zero_resolution(self):
        with self.assertRaises(ValidationError):
            simplex_lattice(3, 0)


@pytest.mark.parametrize("k, expected", [(3, 200), (4, 150), (5, 80), (6, 44), (10, 15), (40, 5)])
def test_default_resolution(k, expected):
    assert default_resolution(k) == expected
    assert lattice_size(k, default_resolution(k)) <= LATTICE_BUDGET


def test_default_resolution_logs_reduction(caplog):
    default_resolution.cache_clear()
    with caplog.at_level(logging.WARNING, logger='src.credal.region'):
        assert default_resolution(6) == 44
    assert "lowered from 100 to 44" in caplog.text


class TestLatticeBudget(unittest.TestCase):

    def test_lattice_size(self):
        self.assertEqual(lattice_size(3, 10), 66)
        self.assertEqual(lattice_size(6, 44), 1906884)

    def test_oversized_lattice_raises(self):
        with self.assertRaises(LatticeTooLarge):
            simplex_lattice(6, 100)

    def test_oversized_discretize_raises(self):
        region = make_region((0.3, 0.2, 0.15, 0.15, 0.12, 0.08), 0.2)
        with self.assertRaises(LatticeTooLarge):
            region.discretize(100)

    def test_lattice_order_is_lexicographic(self):
        lattice = simplex_lattice(2, 2)
        np.testing.assert_allclose(lattice, [[0.0, 1.0], [0.5, 0.5], [1.0, 0.0]])


def test_envelope_matches_lattice_oracle():
    """Closed-form bounds agree with a fine lattice within its step size."""
    rng = np.random.default_rng(21)
    lattice = simplex_lattice(3, 200)
    for _ in range(25):
        region = random_region(rng, 3)
        inside = lattice[region.contains_many(lattice)]
        if inside.shape[0] == 0:
            continue
        env = region.envelope()
        assert np.all(inside.min(axis=0) >= env.lower_array - 1e-9)
        assert np.all(inside.max(axis=0) <= env.upper_array + 1e-9)
        np.testing.assert_allclose(inside.min(axis=0), env.lower_array, atol=5e-3 + 1.0 / 200)
        np.testing.assert_allclose(inside.max(axis=0), env.upper_array, atol=5e-3 + 1.0 / 200)


class TestEnvelopeTightness(unittest.TestCase):

    def test_envelope_is_vertex_min_and_max(self):
        rng = np.random.default_rng(31)
        for k in (3, 4, 5):
            for _ in range(30):
                region = random_region(rng, k)
                env = region.envelope()
                vertices = region.extreme_points().matrix
                np.testing.assert_allclose(vertices.min(axis=0), env.lower_array, atol=1e-9)
                np.testing.assert_allclose(vertices.max(axis=0), env.upper_array, atol=1e-9)
                # Each bound is attained by a member of the region.
                for label in range(k):
                    low = vertices[np.argmin(vertices[:, label])]
                    high = vertices[np.argmax(vertices[:, label])]
                    self.assertTrue(region.contains(ProbabilityVector.from_values(low)))
                    self.assertTrue(region.contains(ProbabilityVector.from_values(high)))
                    self.assertAlmostEqual(low[label], env.lower[label], places=9)
                    self.assertAlmostEqual(high[label], env.upper[label], places=9)


def _in_convex_hull(point, vertices):
    n = vertices.shape[0]
    a_eq = np.vstack([vertices.T, np.ones((1, n))])
    b_eq = np.append(point, 1.0)
    result = linprog(np.zeros(n), A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * n, method='highs')
    return result.status == 0


def test_lattice_points_lie_in_vertex_hull():
    rng = np.random.default_rng(37)
    for k, resolution in ((3, 12), (4, 6)):
        for _ in range(6):
            region = random_region(rng, k)
            vertices = region.extreme_points().matrix
            for point in region.discretize(resolution):
                assert _in_convex_hull(point.array, vertices)


def test_region_is_convex():
    rng = np.random.default_rng(41)
    for _ in range(20):
        region = random_region(rng, 4)
        members = [p for p in region.discretize(8)]
        picks = rng.integers(0, len(members), size=(50, 2))
        for i, j in picks:
            t = float(rng.uniform())
            mix = ProbabilityVector.from_values(t * members[i].array + (1 - t) * members[j].array)
            assert region.contains(mix)
