"""Tests for clustering, the local certificate and the global oracle."""
import pytest
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent))

from weber.exceptions import InvalidInputError, SizeGuardError
from weber.models import ProblemInstance, SolverParams
from weber.services import analysis
from weber.services.datasets import triangle, unit_square
from weber.services.gauge import GaugeSet, gauge_value
from weber.services.harness import random_init
from weber.services.objective import gauge_matrix, objective_true
from weber.services.sets import ConvexRegion
from weber.services.solver import solve

KINDS = ['euclidean-ball', 'l1-ball', 'linf-ball']
SQUARE_LOCAL = np.array([[0.5, 0.0], [0.5, 1.0]])


class TestNaturalClustering:
    """Test the natural clustering."""

    def test_square_split(self):
        """Bottom corners go to center 1, top corners to center 2."""
        clustering = analysis.natural_clustering(unit_square(), SQUARE_LOCAL)
        assert clustering.clusters == [frozenset({0, 1}), frozenset({2, 3})]
        assert clustering.attraction == clustering.clusters

    def test_single_center_takes_everything(self):
        """k=1 gives one cluster with every point."""
        clustering = analysis.natural_clustering(triangle(k=1), [[0.3, 0.3]])
        assert clustering.clusters == [frozenset({0, 1, 2})]

    def test_duplicate_rows_earlier_index_absorbs(self):
        """Identical centers: the first takes every point, the second nothing."""
        clustering = analysis.natural_clustering(unit_square(), [[0.5, 0.5], [0.5, 0.5]])
        assert clustering.clusters == [frozenset({0, 1, 2, 3}), frozenset()]
        assert clustering.attraction[1] == frozenset({0, 1, 2, 3})

    @pytest.mark.parametrize('kind', KINDS)
    def test_partition_and_containment(self, kind):
        """Clusters partition the points and sit inside their attraction sets."""
        rng = np.random.default_rng(0)
        for _ in range(50):
            P = ProblemInstance(A=rng.normal(size=(9, 2)), k=3, gauge=GaugeSet(kind))
            clustering = analysis.natural_clustering(P, rng.normal(size=(3, 2)))
            union = frozenset().union(*clustering.clusters)
            assert union == frozenset(range(9))
            assert sum(len(c) for c in clustering.clusters) == 9
            for cluster, attraction in zip(clustering.clusters, clustering.attraction):
                assert cluster <= attraction


class TestLevelIndexSets:
    """Test L_i computed two ways."""

    def test_square_level_sets(self):
        """Square local solution has singleton level sets."""
        level_sets = analysis.level_index_sets(unit_square(), SQUARE_LOCAL)
        assert level_sets == [frozenset({0}), frozenset({0}), frozenset({1}), frozenset({1})]

    def test_single_center(self):
        """k=1 gives {0} for every point."""
        assert analysis.level_index_sets(triangle(k=1), [[0.2, 0.2]]) == [frozenset({0})] * 3

    def test_equidistant_point(self):
        """A point halfway between two centers has both in its level set."""
        P = ProblemInstance(A=[[0.0, 0.0], [5.0, 5.0]], k=2, gauge=GaugeSet())
        level_sets = analysis.level_index_sets(P, [[1.0, 0.0], [-1.0, 0.0]])
        assert level_sets[0] == frozenset({0, 1})

    @pytest.mark.parametrize('kind', KINDS)
    def test_two_computations_agree(self, kind):
        """Max-sum and attraction definitions give the same sets."""
        rng = np.random.default_rng(1)
        for _ in range(200):
            P = ProblemInstance(A=rng.normal(size=(8, 2)), k=3, gauge=GaugeSet(kind))
            R = gauge_matrix(P, rng.normal(size=(3, 2)))
            assert analysis.level_sets_by_attraction(R) == analysis.level_sets_by_max_sum(R)


class TestSingleSource:
    """Test the single-source solver."""

    @pytest.mark.parametrize('kind', KINDS)
    def test_two_points(self, kind):
        """Two points cost the gauge distance between them."""
        F = GaugeSet(kind, 1.5)
        a, b = np.array([0.2, -1.0]), np.array([1.7, 0.4])
        _, value = analysis.single_source_solve([a, b], F)
        assert value == pytest.approx(gauge_value(F, b - a), abs=1e-8)

    def test_segment_value(self):
        """{(0,0),(1,0)} under l2 has value 1."""
        _, value = analysis.single_source_solve([[0.0, 0.0], [1.0, 0.0]], GaugeSet())
        assert value == pytest.approx(1.0)

    def test_fermat_torricelli(self):
        """{(0,0),(1,0),(1,1)} under l2 has the Fermat-Torricelli value."""
        x, value = analysis.single_source_solve([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]], GaugeSet())
        expected = np.sqrt((2 + np.sqrt(3)) / 2) * np.sqrt(2)
        assert value == pytest.approx(expected, abs=1e-8)
        assert value == pytest.approx(1.93185, abs=1e-5)

    def test_anchor_optimum(self):
        """A data point that dominates is returned exactly."""
        points = [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
        x, value = analysis.single_source_solve(points, GaugeSet())
        assert np.array_equal(x, [0.0, 0.0])
        assert value == pytest.approx(2.0)

    def test_single_point(self):
        """One point costs nothing."""
        x, value = analysis.single_source_solve([[3.0, 4.0]], GaugeSet('l1'))
        assert np.array_equal(x, [3.0, 4.0])
        assert value == 0.0

    def test_empty_rejected(self):
        """No points should raise InvalidInputError."""
        with pytest.raises(InvalidInputError):
            analysis.single_source_solve(np.empty((0, 2)), GaugeSet())

    @pytest.mark.parametrize('kind', KINDS)
    def test_beats_sampled_points(self, kind):
        """No sampled location improves on the returned value."""
        rng = np.random.default_rng(2)
        F = GaugeSet(kind)
        points = rng.normal(size=(7, 2))
        x, value = analysis.single_source_solve(points, F, tol=1e-10)
        candidates = x + rng.normal(scale=0.05, size=(2000, 2))
        values = gauge_value(F, candidates[:, None, :] - points[None, :, :]).sum(axis=1)
        assert np.all(values >= value - 1e-8)

    def test_linf_three_dimensions(self):
        """linf in 3-D is solved exactly; no nearby sample improves it."""
        rng = np.random.default_rng(3)
        F = GaugeSet('linf', 0.7)
        points = rng.normal(size=(6, 3))
        x, value = analysis.single_source_solve(points, F)
        candidates = x + rng.normal(scale=0.05, size=(2000, 3))
        values = gauge_value(F, candidates[:, None, :] - points[None, :, :]).sum(axis=1)
        assert np.all(values >= value - 1e-9)

    def test_linf_four_dimensions_small_perturbations(self):
        """30 uniform points in [0,1]^4: steps of size 1e-3 never improve the value."""
        rng = np.random.default_rng(17)
        F = GaugeSet('linf')
        points = rng.uniform(size=(30, 4))
        x, value = analysis.single_source_solve(points, F)
        directions = rng.normal(size=(5000, 4))
        candidates = x + 1e-3 * directions / np.linalg.norm(directions, axis=1, keepdims=True)
        values = gauge_value(F, candidates[:, None, :] - points[None, :, :]).sum(axis=1)
        assert np.all(values >= value - 1e-9)

    def test_linf_matches_rotated_median_in_two_dimensions(self):
        """The LP and the 2-D closed form agree on the optimal value."""
        rng = np.random.default_rng(8)
        points = rng.normal(size=(25, 2))
        _, closed = analysis.single_source_solve(points, GaugeSet('linf'))
        x = analysis._linf_linprog(points, 1.0)
        lp_value = float(gauge_value(GaugeSet('linf'), x - points).sum())
        assert lp_value == pytest.approx(closed, abs=1e-8)

    def test_large_coordinates_converge(self):
        """Coordinates scaled by 1e5 still meet the relative stop rule."""
        rng = np.random.default_rng(21)
        unit = rng.uniform(size=(400, 2))
        _, unit_value = analysis.single_source_solve(unit, GaugeSet())
        _, scaled_value = analysis.single_source_solve(1e5 * unit, GaugeSet())
        assert scaled_value == pytest.approx(1e5 * unit_value, rel=1e-7)


class TestLocalCertificate:
    """Test the local-optimality certificate."""

    def test_square_local_solution(self):
        """Centers at the edge midpoints are certified local with value 2."""
        certificate = analysis.local_certificate(unit_square(), SQUARE_LOCAL)
        assert certificate.status == 'local'
        assert certificate.is_local is True
        assert certificate.value == pytest.approx(2.0)
        assert all(certificate.is_singleton)

    def test_off_segment_center_not_local(self):
        """A center off the optimal segment has a positive residual."""
        X = np.array([[0.5, 0.0], [0.4, 0.9]])
        certificate = analysis.local_certificate(unit_square(), X)
        assert certificate.status == 'not-local'
        assert certificate.is_local is False
        assert certificate.per_center_residual[1] > 1e-3
        assert certificate.per_center_residual[0] == pytest.approx(0.0, abs=1e-9)

    def test_point_on_segment_is_local(self):
        """Any point of the top edge solves its two-point cluster."""
        certificate = analysis.local_certificate(unit_square(), [[0.5, 0.0], [0.4, 1.0]])
        assert certificate.status == 'local'

    def test_non_singleton_is_inconclusive(self):
        """An equidistant point makes the certificate inconclusive, never false."""
        P = ProblemInstance(A=[[0.0, 0.0], [5.0, 5.0]], k=2, gauge=GaugeSet())
        certificate = analysis.local_certificate(P, [[1.0, 0.0], [-1.0, 0.0]])
        assert certificate.status == 'inconclusive'
        assert certificate.is_local is None

    def test_empty_attraction_set(self):
        """A center attracting nothing has no residual."""
        P = ProblemInstance(A=[[0.0, 0.0], [1.0, 0.0], [0.5, 0.0]], k=2, gauge=GaugeSet())
        certificate = analysis.local_certificate(P, [[0.5, 0.0], [50.0, 50.0]])
        assert certificate.per_center_residual[1] is None
        assert certificate.status == 'local'

    def test_ambiguous_singletons_are_listed(self):
        """Top-two distances within the warning band are flagged."""
        P = ProblemInstance(A=[[0.0, 0.0], [5.0, 5.0]], k=2, gauge=GaugeSet())
        certificate = analysis.local_certificate(P, [[1.0, 0.0], [-1.0 - 1e-12, 0.0]])
        assert 0 in certificate.ambiguous

    def test_oracle_solution_is_local(self):
        """The oracle's global solution passes the certificate."""
        P = unit_square(GaugeSet('linf'))
        X_star, _ = analysis.brute_force_global(P)
        assert analysis.local_certificate(P, X_star).status == 'local'

    def test_linf_four_dimensions(self):
        """The LP optimum is certified; a displaced center is rejected."""
        rng = np.random.default_rng(5)
        P = ProblemInstance(A=rng.uniform(size=(30, 4)), k=1, gauge=GaugeSet('linf'))
        x, best = analysis.single_source_solve(P.A, P.gauge)
        assert analysis.local_certificate(P, [x]).status == 'local'

        directions = rng.normal(size=(200, 4))
        candidates = x + 0.05 * directions / np.linalg.norm(directions, axis=1, keepdims=True)
        values = gauge_value(P.gauge, candidates[:, None, :] - P.A[None, :, :]).sum(axis=1)
        worst = candidates[int(np.argmax(values))]
        assert values.max() - best > 1e-3
        certificate = analysis.local_certificate(P, [worst])
        assert certificate.status == 'not-local'
        assert certificate.per_center_residual[0] == pytest.approx(values.max() - best, abs=1e-9)

    def test_scaled_square_is_local(self):
        """Edge midpoints of a square with side 1e5 are still certified."""
        P = ProblemInstance(A=1e5 * unit_square().A, k=2, gauge=GaugeSet())
        certificate = analysis.local_certificate(P, 1e5 * SQUARE_LOCAL)
        assert certificate.status == 'local'
        assert certificate.value == pytest.approx(2e5)

    def test_scaled_uniform_cloud_certifies_without_error(self):
        """400 uniform points at scale 1e5 give a definite status."""
        rng = np.random.default_rng(22)
        A = 1e5 * rng.uniform(size=(400, 2))
        P = ProblemInstance(A=A, k=1, gauge=GaugeSet())
        x, _ = analysis.single_source_solve(A, P.gauge)
        assert analysis.local_certificate(P, [x]).status == 'local'

    def test_local_solution_survives_perturbation(self):
        """No sampled point in a small ball improves a certified local solution."""
        P = unit_square()
        certificate = analysis.local_certificate(P, SQUARE_LOCAL)
        assert certificate.status == 'local'
        rng = np.random.default_rng(4)
        for _ in range(1000):
            direction = rng.normal(size=SQUARE_LOCAL.shape)
            X = SQUARE_LOCAL + 1e-3 * rng.uniform() * direction / np.linalg.norm(direction)
            assert objective_true(P, X) >= certificate.value - 1e-12


class TestOracle:
    """Test the brute-force global oracle."""

    def test_partition_count(self):
        """Surjective labelings are counted by Stirling numbers of the second kind."""
        assert len(list(analysis.surjective_partitions(4, 2))) == 7
        assert len(list(analysis.surjective_partitions(5, 3))) == 25
        assert list(analysis.surjective_partitions(3, 3)) == [(0, 1, 2)]

    def test_triangle(self):
        """Triangle with two centers has optimum 1."""
        _, value = analysis.brute_force_global(triangle())
        assert value == pytest.approx(1.0)

    def test_square_l1(self):
        """l1 square optimum is 2 with centers on opposite edges."""
        X_star, value = analysis.brute_force_global(unit_square(GaugeSet('l1')))
        assert value == pytest.approx(2.0, abs=1e-6)
        ys = sorted(X_star[:, 1])
        xs = sorted(X_star[:, 0])
        assert ys == pytest.approx([0.0, 1.0]) or xs == pytest.approx([0.0, 1.0])

    def test_square_linf(self):
        """linf square optimum is 1.5 with a center at (0.5, 0.5)."""
        X_star, value = analysis.brute_force_global(unit_square(GaugeSet('linf')))
        assert value == pytest.approx(1.5, abs=1e-9)
        assert np.min(np.linalg.norm(X_star - [0.5, 0.5], axis=1)) <= 1e-9

    def test_square_l2_below_local_value(self):
        """l2 square optimum beats the local value 2 and matches the Fermat-Torricelli split."""
        _, value = analysis.brute_force_global(unit_square())
        assert value <= 1.9319
        assert value == pytest.approx(1.93185, abs=1e-4)
        assert value <= objective_true(unit_square(), [[0.2, 0.2], [1.0, 1.0]])

    def test_parallel_matches_serial(self):
        """Thread workers give the same optimum."""
        P = ProblemInstance(A=np.random.default_rng(5).normal(size=(7, 2)), k=3, gauge=GaugeSet())
        assert analysis.brute_force_global(P, workers=4)[1] == pytest.approx(analysis.brute_force_global(P)[1])

    def test_size_guard(self):
        """k**m above the guard is refused."""
        P = ProblemInstance(A=np.random.default_rng(6).normal(size=(21, 2)), k=2, gauge=GaugeSet())
        with pytest.raises(SizeGuardError):
            analysis.brute_force_global(P)

    def test_constrained_rejected(self):
        """Constrained instances are not enumerated."""
        P = ProblemInstance(A=triangle().A, k=1, gauge=GaugeSet(),
                            constraints=((ConvexRegion.ball((0.0, 0.0), 1.0),),))
        with pytest.raises(InvalidInputError):
            analysis.brute_force_global(P)

    @pytest.mark.parametrize('kind', KINDS)
    def test_clusters_nonempty_and_centers_distinct(self, kind):
        """Optimal solutions use every center at pairwise distinct locations."""
        rng = np.random.default_rng(7)
        for _ in range(15):
            m, k = int(rng.integers(4, 8)), int(rng.integers(2, 4))
            P = ProblemInstance(A=rng.uniform(size=(m, 2)), k=k, gauge=GaugeSet(kind))
            X_star, _ = analysis.brute_force_global(P)
            clustering = analysis.natural_clustering(P, X_star)
            assert all(clustering.clusters)
            for i in range(k):
                for j in range(i + 1, k):
                    assert not np.allclose(X_star[i], X_star[j])

    @pytest.mark.slow
    @pytest.mark.parametrize('kind', KINDS)
    def test_multistart_matches_oracle(self, kind):
        """Ten abdca-skip starts reach the oracle value on most instances and never beat it."""
        rng = np.random.default_rng(8)
        hits = 0
        instances = 10
        for index in range(instances):
            m, k = int(rng.integers(4, 9)), int(rng.integers(2, 4))
            P = ProblemInstance(A=rng.uniform(size=(m, 2)), k=k, gauge=GaugeSet(kind))
            _, f_star = analysis.brute_force_global(P)
            best = min(
                solve(P, random_init(P, None, index, run), SolverParams(), variant='abdca-skip').value
                for run in range(10)
            )
            assert best >= f_star - 1e-6
            if best <= f_star * (1 + 1e-3):
                hits += 1
        assert hits >= 0.8 * instances
