import math

import numpy as np
import pytest

from copbalance import ingest, phase
from copbalance.errors import (
    DegenerateConfiguration,
    DegenerateTrajectory,
    EmptyLocus,
    TooFewSamples,
)

SQ2 = math.sqrt(2.0)

CIRCLE_POINTS = np.array(
    [(1, 0), (0, 1), (-1, 0), (0, -1), (SQ2 / 2, SQ2 / 2)], dtype=float
)


def random_origin_ellipse(rng):
    """Random ellipse passing through the origin, with its exact axis
    extremes; the five points (extremes + origin) lie on it."""
    a, b = sorted(rng.uniform(0.3, 3.0, 2), reverse=True)
    phi = rng.uniform(0.0, math.pi)
    t0 = rng.uniform(0.0, 2.0 * math.pi)
    rot = np.array([[math.cos(phi), -math.sin(phi)],
                    [math.sin(phi), math.cos(phi)]])
    center = -(rot @ np.array([a * math.cos(t0), b * math.sin(t0)]))
    conic = phase.ConicMap.from_ellipse(tuple(center), (a, b), phi)

    def at(t):
        return center + rot @ np.array([a * math.cos(t), b * math.sin(t)])

    tx = math.atan2(-b * math.sin(phi), a * math.cos(phi))
    ty = math.atan2(b * math.cos(phi), a * math.sin(phi))
    x1, x2 = at(tx), at(tx + math.pi)
    y1, y2 = at(ty), at(ty + math.pi)
    xmax, xmin = (x1, x2) if x1[0] >= x2[0] else (x2, x1)
    ymax, ymin = (y1, y2) if y1[1] >= y2[1] else (y2, y1)
    points = np.array([xmax, ymax, xmin, ymin, [0.0, 0.0]])
    return conic, points


def ellipse_locus(conic, n):
    center, semi, vecs = phase._ellipse_geometry(conic)
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return center + np.column_stack(
        [semi[0] * np.cos(th), semi[1] * np.sin(th)]) @ vecs.T


def brute_force_distance(p, locus):
    return float(np.min(np.linalg.norm(locus - np.asarray(p), axis=1)))


class TestTrajectory:
    def test_mean_centering(self):
        traj = phase.trajectory_from_cop(
            np.array([[1, 2], [3, 4], [5, 6]], float), 100.0)
        np.testing.assert_allclose(
            traj.points, [[-2, -2], [0, 0], [2, 2]], atol=1e-12)

    def test_full_trial(self, quiet_text):
        trial = ingest.parse_trial(quiet_text)
        traj = phase.build_trajectory(trial)
        assert len(traj) == 6000
        assert traj.dt == pytest.approx(0.01)
        np.testing.assert_allclose(traj.points.mean(axis=0), 0.0, atol=1e-9)

    def test_single_sample_rejected(self):
        trial = ingest.parse_trial(
            "# id: X\n# sample_rate: 100\n0.0 0 0 700 0 0 0 1.0 2.0\n")
        with pytest.raises(TooFewSamples):
            phase.build_trajectory(trial)


class TestExtractPoincare:
    def test_unit_circle(self):
        th = np.linspace(0, 2 * np.pi, 360, endpoint=False)
        pts = np.column_stack([np.cos(th), np.sin(th)])
        traj = phase.PhaseTrajectory(points=pts - pts.mean(axis=0), dt=0.01)
        ps = phase.extract_poincare_points(traj)
        grid = 2 * np.pi / 360
        np.testing.assert_allclose(ps.p_xmax, [1, 0], atol=grid)
        np.testing.assert_allclose(ps.p_ymax, [0, 1], atol=grid)
        np.testing.assert_allclose(ps.p_xmin, [-1, 0], atol=grid)
        np.testing.assert_allclose(ps.p_ymin, [0, -1], atol=grid)
        assert ps.p_origin == (0.0, 0.0)

    def test_axis_aligned_ellipse(self):
        th = np.linspace(0, 2 * np.pi, 720, endpoint=False)
        pts = np.column_stack([2 * np.cos(th), np.sin(th)])
        traj = phase.PhaseTrajectory(points=pts, dt=0.01)
        ps = phase.extract_poincare_points(traj)
        np.testing.assert_allclose(ps.p_xmax, [2, 0], atol=0.01)
        np.testing.assert_allclose(ps.p_ymax, [0, 1], atol=0.01)
        np.testing.assert_allclose(ps.p_xmin, [-2, 0], atol=0.01)
        np.testing.assert_allclose(ps.p_ymin, [0, -1], atol=0.01)

    def test_tie_breaks_to_first_occurrence(self):
        pts = np.array([[1, 0], [0, 2], [1, 1], [-1, 0], [0, -2], [-1, -1]],
                       dtype=float)
        ps = phase.extract_poincare_points(
            phase.PhaseTrajectory(points=pts, dt=1.0))
        assert tuple(ps.p_xmax) == (1.0, 0.0)  # not the later (1, 1)

    def test_degenerate(self):
        pts = np.tile([[0.5, 0.5]], (10, 1))
        with pytest.raises(DegenerateTrajectory):
            phase.extract_poincare_points(
                phase.PhaseTrajectory(points=pts, dt=1.0))


class TestFitConic:
    def test_unit_circle_identity(self):
        conic = phase.fit_conic(CIRCLE_POINTS)
        expected = np.array([1, 0, 1, 0, 0, -1]) / math.sqrt(3)
        np.testing.assert_allclose(conic.coeffs, expected, atol=1e-12)

    def test_axis_aligned_ellipse_identity(self):
        pts = np.array([(2, 0), (0, 1), (-2, 0), (0, -1), (SQ2, SQ2 / 2)])
        conic = phase.fit_conic(pts)
        expected = np.array([0.25, 0, 1, 0, 0, -1])
        expected /= np.linalg.norm(expected)
        np.testing.assert_allclose(conic.coeffs, expected, atol=1e-12)

    def test_collinear_degenerate(self):
        pts = np.column_stack([np.arange(5.0), 2 * np.arange(5.0) + 1])
        with pytest.raises(DegenerateConfiguration):
            phase.fit_conic(pts)

    def test_duplicate_point_degenerate(self):
        pts = CIRCLE_POINTS.copy()
        pts[4] = pts[0]
        with pytest.raises(DegenerateConfiguration):
            phase.fit_conic(pts)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(3)
        conic, points = random_origin_ellipse(rng)
        base = phase.fit_conic(points)
        for _ in range(10):
            perm = rng.permutation(5)
            again = phase.fit_conic(points[perm])
            np.testing.assert_allclose(again.coeffs, base.coeffs, atol=1e-9)

    def test_recovers_generating_ellipse(self):
        rng = np.random.default_rng(4)
        for _ in range(25):
            conic, points = random_origin_ellipse(rng)
            fitted = phase.fit_conic(points)
            np.testing.assert_allclose(fitted.coeffs, conic.coeffs, atol=1e-7)
            residual = np.abs(fitted.evaluate(points))
            assert np.max(residual) < 1e-9

    def test_all_points_satisfy_equation(self):
        conic = phase.fit_conic(CIRCLE_POINTS)
        assert np.max(np.abs(conic.evaluate(CIRCLE_POINTS))) < 1e-9

    def test_json_round_trip(self):
        conic = phase.fit_conic(CIRCLE_POINTS)
        again = phase.ConicMap.from_dict(conic.to_dict())
        assert again == conic


class TestDistance:
    def test_radial_from_circle(self):
        circle = phase.ConicMap.from_ellipse(semi_axes=(1.0, 1.0))
        assert phase.distance_to_conic((2, 0), circle) == pytest.approx(1.0, abs=1e-9)

    def test_membership_is_zero(self):
        conic = phase.ConicMap.from_ellipse((0.3, -0.2), (2.0, 0.7), 0.5)
        locus = ellipse_locus(conic, 17)
        for q in locus:
            assert phase.distance_to_conic(q, conic) < 1e-9

    def test_ellipse_interior_probe(self):
        # nearest point is the minor vertex; the off-axis stationary
        # candidate (sin t = -1/6) sits farther
        e = phase.ConicMap.from_ellipse(semi_axes=(2.0, 1.0))
        assert phase.distance_to_conic((0, 0.5), e) == pytest.approx(0.5, abs=1e-9)
        t = math.asin(-1.0 / 6.0)
        other = math.hypot(2 * math.cos(t) - 0, math.sin(t) - 0.5)
        assert other > 0.5

    def test_brute_force_agreement(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            center = rng.uniform(-3, 3, 2)
            semi = rng.uniform(0.2, 3.0, 2)
            ang = rng.uniform(0, np.pi)
            conic = phase.ConicMap.from_ellipse(tuple(center), tuple(semi), ang)
            locus = ellipse_locus(conic, 100_000)
            for p in rng.uniform(-5, 5, (20, 2)):
                ours = phase.distance_to_conic(p, conic)
                brute = brute_force_distance(p, locus)
                assert abs(ours - brute) < 1e-4

    def test_parabola(self):
        # y = x^2; probe (0, 2): stationary points x=0 and x^2=1.5
        par = phase.ConicMap.from_coefficients((1, 0, 0, 0, -1, 0))
        expected = math.sqrt(1.5 + 0.25)
        assert phase.distance_to_conic((0, 2), par) == pytest.approx(
            expected, abs=1e-6)
        xs = np.linspace(-10, 10, 400_001)
        brute = np.min(np.hypot(xs - 0, xs * xs - 2))
        assert phase.distance_to_conic((0, 2), par) == pytest.approx(
            float(brute), abs=1e-4)

    def test_hyperbola(self):
        # x^2 - y^2 = 1, probe at origin: nearest vertices (+-1, 0)
        hyp = phase.ConicMap.from_coefficients((1, 0, -1, 0, 0, -1))
        assert phase.distance_to_conic((0, 0), hyp) == pytest.approx(1.0, abs=1e-6)

    def test_degenerate_line_pair(self):
        # xy = 0: the two axes; distance is min(|x|, |y|)
        cross = phase.ConicMap.from_coefficients((0, 1, 0, 0, 0, 0))
        assert phase.distance_to_conic((3.0, 0.7), cross) == pytest.approx(
            0.7, abs=1e-6)

    def test_empty_locus(self):
        imaginary = phase.ConicMap.from_coefficients((1, 0, 1, 0, 0, 1))
        with pytest.raises(EmptyLocus):
            phase.distance_to_conic((0, 0), imaginary)

    def test_nonnegative_and_zero_iff_on_curve(self):
        rng = np.random.default_rng(6)
        conic = phase.ConicMap.from_ellipse((1.0, -0.5), (1.5, 0.8), 0.3)
        for p in rng.uniform(-4, 4, (50, 2)):
            d = phase.distance_to_conic(p, conic)
            assert d >= 0.0
            if d < 1e-6:  # zero distance only for points on the curve
                assert abs(float(conic.evaluate(p))) < 1e-5
        for q in ellipse_locus(conic, 29):
            assert phase.distance_to_conic(q, conic) < 1e-9
            assert abs(float(conic.evaluate(q))) < 1e-12

    def test_exterior_distance(self):
        e = phase.ConicMap.from_ellipse(semi_axes=(2.0, 1.0))
        assert phase.exterior_distance((0.0, 0.5), e) == 0.0
        assert phase.exterior_distance((0.0, 0.0), e) == 0.0
        assert phase.exterior_distance((3.0, 0.0), e) == pytest.approx(1.0, abs=1e-9)
        # no bounded interior: falls back to plain distance
        cross = phase.ConicMap.from_coefficients((0, 1, 0, 0, 0, 0))
        assert phase.exterior_distance((3.0, 0.7), cross) == pytest.approx(
            0.7, abs=1e-6)

    def test_point_set_metric(self):
        ps = phase.PoincareSet(p_xmax=(1, 0), p_ymax=(0, 1), p_xmin=(-1, 0),
                               p_ymin=(0, -1))
        assert phase.distance_to_point_set((2, 0), ps) == pytest.approx(1.0)
        assert phase.distance_to_point_set((0.1, 0.1), ps) == pytest.approx(
            math.hypot(0.1, 0.1))

    def test_batch_series_matches_scalar_path(self):
        rng = np.random.default_rng(21)
        for _ in range(5):
            center = rng.uniform(-2, 2, 2)
            semi = rng.uniform(0.3, 2.5, 2)
            ang = rng.uniform(0, np.pi)
            conic = phase.ConicMap.from_ellipse(tuple(center), tuple(semi), ang)
            pts = rng.uniform(-4, 4, (200, 2))
            batch = phase.distance_series(pts, conic, metric="curve")
            scalar = np.array([phase.distance_to_conic(p, conic) for p in pts])
            np.testing.assert_allclose(batch, scalar, atol=1e-9)

    def test_batch_series_matches_brute_force(self):
        rng = np.random.default_rng(22)
        conic = phase.ConicMap.from_ellipse((0.8, -1.2), (2.2, 0.9), 0.7)
        locus = ellipse_locus(conic, 100_000)
        pts = rng.uniform(-5, 5, (100, 2))
        batch = phase.distance_series(pts, conic, metric="curve")
        brute = np.array([brute_force_distance(p, locus) for p in pts])
        np.testing.assert_allclose(batch, brute, atol=1e-4)

    def test_batch_series_nonelliptical_matches_scalar(self):
        rng = np.random.default_rng(23)
        cases = [
            phase.ConicMap.from_coefficients((1, 0, -1, 0, 0, -1)),  # hyperbola
            phase.ConicMap.from_coefficients((1, 0, 0, 0, -1, 0)),   # parabola
            phase.ConicMap.from_coefficients((0, 1, 0, 0, 0, 0)),    # line pair
            phase.ConicMap.from_coefficients((0.3, 1.1, 0.4, -0.2, 0.1, 0.05)),
        ]
        for conic in cases:
            assert conic.kind in ("hyperbola", "parabola", "degenerate")
            pts = rng.uniform(-4, 4, (120, 2))
            batch = phase.distance_series(pts, conic, metric="curve")
            scalar = np.array([phase.distance_to_conic(p, conic) for p in pts])
            np.testing.assert_allclose(batch, scalar, atol=1e-6)

    def test_batch_series_hyperbola_matches_dense_sampling(self):
        conic = phase.ConicMap.from_coefficients((1, 0, -1, 0, 0, -1))
        ts = np.linspace(-5, 5, 2_000_001)
        branch = np.column_stack([np.cosh(ts), np.sinh(ts)])
        locus = np.vstack([branch, branch * [-1, 1]])
        rng = np.random.default_rng(24)
        pts = rng.uniform(-3, 3, (50, 2))
        batch = phase.distance_series(pts, conic, metric="curve")
        for p, got in zip(pts, batch):
            brute = float(np.min(np.linalg.norm(locus - p, axis=1)))
            assert abs(got - brute) < 1e-4

    def test_distance_series_metrics(self):
        conic = phase.ConicMap.from_ellipse(semi_axes=(1.0, 1.0))
        ps = phase.PoincareSet(p_xmax=(1, 0), p_ymax=(0, 1), p_xmin=(-1, 0),
                               p_ymin=(0, -1))
        pts = np.array([[2.0, 0.0], [0.0, 3.0]])
        np.testing.assert_allclose(
            phase.distance_series(pts, conic, metric="curve"), [1.0, 2.0],
            atol=1e-9)
        np.testing.assert_allclose(
            phase.distance_series(pts, conic, metric="points", poincare=ps),
            [1.0, 2.0], atol=1e-12)


class TestRigidMotionInvariance:
    def test_pipeline_commutes_with_rigid_motion(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            _, points = random_origin_ellipse(rng)
            probe = rng.uniform(-2, 2, 2)
            base = phase.distance_to_conic(probe, phase.fit_conic(points))

            ang = rng.uniform(0, 2 * np.pi)
            rot = np.array([[math.cos(ang), -math.sin(ang)],
                            [math.sin(ang), math.cos(ang)]])
            shift = rng.uniform(-5, 5, 2)
            moved = points @ rot.T + shift
            moved_probe = rot @ probe + shift
            transformed = phase.distance_to_conic(
                moved_probe, phase.fit_conic(moved))
            assert transformed == pytest.approx(base, abs=1e-6)


class TestLogistic:
    def test_fixed_point_half(self):
        seq = phase.logistic_iterate(phase.LogisticParams(r=2.0, x0=0.5), 10)
        np.testing.assert_array_equal(seq, np.full(11, 0.5))

    def test_lands_on_fixed_point(self):
        seq = phase.logistic_iterate(phase.LogisticParams(r=4.0, x0=0.25), 3)
        np.testing.assert_allclose(seq, [0.25, 0.75, 0.75, 0.75], atol=1e-15)

    def test_period_two_cycle(self):
        r = 3.2
        seq = phase.logistic_iterate(phase.LogisticParams(r=r, x0=0.123), 1100)
        tail = np.sort(np.unique(np.round(seq[-20:], 6)))
        lo = ((r + 1) - math.sqrt((r + 1) * (r - 3))) / (2 * r)
        hi = ((r + 1) + math.sqrt((r + 1) * (r - 3))) / (2 * r)
        assert abs(tail[0] - lo) < 1e-3
        assert abs(tail[-1] - hi) < 1e-3

    def test_interval_preserved_over_parameter_grid(self):
        for r in np.linspace(0, 4, 17):
            for x0 in np.linspace(0, 1, 11):
                seq = phase.logistic_iterate(
                    phase.LogisticParams(r=float(r), x0=float(x0)), 200)
                assert np.all(seq >= 0.0) and np.all(seq <= 1.0)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            phase.LogisticParams(r=4.5, x0=0.5)
        with pytest.raises(ValueError):
            phase.LogisticParams(r=2.0, x0=1.5)
        with pytest.raises(ValueError):
            phase.logistic_iterate(phase.LogisticParams(r=2.0, x0=0.5), -1)
