"""Mixed volumes of body pairs and their functional extensions."""

import math

import numpy as np
import pytest
from scipy import integrate

from lpcentroid import (Ellipsoid, NumericFailure, Polytope, RadialField,
                        SphereGrid, bump_profile, centroid_normalization,
                        cone_profile, dual_mixed_volume, functional_mixed_volume,
                        indicator_profile, level_mixed_volume, lq_norm,
                        mixed_volume, moment_body, polar_projection_body,
                        sobolev_profile, support_dual_integral,
                        surface_measure_atoms)
from lpcentroid.verify import random_polygon


class TestSurfaceMeasureAtoms:
    def test_polygon_closedness(self, rng):
        poly = random_polygon(rng)
        atoms = surface_measure_atoms(poly, 1.0)
        resultant = atoms.weights @ atoms.normals
        np.testing.assert_allclose(resultant, 0.0, atol=1e-10)
        assert np.all(atoms.weights > 0)

    def test_square_atoms(self, square):
        atoms = surface_measure_atoms(square, 2.0)
        # four edges of length 2, h = 1, weight = 2 * 1^(1-2) = 2
        np.testing.assert_allclose(np.sort(atoms.weights), 2.0)

    def test_sampled_wedge_atoms(self, disk):
        sampled = disk.as_support_sampled(SphereGrid.circle(256))
        atoms = surface_measure_atoms(sampled, 1.0)
        assert atoms.total_mass == pytest.approx(2 * math.pi, rel=1e-3)
        np.testing.assert_allclose(atoms.weights @ atoms.normals, 0.0, atol=1e-10)


class TestMixedVolume:
    def test_self_mixed_volume_is_volume(self, square, rng):
        for r in (1.0, 1.7, 2.5):
            assert mixed_volume(square, square, r) == pytest.approx(4.0, rel=1e-12)
        poly = random_polygon(rng)
        assert mixed_volume(poly, poly, 1.3) == pytest.approx(poly.volume(),
                                                              rel=1e-12)

    def test_square_disk_exact(self, square, disk):
        val = mixed_volume(square, disk, 1.0)
        assert val == pytest.approx(4.0, rel=1e-12)
        assert val >= math.sqrt(square.volume() * disk.volume()) - 1e-12

    def test_disk_dilate_r2(self, disk):
        val = mixed_volume(disk, Ellipsoid.ball(2, 2.0), 2.0)
        assert val == pytest.approx(4 * math.pi, rel=1e-8)

    def test_dilate_equality_case(self, rng):
        poly = random_polygon(rng)
        c = 1.7
        dil = poly.linear_image(c * np.eye(2))
        for r in (1.0, 2.0):
            lhs = mixed_volume(poly, dil, r)
            rhs = poly.volume() ** ((2 - r) / 2) * dil.volume() ** (r / 2)
            assert lhs == pytest.approx(rhs, rel=1e-4)

    def test_lower_bound_random_pairs(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            k, l = random_polygon(rng), random_polygon(rng)
            for r in (1.0, 1.5):
                lhs = mixed_volume(k, l, r)
                rhs = k.volume() ** ((2 - r) / 2) * l.volume() ** (r / 2)
                assert lhs >= rhs * (1 - 1e-3)

    def test_atomic_vs_finite_difference(self):
        from lpcentroid.mixed import _atomic_mixed_volume, _fd_mixed_volume
        grid = SphereGrid.circle(1024)
        for seed in range(10):
            rng = np.random.default_rng(seed)
            k, l = random_polygon(rng), random_polygon(rng)
            r = float(rng.uniform(1.0, 2.5))
            atomic = _atomic_mixed_volume(k, l, r)
            fd = _fd_mixed_volume(k, l, r, grid)
            assert fd == pytest.approx(atomic, rel=1e-3)

    def test_curvature_path_on_ellipses(self):
        k = Ellipsoid(np.array([[1.2, 0.0], [0.3, 0.8]]))
        l = Ellipsoid(np.diag([0.9, 1.4]))
        val = mixed_volume(k, l, 1.0)
        # symmetric mixed volume: V_1(K, L) vol-form is symmetric in 2D
        val_rev = mixed_volume(l.as_support_sampled(SphereGrid.circle(1024)),
                               k, 1.0)
        assert val == pytest.approx(val_rev, rel=1e-5)

    def test_cross_check_catches_bad_route(self, square):
        # spectral curvature differentiation assumes a smooth support; feeding
        # it a polygon must trip the finite-difference cross-check
        sampled = square.as_support_sampled(SphereGrid.circle(64))
        with pytest.raises(NumericFailure):
            mixed_volume(sampled, Ellipsoid.ball(2), 2.5,
                         grid=SphereGrid.circle(64), method="curvature")

    def test_validation(self, square, disk):
        with pytest.raises(ValueError):
            mixed_volume(square, disk, 0.5)
        with pytest.raises(ValueError):
            mixed_volume(square, disk, 1.0, method="nope")


class TestFunctionalMixedVolume:
    def test_cone_against_disk(self, cone_field, disk):
        assert functional_mixed_volume(cone_field, disk, 1.0) == pytest.approx(
            math.pi / 2, rel=1e-10)

    def test_cone_against_square(self, cone_field, square):
        assert functional_mixed_volume(cone_field, square, 1.0) == pytest.approx(
            2.0, rel=1e-5)

    def test_grid_route_agrees(self, cone_field, square):
        gf = cone_field.rasterized(shape=256)
        assert functional_mixed_volume(gf, square, 1.0) == pytest.approx(
            2.0, rel=1e-2)

    def test_normalized_profile_recovers_body_mixed_volume(self, rng):
        # f = F(||x||_L) with unit gradient-power integral satisfies
        # V_r(f, K) = V_r(L, K)
        n, r = 2, 1.5
        ell = Ellipsoid(np.array([[1.2, 0.2], [0.0, 0.8]]))
        prof = sobolev_profile(n, r)
        norm, _ = integrate.quad(lambda t: t ** (n - 1) * abs(prof.slope(t)) ** r,
                                 0, np.inf, limit=300)
        f = RadialField(prof.scaled(norm ** (-1.0 / r)), ell)
        k = random_polygon(rng)
        lhs = functional_mixed_volume(f, k, r)
        rhs = mixed_volume(ell, k, r)
        assert lhs == pytest.approx(rhs, rel=1e-2)

    def test_degenerate_field_warns(self, disk):
        from lpcentroid import GridField
        flat = GridField(-1.0, 1.0, np.zeros((32, 32)))
        with pytest.warns(UserWarning):
            assert functional_mixed_volume(flat, disk, 1.5) == 0.0


class TestLevelMixedVolume:
    def test_cone_golden_value(self, cone_field, disk):
        for r in (1.0, 1.5, 2.3):
            assert level_mixed_volume(cone_field, 0.5, disk, r) == pytest.approx(
                math.pi / 2, rel=1e-10)

    def test_above_peak_is_zero(self, cone_field, disk):
        assert level_mixed_volume(cone_field, 2.0, disk, 1.0) == 0.0

    def test_q_scaling(self, cone_field, square):
        r = 1.5
        base = level_mixed_volume(cone_field, 0.4, square, r)
        scaled = level_mixed_volume(cone_field, 0.4,
                                    square.linear_image(3.0 * np.eye(2)), r)
        assert scaled == pytest.approx(3.0 ** r * base, rel=1e-10)

    def test_coarea_radial(self, square):
        # integral over t of the level form recovers the bulk form
        f = RadialField(bump_profile(), Ellipsoid(np.diag([1.1, 0.8])))
        r = 1.5
        bulk = functional_mixed_volume(f, square, r)
        total, _ = integrate.quad(
            lambda t: level_mixed_volume(f, t, square, r), 0, 1, limit=200)
        assert total == pytest.approx(bulk, rel=1e-6)

    def test_coarea_grid(self, square):
        f = RadialField(bump_profile(), Ellipsoid(np.diag([1.1, 0.8])))
        gf = f.rasterized(shape=256)
        r = 1.5
        bulk = functional_mixed_volume(gf, square, r)
        levels = (np.arange(64) + 0.5) / 64
        total = sum(level_mixed_volume(gf, t, square, r) for t in levels) / 64
        assert total == pytest.approx(bulk, rel=1e-2)

    def test_irregular_level_warns(self, disk):
        f = RadialField(indicator_profile(), disk)
        with pytest.warns(UserWarning):
            level_mixed_volume(f, 0.5, disk, 1.5)


class TestDualMixedVolume:
    def test_disk_indicator(self, disk):
        g = RadialField(indicator_profile(), disk)
        assert dual_mixed_volume(g, disk, 2.0) == pytest.approx(math.pi / 2,
                                                                rel=1e-10)

    def test_gauge_homogeneity(self, cone_field, disk):
        base = dual_mixed_volume(cone_field, disk, 2.0)
        double = dual_mixed_volume(cone_field, Ellipsoid.ball(2, 2.0), 2.0)
        assert double == pytest.approx(base / 4.0, rel=1e-10)

    def test_linearity_in_field(self, cone_field, square):
        base = dual_mixed_volume(cone_field, square, 1.0)
        scaled = dual_mixed_volume(
            RadialField(cone_field.profile.scaled(3.0), cone_field.gauge_body),
            square, 1.0)
        assert scaled == pytest.approx(3.0 * base, rel=1e-10)

    def test_grid_route(self, cone_field, disk):
        gf = cone_field.rasterized(shape=256)
        exact = dual_mixed_volume(cone_field, disk, 2.0)
        assert dual_mixed_volume(gf, disk, 2.0) == pytest.approx(exact, rel=1e-2)


class TestPolarProjectionBody:
    def test_cone_p2(self, cone_field):
        body = polar_projection_body(cone_field, 2.0)
        np.testing.assert_allclose(body.values, math.sqrt(math.pi / 2), rtol=1e-10)

    def test_rotation_covariance(self, cone_field):
        phi = 0.7
        rot = np.array([[math.cos(phi), -math.sin(phi)],
                        [math.sin(phi), math.cos(phi)]])
        ell = Ellipsoid(np.diag([1.3, 0.8]))
        f = RadialField(bump_profile(), ell)
        f_rot = RadialField(bump_profile(), ell.linear_image(rot))
        b = polar_projection_body(f, 2.0)
        b_rot = polar_projection_body(f_rot, 2.0)
        xi = np.array([0.6, 0.8])
        assert b_rot.support(xi) == pytest.approx(b.support(rot.T @ xi), rel=1e-4)

    def test_grid_route(self, cone_field):
        gf = cone_field.rasterized(shape=256)
        body = polar_projection_body(gf, 2.0)
        np.testing.assert_allclose(body.values, math.sqrt(math.pi / 2), rtol=1e-2)

    def test_fubini_orders_agree(self, rng):
        # (1/n) int int g(y) |<grad f(x), y>|^p dy dx via both orders
        from lpcentroid.verify import random_field
        f = random_field(rng, shape=160)
        g = random_field(rng, shape=160)
        p = 2.0
        circle = SphereGrid.circle(1024)
        mg = moment_body(g, p, circle)
        order_a = 2.0 * functional_mixed_volume(f, mg, p)
        order_b = support_dual_integral(g, polar_projection_body(f, p, circle), p)
        assert order_a == pytest.approx(order_b, rel=1e-3)


class TestCompactDomainMixedVolume:
    def _star_polygon(self, rng, m=14):
        theta = np.sort(rng.uniform(0, 2 * math.pi, m))
        theta += np.linspace(0, 1e-6, m)  # strict ordering
        radii = rng.uniform(0.4, 1.4, m)
        return np.column_stack([radii * np.cos(theta), radii * np.sin(theta)])

    @staticmethod
    def _polygon_area(pts):
        x, y = pts[:, 0], pts[:, 1]
        return 0.5 * abs(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @staticmethod
    def _mixed_volume_r1(pts, body):
        total = 0.0
        for a, b in zip(pts, np.roll(pts, -1, axis=0)):
            edge = b - a
            length = np.linalg.norm(edge)
            if length == 0:
                continue
            normal = np.array([edge[1], -edge[0]]) / length
            total += body.support(normal) * length
        return total / 2.0

    def test_domain_mixed_volume_bound(self, rng):
        # V_1(M, K)^n >= vol(M)^(n-1) vol(K) for star-shaped compact domains
        for seed in range(10):
            local = np.random.default_rng(seed)
            pts = self._star_polygon(local)
            if self._polygon_area(pts) < 0.2:
                continue
            body = random_polygon(local)
            v1 = self._mixed_volume_r1(pts, body)
            lhs = v1 ** 2
            rhs = self._polygon_area(pts) * body.volume()
            assert lhs >= rhs * (1 - 1e-2)


class TestMomentMixedBound:
    def test_pp_reduces_to_bp(self, rng, circle):
        # with L = M_p K the moment-mixed bound collapses to the centroid bound
        k = random_polygon(rng)
        p, r = 2.0, 1.5
        mk = moment_body(k, p, circle)
        lhs = mixed_volume(mk, mk, r)
        assert lhs == pytest.approx(mk.volume(), rel=1e-10)
        n = 2
        rhs = (centroid_normalization(n, p) ** (r / p)
               * mk.volume() ** ((n - r) / n)
               * k.volume() ** ((n + p) * r / (n * p)))
        bp_deficit = (lhs / rhs) ** (n / r)
        vol_ratio = mk.volume() / (
            centroid_normalization(n, p) ** (n / p)
            * k.volume() ** ((n + p) / p))
        assert bp_deficit == pytest.approx(vol_ratio, rel=1e-9)
