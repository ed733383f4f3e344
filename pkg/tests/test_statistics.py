"""Smooth statistics: test functions, bipotential profile, variance, experiments."""

import math

import numpy as np
import pytest

from bergman_zeros import disc, sections, experiments
from bergman_zeros.disc import Annulus, make_disc_space
from bergman_zeros.statistics import (
    APERY,
    Gtilde,
    TestFunction,
    _gtilde_fast,
    _gtilde_integral,
    _gtilde_series,
    laplacian_ratio,
    normalized_kernel_grid,
    sodin_tsirelson_proxy,
    variance_bipotential,
    variance_leading_term,
)


class TestTestFunction:
    def test_support_and_flat_endpoints(self):
        phi = TestFunction(0.3, 0.6)
        for r in (0.3, 0.6, 0.299, 0.601, 0.1, 0.9):
            assert phi.value(r) == 0.0
            assert phi.d1(r) == 0.0
            assert phi.d2(r) == 0.0
        assert phi.value(0.45) == pytest.approx(1.0)
        eps = 1e-7
        assert phi.value(0.3 + eps) < 1e-10  # all derivatives vanish at the edge

    def test_derivatives_by_finite_difference(self):
        phi = TestFunction(0.3, 0.6, amplitude=1.7)
        h = 1e-6
        for r in (0.38, 0.45, 0.52):
            d1 = (phi.value(r + h) - phi.value(r - h)) / (2 * h)
            d2 = (phi.value(r + h) - 2 * phi.value(r) + phi.value(r - h)) / h**2
            assert float(phi.d1(r)) == pytest.approx(d1, rel=1e-7, abs=1e-9)
            assert float(phi.d2(r)) == pytest.approx(d2, rel=1e-4, abs=1e-6)

    def test_rejects_bad_support(self):
        with pytest.raises(ValueError):
            TestFunction(0.6, 0.3)


class TestLaplacianRatio:
    def test_zero_outside_support(self):
        phi = TestFunction(0.3, 0.6)
        assert laplacian_ratio(phi, 0.7) == 0.0
        assert laplacian_ratio(phi, 0.1 + 0.1j) == 0.0

    def test_finite_difference_oracle(self):
        # i d dbar phi / c1 by a Richardson-extrapolated 5-point Laplacian
        phi = TestFunction(0.3, 0.6)
        rng = np.random.default_rng(12)
        for _ in range(10):
            r = rng.uniform(0.36, 0.55)
            z = r * np.exp(2j * np.pi * rng.random())

            def lap5(h):
                f = lambda w: float(phi.value(abs(w)))
                return (f(z + h) + f(z - h) + f(z + 1j * h) + f(z - 1j * h) - 4 * f(z)) / h**2

            h = 1e-3
            lap = (4.0 * lap5(h / 2) - lap5(h)) / 3.0
            oracle = 0.5 * math.pi * lap * r * r * math.log(r * r) ** 2
            assert laplacian_ratio(phi, z) == pytest.approx(oracle, abs=1e-6 * max(1.0, abs(oracle)))

    def test_linearity(self):
        phi1 = TestFunction(0.3, 0.6, amplitude=1.0)
        phi2 = TestFunction(0.3, 0.6, amplitude=2.0)
        assert laplacian_ratio(phi2, 0.42) == pytest.approx(2.0 * laplacian_ratio(phi1, 0.42), rel=1e-12)

    def test_mean_zero_against_curvature(self):
        # int L(phi) c1 = 0 for compactly supported phi
        from numpy.polynomial.legendre import leggauss

        phi = TestFunction(0.3, 0.6)
        x, w = leggauss(400)
        r = 0.15 * x + 0.45
        meas = 0.15 * w / (2.0 * r * np.log(r) ** 2)
        assert abs(float(laplacian_ratio(phi, r) @ meas)) < 1e-10


class TestGtilde:
    def test_endpoints(self):
        assert Gtilde(0.0) == 0.0
        assert Gtilde(1.0) == pytest.approx(1.0 / 24.0, rel=1e-12)

    def test_small_t_quadratic(self):
        t = 1e-5
        assert Gtilde(t) / t**2 == pytest.approx(1.0 / (4.0 * math.pi**2), rel=1e-9)

    def test_series_integral_agreement(self):
        for t in np.linspace(0.0, 0.999, 150):
            assert _gtilde_series(t) == pytest.approx(_gtilde_integral(t), abs=1e-12)

    def test_fast_path_agreement(self):
        ts = np.linspace(0.0, 1.0, 200)
        fast = _gtilde_fast(ts)
        slow = np.array([Gtilde(t) for t in ts])
        assert np.max(np.abs(fast - slow)) < 1e-12

    def test_domain(self):
        with pytest.raises(ValueError):
            Gtilde(1.5)
        with pytest.raises(ValueError):
            Gtilde(-0.1)


class TestVariance:
    def test_zero_for_harmonic_test_function(self, space80):
        phi = TestFunction(0.35, 0.65, amplitude=0.0)
        assert variance_bipotential(space80, phi) == 0.0

    def test_nonnegative_and_converged(self, space80):
        phi = TestFunction(0.35, 0.65)
        v = variance_bipotential(space80, phi)
        assert v > 0.0

    def test_leading_term_scalings(self):
        phi1 = TestFunction(0.35, 0.65, amplitude=1.0)
        phi2 = TestFunction(0.35, 0.65, amplitude=2.0)
        assert variance_leading_term(phi2, 40) == pytest.approx(4.0 * variance_leading_term(phi1, 40), rel=1e-12)
        assert variance_leading_term(phi1, 80) == pytest.approx(0.5 * variance_leading_term(phi1, 40), rel=1e-12)

    def test_apery_constant(self):
        assert APERY == pytest.approx(1.202056903159594, abs=1e-15)
        # zeta(3) from scratch
        assert APERY == pytest.approx(sum(1.0 / k**3 for k in range(1, 400_000)), rel=1e-10)

    def test_grid_matches_scalar_kernel(self, space80):
        r = np.array([0.4, 0.5, 0.6])
        th = np.array([0.1, 0.7])
        grid = normalized_kernel_grid(space80, r, th)
        for i in range(3):
            for j in range(3):
                for k in range(2):
                    direct = disc.normalized_kernel(space80, r[i], r[j] * np.exp(1j * th[k]))
                    assert grid[i, j, k] == pytest.approx(direct, abs=1e-12)


class TestProxyAndExperiments:
    def test_sodin_tsirelson_proxy_decreases(self):
        region = Annulus(0.35, 0.65)
        vals = {}
        for p in (50, 100):
            space = make_disc_space(p, sections.truncation_length(p, region.b))
            vals[p] = sodin_tsirelson_proxy(space, region)
        assert vals[100] < vals[50]

    def test_clt_rejects_degenerate_statistic(self):
        phi = TestFunction(0.35, 0.65, amplitude=0.0)
        with pytest.raises(RuntimeError):
            experiments.clt_experiment([20], phi, 40, seed=1)

    def test_tiny_support_is_not_normal(self):
        # nearly Bernoulli counts: the KS test must reject
        phi = TestFunction(0.49, 0.52)
        rep = experiments.clt_experiment([12], phi, 400, seed=8)
        ks_rows = [r for r in rep.rows if r.statistic == "ks_pvalue"]
        assert ks_rows[0].estimate < 0.01

    def test_deviation_sanity_impossible_deficit(self):
        region = Annulus(0.2, 0.7)
        area = disc.c1_area(region)
        rep = experiments.deviation_experiment([20], region, 2.0 * area, 1500, seed=3)
        freq = [r for r in rep.rows if r.statistic == "count_deviation_frequency"][0]
        assert freq.estimate < 0.01  # only the surplus side can trigger

    def test_deviation_decreases_in_p(self):
        region = Annulus(0.2, 0.7)
        area = disc.c1_area(region)
        rep = experiments.deviation_experiment([20, 40], region, 0.3 * area, 4000, seed=20260811)
        freqs = [r.estimate for r in rep.rows if r.statistic == "count_deviation_frequency"]
        assert freqs[1] <= freqs[0]
        assert rep.all_passed

    def test_log_sup_statistic_small_at_p60(self):
        region = Annulus(0.2, 0.7)
        rep = experiments.deviation_experiment([60], region, 0.5, 2000, seed=20260811)
        sup_rows = [r for r in rep.rows if r.statistic == "log_sup_deviation_frequency"]
        assert sup_rows[0].estimate < 1e-2

    def test_hole_probability_trend_small_scale(self):
        rep = experiments.hole_probability_experiment([4, 6], Annulus(0.25, 0.45), 20_000, seed=20260811)
        probs = [r.estimate for r in rep.rows if r.statistic == "hole_probability"]
        assert probs[1] < probs[0]

    def test_expected_linear_statistic_by_parts(self, space80):
        # -int phi' n dr equals direct quadrature of phi against d n
        from numpy.polynomial.legendre import leggauss

        phi = TestFunction(0.35, 0.65)
        pred = experiments.expected_linear_statistic(space80, phi)
        x, w = leggauss(800)
        r = 0.15 * x + 0.5
        dn = np.gradient([disc.zero_counting_function(space80, ri) for ri in r], r)
        direct = float(np.dot(0.15 * w, phi.value(r) * dn))
        assert pred == pytest.approx(direct, rel=1e-4)
