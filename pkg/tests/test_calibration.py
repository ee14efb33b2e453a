import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats
from scipy.optimize import brentq

from ramp import calibration
from ramp.calibration import (
    CalibrationError,
    CalibrationTarget,
    calibrate,
    calibrate_nonsmooth,
    calibrate_smooth,
    ecdf,
    kde,
    plugin_slope_curve,
)
from ramp.losses import absolute, effective_score, effective_score_deriv, huber, least_squares, quantile


def exact_lad_root(slope):
    """Root of Phi(b) - Phi(-b) - 2 b phi(b) = slope for N(0,1) residuals."""
    f = lambda b: stats.norm.cdf(b) - stats.norm.cdf(-b) - 2 * b * stats.norm.pdf(b) - slope
    return brentq(f, 1e-6, 50.0, xtol=1e-12)


def grid_step_near(b):
    # multiplicative spacing of the 400-point search grid
    factor = (calibration.GRID_HI / calibration.GRID_LO) ** (1.0 / (calibration.GRID_POINTS - 1))
    return b * (factor - 1.0)


class TestEcdf:
    def test_pinned_values(self):
        z = [1.0, 2.0, 3.0]
        assert ecdf(z, 2.0) == pytest.approx(2 / 3)
        assert ecdf(z, 0.0) == 0.0
        assert ecdf(z, 3.0) == 1.0

    def test_right_continuity(self):
        z = [0.0, 1.0]
        assert ecdf(z, 1.0) == 1.0
        assert ecdf(z, 1.0 - 1e-12) == 0.5

    def test_vectorized(self):
        out = ecdf([1.0, 2.0], np.array([0.5, 1.5, 2.5]))
        assert_allclose(out, [0.0, 0.5, 1.0])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            ecdf([], 0.0)


class TestKde:
    def test_normal_density_at_zero(self):
        rng = np.random.default_rng(42)
        est = kde(rng.standard_normal(100_000))
        assert abs(est.eval(0.0) - 0.3989) < 0.02

    def test_uniform_density(self):
        rng = np.random.default_rng(42)
        est = kde(rng.uniform(0.0, 1.0, 100_000))
        assert abs(est.eval(0.5) - 1.0) < 0.05

    def test_two_point_symmetry(self):
        est = kde(np.array([-1.0, 1.0]), bandwidth_h=0.7)
        for a in (0.3, 0.9, 2.0):
            assert est.eval(a) == pytest.approx(est.eval(-a), rel=1e-12)

    def test_integrates_to_one(self):
        rng = np.random.default_rng(42)
        z = rng.standard_normal(5000)
        for method in ("kernel", "window"):
            est = kde(z, method=method)
            grid = np.linspace(-12.0, 12.0, 4001)
            mass = np.trapezoid(est.eval(grid), grid)
            assert abs(mass - 1.0) < 1e-2

    def test_silverman_regime_flags(self):
        rng = np.random.default_rng(42)
        est = kde(rng.standard_normal(1000))
        assert est.h_shrinks and est.nh_grows
        assert not est.degenerate

    def test_degenerate_sample_flagged(self):
        est = kde(np.zeros(50))
        assert est.degenerate

    def test_window_and_kernel_agree_on_gaussian(self):
        # both estimate phi(x); compare within 3 combined standard errors
        rng = np.random.default_rng(42)
        n = 100_000
        z = rng.standard_normal(n)
        kern = kde(z, method="kernel")
        wind = kde(z, method="window")
        h = kern.bandwidth_h
        eps = h / np.sqrt(n)
        for x in (0.0, 0.5, -0.5, 1.0):
            f = stats.norm.pdf(x)
            se_kernel = np.sqrt(f / (2 * np.sqrt(np.pi) * n * h))
            se_window = np.sqrt(f / (2 * n * eps))
            band = 3.0 * np.hypot(se_kernel, se_window)
            assert abs(kern.eval(x) - wind.eval(x)) < band

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            kde(np.array([1.0]))
        with pytest.raises(ValueError):
            kde(np.array([1.0, 2.0]), bandwidth_h=0.0)
        with pytest.raises(ValueError):
            kde(np.array([1.0, 2.0]), method="epanechnikov")


class TestTargetValidation:
    def test_slope_range(self):
        for bad in (0.0, 1.0, -0.2, 1.7):
            with pytest.raises(ValueError):
                CalibrationTarget(bad, least_squares(), np.ones(4))

    def test_residual_shape(self):
        with pytest.raises(ValueError):
            CalibrationTarget(0.2, least_squares(), np.ones((2, 2)))
        with pytest.raises(ValueError):
            CalibrationTarget(0.2, least_squares(), np.array([]))


class TestCalibrateSmooth:
    def test_ls_closed_form_any_residuals(self):
        rng = np.random.default_rng(42)
        for slope in (0.05, 0.2, 0.5, 0.9):
            for scale in (0.1, 1.0, 25.0):
                z = scale * rng.standard_normal(300)
                b = calibrate_smooth(CalibrationTarget(slope, least_squares(), z))
                assert abs(b - slope / (1.0 - slope)) < 1e-8

    def test_ls_table_slope(self):
        z = np.random.default_rng(42).standard_normal(320)
        b = calibrate_smooth(CalibrationTarget(64 / 320, least_squares(), z))
        assert b == 0.25

    def test_huber_against_quadrature_oracle(self):
        # population root of (b/(1+b)) P(|v| <= (1+b)gamma) = slope, v ~ N(0,1)
        slope, gamma = 0.2, 1.0
        pop = lambda b: (b / (1 + b)) * (2 * stats.norm.cdf((1 + b) * gamma) - 1) - slope
        b_star = brentq(pop, 1e-6, 50.0, xtol=1e-12)
        rng = np.random.default_rng(42)
        z = rng.standard_normal(200_000)
        b_hat = calibrate_smooth(CalibrationTarget(slope, huber(gamma), z))
        assert abs(b_hat - b_star) < 0.02

    def test_plug_back_within_1e8(self):
        rng = np.random.default_rng(42)
        z = rng.standard_normal(5000)
        for loss in (least_squares(), huber(0.7)):
            target = CalibrationTarget(0.3, loss, z)
            b = calibrate_smooth(target)
            refit = np.mean(effective_score_deriv(loss, z, b))
            assert abs(refit - 0.3) < 1e-8

    def test_wrong_family_rejected(self):
        with pytest.raises(ValueError):
            calibrate_smooth(CalibrationTarget(0.2, absolute(), np.ones(5)))

    def test_failure_carries_interval(self):
        # residuals so large that the huber window never captures them
        z = 1e7 * np.random.default_rng(42).standard_normal(100)
        with pytest.raises(CalibrationError) as err:
            calibrate_smooth(CalibrationTarget(0.2, huber(1.0), z))
        assert err.value.grid_hi is not None
        assert err.value.value_hi is not None


class TestCalibrateNonsmooth:
    def test_exact_plugin_matches_analytic_root(self):
        # run the grid rule with the true normal cdf/pdf in place of estimates
        slope = 0.2
        b_star = exact_lad_root(slope)
        grid = np.geomspace(calibration.GRID_LO, calibration.GRID_HI, calibration.GRID_POINTS)
        vals = plugin_slope_curve(absolute(), grid, stats.norm.cdf, stats.norm.pdf)
        b = calibration._grid_average_rule(grid, vals, slope)
        assert abs(b - b_star) <= grid_step_near(b_star)

    def test_empirical_lands_near_analytic_root(self):
        slope = 0.2
        b_star = exact_lad_root(slope)
        rng = np.random.default_rng(42)
        n = 40_000
        z = rng.standard_normal(n)
        b_hat = calibrate_nonsmooth(CalibrationTarget(slope, absolute(), z))
        boots = []
        for _ in range(15):
            zb = rng.choice(z, size=n, replace=True)
            boots.append(calibrate_nonsmooth(CalibrationTarget(slope, absolute(), zb)))
        se = np.std(boots, ddof=1)
        assert abs(b_hat - b_star) <= max(3.0 * se, 2.0 * grid_step_near(b_star))

    def test_quantile_half_matches_absolute(self):
        # at tau_q = 0.5 the plug-in equation is the absolute one at b/2, so
        # the fitted b doubles and the calibrated scores coincide
        rng = np.random.default_rng(42)
        z = rng.standard_normal(20_000)
        dens = kde(z)
        b_lad = calibrate_nonsmooth(CalibrationTarget(0.2, absolute(), z), dens)
        b_q = calibrate_nonsmooth(CalibrationTarget(0.2, quantile(0.5), z), dens)
        assert abs(b_q - 2.0 * b_lad) <= 4.0 * grid_step_near(b_q)
        zz = np.linspace(-3, 3, 101)
        assert_allclose(effective_score(quantile(0.5), zz, b_q),
                        effective_score(absolute(), zz, b_lad),
                        atol=2.0 * grid_step_near(b_lad))

    def test_fitted_b_increases_with_slope(self):
        rng = np.random.default_rng(42)
        z = rng.standard_normal(20_000)
        dens = kde(z)
        bs = [calibrate_nonsmooth(CalibrationTarget(s, absolute(), z), dens)
              for s in (0.1, 0.2, 0.4, 0.6)]
        assert all(b1 < b2 for b1, b2 in zip(bs, bs[1:]))

    def test_neighbors_straddle_target(self):
        rng = np.random.default_rng(42)
        z = rng.standard_normal(10_000)
        dens = kde(z)
        slope = 0.3
        b = calibrate_nonsmooth(CalibrationTarget(slope, absolute(), z), dens)
        zs = np.sort(z)
        cdf = lambda x: np.searchsorted(zs, x, side="right") / zs.size
        step = grid_step_near(b)
        lo_val = plugin_slope_curve(absolute(), np.array([b - step]), cdf, dens.eval)[0]
        hi_val = plugin_slope_curve(absolute(), np.array([b + step]), cdf, dens.eval)[0]
        assert min(lo_val, hi_val) <= slope <= max(lo_val, hi_val)

    def test_failure_when_scale_exceeds_grid(self):
        z = 1e7 * np.random.default_rng(42).standard_normal(200)
        with pytest.raises(CalibrationError) as err:
            calibrate_nonsmooth(CalibrationTarget(0.2, absolute(), z))
        assert err.value.grid_hi > calibration.GRID_HI

    def test_wrong_family_rejected(self):
        with pytest.raises(ValueError):
            calibrate_nonsmooth(CalibrationTarget(0.2, least_squares(), np.ones(5)))


class TestDispatch:
    def test_routes_by_family(self):
        rng = np.random.default_rng(42)
        z = rng.standard_normal(5000)
        assert calibrate(CalibrationTarget(0.2, least_squares(), z)) == pytest.approx(0.25, abs=1e-8)
        b_lad = calibrate(CalibrationTarget(0.2, absolute(), z))
        assert 0.5 < b_lad < 2.0
