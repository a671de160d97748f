import numpy as np
import pytest

from rebal.fees import (
    FeeParams,
    f_threshold,
    fee_adjusted_cost,
    fee_adjusted_optimal_f,
    fee_revenue_total,
    price_arb_rate,
    sawtooth_blocks,
)
from rebal.interpolate import amgm_path, geometric_path, linear_path, slerp_path
from rebal.stochastic import optimal_step_count

DT12S = 12.0 / 86400.0
FEE30BP = FeeParams(gamma=0.997)


class TestFeeParams:
    def test_validation(self):
        with pytest.raises(ValueError, match="gamma"):
            FeeParams(gamma=1.0)
        with pytest.raises(ValueError, match="gamma"):
            FeeParams(gamma=0.0)
        with pytest.raises(ValueError, match="value"):
            FeeParams(gamma=0.997, pool_value=0.0)
        assert FeeParams(gamma=0.997, phi=-0.2).phi == -0.2


class TestThreshold:
    def test_worked_example(self):
        assert f_threshold(0.21, 0.3, 0.997) == pytest.approx(510.0, rel=0.02)

    def test_three_token_modes(self):
        assert f_threshold(0.21, 0.05, 0.997) == pytest.approx(1250.0, rel=0.03)
        assert f_threshold(0.21, 0.05, 0.997, "typical", n_tokens=3) == pytest.approx(720.0, rel=0.03)

    def test_zero_angle(self):
        assert f_threshold(0.0, 0.3, 0.997) == 0.0

    def test_validation(self):
        with pytest.raises(ValueError, match="w_min"):
            f_threshold(0.2, 0.0, 0.997)
        with pytest.raises(ValueError, match="gamma"):
            f_threshold(0.2, 0.3, 1.0)
        with pytest.raises(ValueError, match="token count"):
            f_threshold(0.2, 0.3, 0.997, "typical")
        with pytest.raises(ValueError, match="mode"):
            f_threshold(0.2, 0.3, 0.997, "average")


class TestPriceArbRate:
    def test_worked_example(self):
        nu = price_arb_rate(0.03, DT12S, 0.997)
        assert nu == pytest.approx(0.014, rel=0.03)
        assert 1.0 / nu == pytest.approx(72.0, rel=0.03)

    def test_zero_vol(self):
        assert price_arb_rate(0.0, DT12S, 0.997) == 0.0

    def test_band_scaling(self):
        a = price_arb_rate(0.03, DT12S, 0.997)
        b = price_arb_rate(0.03, DT12S, 0.9985)
        assert b == pytest.approx(4 * a, rel=1e-12)


class TestFeeRevenue:
    def test_zero_for_identical(self):
        assert fee_revenue_total([0.5, 0.5], [0.5, 0.5], FEE30BP) == 0.0

    def test_two_token_value(self):
        got = fee_revenue_total([0.5, 0.5], [0.7, 0.3], FEE30BP)
        assert got == pytest.approx(6.018054162487462e-4, rel=1e-12)

    def test_three_token_value(self):
        got = fee_revenue_total([0.05, 0.55, 0.40], [0.40, 0.50, 0.10], FEE30BP)
        assert got == pytest.approx(0.003 / 1.994 * 0.70, rel=1e-12)

    @staticmethod
    def _component_monotone(points):
        # successive differences of every component share one sign, with
        # |d| <= 1e-14 treated as zero
        d = np.diff(points, axis=0)
        d = np.where(np.abs(d) <= 1e-14, 0.0, d)
        return bool(np.all((d.min(axis=0) >= 0.0) | (d.max(axis=0) <= 0.0)))

    def _per_step_revenue(self, t):
        return sum(
            fee_revenue_total(t.points[k], t.points[k + 1], FEE30BP) for k in range(t.f)
        )

    def test_per_step_sum_telescopes_for_monotone_paths(self):
        ws, we = [0.5, 0.5], [0.8, 0.2]
        endpoint = fee_revenue_total(ws, we, FEE30BP)
        for path in (linear_path, amgm_path, slerp_path):
            t = path(ws, we, 50)
            assert self._component_monotone(t.points)
            assert self._per_step_revenue(t) == pytest.approx(endpoint, abs=1e-12)

    def test_per_step_sum_dominates_for_overshooting_paths(self):
        # three-token geodesics can overshoot in a component; the extra
        # turnover only adds revenue, so the split follows monotonicity
        ws, we = [0.05, 0.55, 0.40], [0.40, 0.50, 0.10]
        for path in (linear_path, geometric_path, amgm_path, slerp_path):
            t = path(ws, we, 64)
            per_step = self._per_step_revenue(t)
            endpoint = fee_revenue_total(ws, we, FEE30BP)
            if self._component_monotone(t.points):
                assert per_step == pytest.approx(endpoint, abs=1e-12)
            else:
                assert per_step >= endpoint - 1e-12


class TestFeeAdjustedCost:
    def test_phi_zero_plateaus(self):
        fee = FeeParams(gamma=0.997, phi=0.0)
        costs = [fee_adjusted_cost(f, 0.2, 1e-4, DT12S, fee, 500.0) for f in (10, 100, 500, 1000, 5000)]
        assert np.all(np.diff(costs) <= 1e-18)
        assert costs[-1] == costs[-2]

    def test_below_threshold_reduces_to_scaled_analytic(self):
        fee = FeeParams(gamma=0.997, phi=0.35)
        from rebal.stochastic import analytic_cost

        got = fee_adjusted_cost(200, 0.2, 1e-4, DT12S, fee, 500.0)
        want = analytic_cost(200, 0.2, 1e-4 * 0.35, DT12S).total
        assert got == pytest.approx(want, rel=1e-15)

    def test_plateau_increment_is_pure_lvr(self):
        fee = FeeParams(gamma=0.997, phi=0.4)
        f_thr = 500.0
        d = fee_adjusted_cost(2 * f_thr, 0.2, 1e-4, DT12S, fee, f_thr) - fee_adjusted_cost(
            f_thr, 0.2, 1e-4, DT12S, fee, f_thr
        )
        assert d == pytest.approx(f_thr * DT12S * 1e-4 * 0.4, rel=1e-12)

    def test_continuous_at_threshold(self):
        fee = FeeParams(gamma=0.997, phi=0.4)
        f_thr = 500.0
        lo = fee_adjusted_cost(f_thr * (1 - 1e-9), 0.2, 1e-4, DT12S, fee, f_thr)
        hi = fee_adjusted_cost(f_thr * (1 + 1e-9), 0.2, 1e-4, DT12S, fee, f_thr)
        assert lo == pytest.approx(hi, rel=1e-8)


class TestFeeAdjustedOptimum:
    def test_phi_one_matches_uncapped_when_threshold_large(self):
        f = fee_adjusted_optimal_f(0.21, 1.1e-4, DT12S, FeeParams(gamma=0.997, phi=1.0), 1e9)
        want = optimal_step_count(0.21, 1.1e-4, DT12S).f_star
        assert f == pytest.approx(want, rel=1e-12)

    def test_quarter_phi_doubles(self):
        base = fee_adjusted_optimal_f(0.21, 1.1e-4, DT12S, FeeParams(gamma=0.997, phi=1.0), 1e9)
        quarter = fee_adjusted_optimal_f(0.21, 1.1e-4, DT12S, FeeParams(gamma=0.997, phi=0.25), 1e9)
        assert quarter == pytest.approx(2 * base, rel=1e-12)

    def test_cap_at_threshold(self):
        f = fee_adjusted_optimal_f(0.21, 1.1e-4, DT12S, FeeParams(gamma=0.997, phi=1.0), 510.0)
        assert f == 510.0

    def test_nonpositive_phi_has_no_finite_optimum(self):
        assert fee_adjusted_optimal_f(0.21, 1.1e-4, DT12S, FeeParams(gamma=0.997, phi=-0.1), 510.0) is None
        assert fee_adjusted_optimal_f(0.21, 1.1e-4, DT12S, FeeParams(gamma=0.997, phi=0.0), 510.0) is None


class TestSawtooth:
    def test_worked_example(self):
        assert sawtooth_blocks(2400.0, 510.0) == pytest.approx(4.7, rel=0.01)

    def test_unity_at_threshold(self):
        assert sawtooth_blocks(510.0, 510.0) == 1.0

    def test_weight_driven_regime(self):
        # at the worked operating point the sawtooth fires well before
        # price-driven arbitrage would
        n_tooth = sawtooth_blocks(2400.0, 510.0)
        blocks_per_price_arb = 1.0 / price_arb_rate(0.03, DT12S, 0.997)
        assert n_tooth < blocks_per_price_arb
