import math

import numpy as np
import pytest

from rebal.dynamics import (
    ConvergenceError,
    boundary_layer_width,
    greens_correction,
    guardrail_ratio,
    jacobi_cost,
    jacobi_speed_profile,
    solve_pendulum,
)
from rebal.interpolate import slerp_path
from rebal.optimize import JacobiObjective, objective_value, optimize_path
from rebal.stochastic import MarketParams, to_daily_vol

TH_05 = math.asin(math.sqrt(0.5))   # pi/4
TH_07 = math.asin(math.sqrt(0.7))
OMEGA_2T = TH_07 - TH_05
DT12S = 12.0 / 86400.0


def residual_of(sol, mu):
    h = sol.s[1] - sol.s[0]
    t = sol.theta
    return (t[:-2] - 2 * t[1:-1] + t[2:]) / h**2 - mu * np.sin(4 * t[1:-1])


class TestPendulum:
    def test_mu_zero_is_affine(self):
        sol = solve_pendulum(TH_05, TH_07, 0.0)
        affine = TH_05 + (TH_07 - TH_05) * sol.s
        assert np.max(np.abs(sol.theta - affine)) <= 1e-10
        assert sol.residual_norm == 0.0
        # free geodesic: constant angular speed
        d = np.diff(sol.theta)
        assert np.max(np.abs(d - d[0])) <= 1e-10

    @pytest.mark.parametrize("mu", [0.004, 0.1, 1.0])
    def test_deviation_bounded_by_quarter_mu(self, mu):
        sol = solve_pendulum(TH_05, TH_07, mu)
        affine = TH_05 + (TH_07 - TH_05) * sol.s
        assert np.max(np.abs(sol.theta - affine)) <= mu / 4

    def test_boundary_values_and_residual(self):
        sol = solve_pendulum(TH_05, TH_07, 0.5)
        assert sol.theta[0] == pytest.approx(TH_05, abs=1e-10)
        assert sol.theta[-1] == pytest.approx(TH_07, abs=1e-10)
        assert sol.residual_norm <= 1e-10
        assert np.max(np.abs(residual_of(sol, 0.5))) <= 1e-10

    def test_grid_convergence_is_second_order(self):
        ref = solve_pendulum(TH_05, TH_07, 0.8, m_intervals=4096, tol=1e-7)
        errs = []
        for m in (64, 128, 256):
            sol = solve_pendulum(TH_05, TH_07, 0.8, m_intervals=m)
            stride = 4096 // m
            errs.append(np.max(np.abs(sol.theta - ref.theta[::stride])))
        ratios = np.array(errs[:-1]) / np.array(errs[1:])
        assert np.all((ratios > 3.0) & (ratios < 5.0))

    def test_large_mu_plateaus_at_vertex(self):
        sol = solve_pendulum(TH_05, TH_07, 100.0)
        assert np.all((sol.theta >= 0.0) & (sol.theta <= np.pi / 2 + 1e-12))
        interior = sol.theta[len(sol.theta) // 2]
        assert interior > 1.5  # parked at the high vertex for the bulk of s

    def test_validation_and_failure(self):
        with pytest.raises(ValueError, match="theta_start"):
            solve_pendulum(0.0, TH_07, 0.1)
        with pytest.raises(ValueError, match="16"):
            solve_pendulum(TH_05, TH_07, 0.1, m_intervals=8)
        with pytest.raises(ConvergenceError, match="residual"):
            solve_pendulum(TH_05, TH_07, 0.9, max_newton=1)


class TestGreensCorrection:
    def test_mu_zero_is_identically_zero(self):
        s = np.linspace(0, 1, 33)
        np.testing.assert_array_equal(greens_correction(TH_05, OMEGA_2T, 0.0, s), np.zeros(33))

    def test_boundary_values_vanish(self):
        s = np.linspace(0, 1, 17)
        e1 = greens_correction(TH_05, OMEGA_2T, 0.3, s)
        assert e1[0] == pytest.approx(0.0, abs=1e-15)
        assert e1[-1] == pytest.approx(0.0, abs=1e-15)

    def test_bound(self):
        s = np.linspace(0, 1, 257)
        for mu in (0.01, 0.5, 2.0):
            e1 = greens_correction(TH_05, OMEGA_2T, mu, s)
            assert np.max(np.abs(e1)) <= mu / 4

    def test_matches_quadrature_oracle(self):
        # brute-force the kernel integral on a fine grid
        s = np.linspace(0, 1, 9)
        mu, a, b = 0.7, 4 * TH_05, 4 * OMEGA_2T
        sp = np.linspace(0, 1, 20001)
        want = []
        for si in s:
            g = np.minimum(si, sp) * (1 - np.maximum(si, sp))
            want.append(-mu * np.trapezoid(g * np.sin(a + b * sp), sp))
        got = greens_correction(TH_05, OMEGA_2T, mu, s)
        np.testing.assert_allclose(got, want, atol=1e-9)

    def test_degenerate_angle_limit(self):
        s = np.linspace(0, 1, 5)
        got = greens_correction(0.6, 0.0, 0.4, s)
        want = -0.4 * math.sin(2.4) * 0.5 * s * (1 - s)
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_pushes_toward_nearer_vertex(self):
        s = np.array([0.5])
        # baseline centred above pi/4: nearer vertex is pi/2, correction up
        above = greens_correction(math.pi / 4 + 0.1 - 0.05, 0.1, 0.2, s)
        assert above[0] > 0.0
        # centred below pi/4: pushed down toward 0
        below = greens_correction(math.pi / 4 - 0.1 - 0.05, 0.1, 0.2, s)
        assert below[0] < 0.0

    def test_bvp_discrepancy_scales_quadratically(self):
        mus = np.array([0.01, 0.02, 0.04])
        discs = []
        for mu in mus:
            sol = solve_pendulum(TH_05, TH_07, mu, m_intervals=1024)
            affine = TH_05 + OMEGA_2T * sol.s
            e1 = greens_correction(TH_05, OMEGA_2T, mu, sol.s)
            discs.append(np.max(np.abs(sol.theta - (affine + e1))))
        slope = np.polyfit(np.log(mus), np.log(discs), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.3)


class TestJacobi:
    def test_speed_profile_tracks_lvr(self):
        m = MarketParams(sigma=np.array([0.05, 0.0]), dt_block=DT12S)
        s = np.linspace(0, 1, 65)
        v = jacobi_speed_profile([0.3, 0.7], [0.7, 0.3], m, s)
        w = np.sin(np.arcsin(np.sqrt(0.3)) + s * (np.arcsin(np.sqrt(0.7)) - np.arcsin(np.sqrt(0.3)))) ** 2
        ell = 0.5 * 0.05**2 * w * (1 - w)
        np.testing.assert_allclose(v, np.sqrt(2 * DT12S * ell), rtol=1e-10)

    def test_speed_vanishes_at_vertex_end(self):
        m = MarketParams(sigma=np.array([0.05, 0.0]), dt_block=DT12S)
        s = np.linspace(0, 1, 33)
        v = jacobi_speed_profile([1e-6, 1.0 - 1e-6], [0.5, 0.5], m, s)
        assert v[0] < 5e-3 * v[-1]

    def test_nearly_constant_lvr_gives_no_saving(self):
        m = MarketParams(sigma=np.array([0.05, 0.0]), dt_block=DT12S)
        jc = jacobi_cost([0.499, 0.501], [0.501, 0.499], m)
        assert jc.saving == pytest.approx(0.0, abs=1e-6)
        assert jc.variable_speed <= jc.constant_speed

    def test_interior_pair_saving_tiny(self):
        m = MarketParams(sigma=np.array([to_daily_vol(0.5, "annual"), 0.0]), dt_block=DT12S)
        jc = jacobi_cost([0.5, 0.5], [0.7, 0.3], m)
        assert 0.0 < jc.saving < 6e-4

    def test_three_token_boundary_saving(self):
        sig = to_daily_vol(0.5, "annual")
        m = MarketParams(sigma=np.full(3, sig), dt_block=DT12S)
        jc = jacobi_cost([0.01, 0.01, 0.98], [0.49, 0.49, 0.02], m)
        assert jc.saving == pytest.approx(0.0313, abs=0.005)

    def test_joint_path_optimisation_improves_on_geodesic(self):
        # N=3, equal vols: freeing the path shape shaves a further ~0.4%
        # off the conformal cost of the geodesic
        sig = to_daily_vol(0.8, "annual")
        m = MarketParams(sigma=np.full(3, sig), dt_block=DT12S)
        ws, we = [0.05, 0.55, 0.40], [0.40, 0.50, 0.10]
        f = 96
        init = slerp_path(ws, we, f)
        obj = JacobiObjective(m)
        res = optimize_path(ws, we, f, objective=obj, init=init, tol=1e-14, max_iter=4000, method="lbfgsb")
        improvement = 1.0 - res.objective_value / objective_value(init, obj)
        assert improvement == pytest.approx(0.0037, abs=0.002)


class TestDiagnostics:
    def test_guardrail_worked_example(self):
        got = guardrail_ratio(0.03, DT12S, 0.05)
        assert got == pytest.approx(0.007, rel=0.02)

    def test_guardrail_zero_vol_and_linearity(self):
        assert guardrail_ratio(0.0, DT12S, 0.05) == 0.0
        assert guardrail_ratio(0.06, DT12S, 0.05) == pytest.approx(
            2 * guardrail_ratio(0.03, DT12S, 0.05), rel=1e-15
        )
        with pytest.raises(ValueError, match="u_max"):
            guardrail_ratio(0.03, DT12S, 0.0)

    def test_boundary_layer_width(self):
        f = 2394.6
        delta = boundary_layer_width(f, f * DT12S, 0.03)
        assert delta == pytest.approx(4.7, rel=0.02)
        assert boundary_layer_width(100.0, 1.0, 0.0) == math.inf
