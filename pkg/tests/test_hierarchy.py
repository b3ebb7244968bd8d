import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.linalg import expm

from oracles import symbolic_sho_green
from sedlab import natural_scale
from sedlab.dynamics import ForceModel, energy_series, integrate_bm
from sedlab.errors import GridMismatch, MissingJacobian, MissingSecondDerivative
from sedlab.hierarchy import (
    build_green_kernel,
    causal_convolve,
    first_order_response,
    hierarchy_consistency,
    second_order_response,
    solve_hierarchy,
    solve_zeroth,
)
from sedlab.zpf import FieldSpec, build_mode_set


def _single_mode(scale, omega, amplitude=1.0):
    m = build_mode_set(scale, (omega - 0.01, omega + 0.01), 2, jitter=False)
    return replace(m, omegas=np.array([omega, omega]), amplitudes=np.array([amplitude, 0.0]),
                   phases=np.array([[0.3, 0.0]]), _grid=None)


class TestConvolution:
    @pytest.mark.parametrize("n", [2, 3, 4, 101, 400])
    def test_against_closed_form(self, n):
        h = 0.05
        t = h * np.arange(n)
        y = causal_convolve(np.sin(t), np.cos(t), h)
        # int_0^t sin(t - s) cos(s) ds = t sin(t) / 2
        assert np.max(np.abs(y - t * np.sin(t) / 2)) < 2e-5

    def test_fourth_order(self):
        errs = []
        for h in (0.2, 0.1):
            t = np.arange(0, 20 + h / 2, h)
            y = causal_convolve(np.sin(t), np.cos(t), h)
            errs.append(np.max(np.abs(y - t * np.sin(t) / 2)))
        assert math.log2(errs[0] / errs[1]) > 3.5


class TestKernel:
    def test_closed_form_matches_symbolic_solution(self, scale):
        k = build_green_kernel(scale, ForceModel.harmonic(1.3, 1.0), representation="closed_form_sho")
        oracle = symbolic_sho_green(1.0, 1.3)
        u = np.linspace(0, 20, 301)
        np.testing.assert_allclose(k.lag_values(u)[0][:, 0, 0], oracle(u), rtol=1e-13, atol=1e-15)

    @pytest.mark.parametrize("rep", ["closed_form_sho", "numeric"])
    def test_boundary_conditions(self, scale, rep):
        k = build_green_kernel(scale, ForceModel.harmonic(), representation=rep, max_lag=20.0)
        t = np.array([0.0, 3.0, 17.5])
        assert np.max(np.abs(k(t, t))) < 1e-10
        d = 1e-4
        slope = k(t + d, t)[:, 0, 0] / d
        np.testing.assert_allclose(slope, 1 / scale.mass, rtol=1e-6)
        assert np.all(k(t, t + 0.5) == 0)  # causal

    def test_numeric_matches_closed_form(self, scale):
        f = ForceModel.harmonic()
        c = build_green_kernel(scale, f, representation="closed_form_sho")
        n = build_green_kernel(scale, f, representation="numeric", max_lag=10.0)
        u = np.linspace(0, 10, 2001)
        assert np.max(np.abs(n.lag_values(u)[0] - c.lag_values(u)[0])) < 1e-6
        assert np.max(np.abs(n.lag_values(u)[1] - c.lag_values(u)[1])) < 1e-6

    def test_damped_kernel(self):
        s = natural_scale(0.05)
        f = ForceModel.harmonic()
        c = build_green_kernel(s, f, include_damping=True)
        n = build_green_kernel(s, f, representation="numeric", include_damping=True, max_lag=30.0)
        u = np.linspace(0, 30, 601)
        g = s.tau
        wd = math.sqrt(1 - g**2 / 4)
        want = np.exp(-g * u / 2) * np.sin(wd * u) / wd
        np.testing.assert_allclose(c.lag_values(u)[0][:, 0, 0], want, atol=1e-14)
        assert np.max(np.abs(n.lag_values(u)[0][:, 0, 0] - want)) < 1e-6

    def test_anharmonic_linearized_at_point(self, scale):
        f = ForceModel.polynomial((0.0, -1.0, 0.0, -0.5))
        k = build_green_kernel(scale, f, expansion_point=[0.4], max_lag=10.0)
        w = math.sqrt(1 + 1.5 * 0.4**2)
        u = np.linspace(0, 10, 201)
        np.testing.assert_allclose(k.lag_values(u)[0][:, 0, 0], np.sin(w * u) / w, atol=1e-6)

    def test_matrix_kernel_against_expm(self, scale):
        J = np.array([[-1.0, 0.2, 0.0], [0.2, -2.0, 0.1], [0.0, 0.1, -1.5]])
        f = ForceModel.custom(lambda x: x @ J.T, lambda x: np.broadcast_to(J, np.shape(x)[:-1] + (3, 3)),
                              dimension=3)
        k = build_green_kernel(scale, f, max_lag=8.0)
        A = np.zeros((6, 6))
        A[:3, 3:] = np.eye(3)
        A[3:, :3] = J
        for u in (0.0, 1.1, 5.0, 8.0):
            Y = expm(A * u)[:3, 3:]  # dx(u)/dv(0), mass 1
            assert np.max(np.abs(k.lag_values(np.array(u))[0] - Y)) < 1e-6

    def test_missing_jacobian(self, scale):
        with pytest.raises(MissingJacobian):
            build_green_kernel(scale, ForceModel.custom(lambda x: -x))

    def test_beyond_table(self, scale):
        k = build_green_kernel(scale, ForceModel.harmonic(), representation="numeric", max_lag=5.0)
        with pytest.raises(GridMismatch):
            k.lag_values(np.array([6.0]))

    def test_sampled_export(self, scale):
        k = build_green_kernel(scale, ForceModel.harmonic())
        grid = k.sampled(0.5, 5)
        np.testing.assert_allclose(grid["G"][:, 0, 0], np.sin(grid["lag"]))
        np.testing.assert_allclose(grid["P"][:, 0, 0], np.cos(grid["lag"]))


class TestFirstOrder:
    def test_zero_field(self, scale):
        k = build_green_kernel(scale, ForceModel.harmonic())
        x1, p1 = first_order_response(k, None, np.linspace(0, 10, 51))
        assert np.all(x1 == 0) and np.all(p1 == 0)
        modes = _single_mode(scale, 0.8, amplitude=0.0)
        x1, p1 = first_order_response(k, modes, np.linspace(0, 10, 51))
        assert np.all(x1 == 0) and np.all(p1 == 0)

    def test_single_mode_steady_amplitude(self):
        s = natural_scale(0.05)
        w, A = 0.8, 1.0
        k = build_green_kernel(s, ForceModel.harmonic(), include_damping=True)
        modes = _single_mode(s, w, A)
        t = np.arange(0, 600, 0.05)
        x1, p1 = first_order_response(k, modes, t)
        g = s.tau
        resp = s.charge * A / (s.mass * complex(1 - w**2, g * w))
        tail = t > 500
        want_x = np.real(resp * np.exp(1j * (w * t + 0.3)))
        want_p = np.real(1j * w * resp * np.exp(1j * (w * t + 0.3)))
        amp = s.charge * A / abs(1 - w**2)
        # the free transient has decayed to exp(-12.5) of its start by t = 500
        assert np.max(np.abs(x1[tail, 0] - want_x[tail])) < 1e-5 * amp
        assert np.max(np.abs(p1[tail, 0] - want_p[tail])) < 1e-5 * amp
        # undamped particular amplitude e A / m (w0^2 - w^2), up to the small damping shift
        assert np.max(np.abs(x1[tail, 0])) == pytest.approx(amp, rel=0.02)

    def test_damped_kernel_reproduces_linear_simulation(self, scale):
        modes = FieldSpec((0.75, 1.25), 2000, jitter=False, seed=3).build(scale, 0)
        dt, T = 0.1, 6000.0
        k = build_green_kernel(scale, ForceModel.harmonic(), include_damping=True)
        full = integrate_bm(scale, ForceModel.harmonic(), modes, 0.0, 0.0, T, dt)
        x1, p1 = first_order_response(k, modes, full.times)
        late = full.times > 4000
        assert np.var(x1[late, 0]) == pytest.approx(np.var(full.x[late, 0]), rel=0.02)
        # what is left is the integrator phase error on the near-resonant response
        rms = np.sqrt(np.mean((x1[late, 0] - full.x[late, 0]) ** 2) / np.mean(full.x[late, 0] ** 2))
        assert rms < 2e-3

    def test_grid_errors(self, scale):
        k = build_green_kernel(scale, ForceModel.harmonic())
        modes = _single_mode(scale, 0.8)
        with pytest.raises(GridMismatch):
            first_order_response(k, modes, np.array([0.0, 0.1, 0.3]))
        with pytest.raises(GridMismatch):
            first_order_response(k, modes, np.linspace(0, 1, 11), t_burn=0.55)

    def test_burn_in_zero_before(self, scale):
        k = build_green_kernel(scale, ForceModel.harmonic())
        modes = _single_mode(scale, 0.8)
        t = np.linspace(0, 10, 101)
        x1, _ = first_order_response(k, modes, t, t_burn=4.0)
        assert np.all(x1[:41] == 0) and np.any(x1[42:] != 0)

    def test_stationary_x1_variance(self, scale):
        """Successive windows of the (damped-kernel) response have equal variance."""
        spec = FieldSpec((0.75, 1.25), 2000, jitter=False, seed=11)
        k = build_green_kernel(scale, ForceModel.harmonic(), include_damping=True)
        t = np.arange(0, 12000, 0.2)
        a, b = [], []
        for r in range(24):
            x1, _ = first_order_response(k, spec.build(scale, r), t)
            a.append(np.mean(x1[(t >= 6000) & (t < 9000), 0] ** 2))
            b.append(np.mean(x1[t >= 9000, 0] ** 2))
        d = np.asarray(a) - np.asarray(b)
        assert abs(d.mean()) < 3 * d.std(ddof=1) / math.sqrt(d.size)

    def test_stationary_x1_variance_matches_simulation(self, scale):
        force = ForceModel.harmonic()
        k = build_green_kernel(scale, force, include_damping=True)
        for r in range(3):
            modes = FieldSpec((0.75, 1.25), 2000, jitter=False, seed=11).build(scale, r)
            full = integrate_bm(scale, force, modes, 0.0, 0.0, 12000.0, 0.2)
            x1, _ = first_order_response(k, modes, full.times)
            w = full.times >= 6000
            assert abs(np.var(x1[w, 0]) / np.var(full.x[w, 0]) - 1) < 0.02


class TestSecondOrder:
    def _setup(self, scale):
        modes = FieldSpec((0.75, 1.25), 200, seed=2).build(scale, 0)
        t = np.arange(0, 200, 0.1)
        return modes, t

    def test_harmonic_is_identically_zero(self, scale):
        modes, t = self._setup(scale)
        sol = solve_hierarchy(scale, ForceModel.harmonic(), modes, 0.5, 0.0, 200.0, 0.1)
        assert np.all(sol.x2_series == 0)
        assert sol.order_included == 2
        np.testing.assert_array_equal(sol.x_total, sol.x0_series + sol.x1_series)

    def test_quartic_scales_linearly(self, scale):
        modes, t = self._setup(scale)
        x0 = np.zeros((t.size, 1))
        k = build_green_kernel(scale, ForceModel.harmonic(), representation="numeric", max_lag=210.0)
        x1, _ = first_order_response(k, modes, t)
        x2 = []
        for lam in (0.1, 0.2):
            f = ForceModel.polynomial((0.0, -1.0, 0.0, 0.0, -lam))
            x2.append(second_order_response(scale, f, x0 + 0.3, x1, t))
        assert np.max(np.abs(x2[0])) > 0
        np.testing.assert_allclose(x2[1], 2 * x2[0], rtol=1e-12, atol=1e-18)

    def test_zero_first_order(self, scale):
        _, t = self._setup(scale)
        f = ForceModel.polynomial((0.0, -1.0, 0.2))
        out = second_order_response(scale, f, np.full((t.size, 1), 0.1), np.zeros((t.size, 1)), t)
        assert np.all(out == 0)

    def test_missing_second_derivative(self, scale):
        _, t = self._setup(scale)
        f = ForceModel.custom(lambda x: -x, lambda x: -np.ones(np.shape(x)[:-1] + (1, 1)))
        with pytest.raises(MissingSecondDerivative):
            second_order_response(scale, f, np.zeros((t.size, 1)), np.zeros((t.size, 1)), t)

    def test_quadratic_force_single_mode_source(self, scale):
        """f = -x + b x^2: x2 solves x2'' + x2 = b x1^2 from rest; compare with direct RK4."""
        b = 0.3
        modes = _single_mode(scale, 0.6, amplitude=5.0)
        t = np.arange(0, 60, 0.01)
        k = build_green_kernel(scale, ForceModel.harmonic())
        x1, _ = first_order_response(k, modes, t)
        f = ForceModel.polynomial((0.0, -1.0, b))
        x2 = second_order_response(scale, f, np.zeros((t.size, 1)), x1, t)
        from scipy.integrate import solve_ivp
        from scipy.interpolate import CubicSpline

        src = CubicSpline(t, b * x1[:, 0] ** 2)
        sol = solve_ivp(lambda s, y: [y[1], -y[0] + src(s)], (0, t[-1]), [0, 0], t_eval=t, rtol=1e-10, atol=1e-12)
        assert np.max(np.abs(x2[:, 0] - sol.y[0])) < 1e-6 * max(1e-12, np.max(np.abs(sol.y[0])))


class TestZeroth:
    def test_decay_time(self, scale):
        tr = solve_zeroth(scale, ForceModel.harmonic(), 1.0, 0.0, 3000.0, 0.1)
        assert tr.metadata["decay_time"] == pytest.approx(1000.0, rel=0.02)

    def test_energy_after_five_decay_times(self, scale):
        f = ForceModel.harmonic()
        tr = solve_zeroth(scale, f, 1.0, 0.0, 5000.0, 0.1)
        H = energy_series(tr, f)
        assert H[-1] / H[0] < 0.01

    def test_no_decay_without_damping(self, scale):
        f = ForceModel.harmonic()
        tr = solve_zeroth(scale, f, 1.0, 0.0, 500.0, 0.05, radiation_reaction=False)
        H = energy_series(tr, f)
        # RK4 drift at dt = 0.05 is 2e-10 per step
        assert np.max(np.abs(H / H[0] - 1)) < 1e-5
        assert tr.metadata["decay_time"] > 1e6


def test_hierarchy_consistency_single_realization(scale):
    modes = FieldSpec((0.75, 1.25), 2000, jitter=False, seed=7).build(scale, 0)
    rep = hierarchy_consistency(scale, ForceModel.harmonic(), modes, 0.0, 0.0, 10000.0, 200.0, 0.2)
    assert rep.relative_residual < 0.05
    assert rep.t_burn == pytest.approx(10000.0)
    assert rep.full.shape == rep.solution.x1_series.shape
