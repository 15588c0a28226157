import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ucopt.critic import (
    BasisSpec,
    ValueCritic,
    approx_hamiltonian,
    basis_eval,
    control_estimate,
    critic_step,
    lyap_grad,
    omega,
    oracle_projection,
    theta_indicator,
    value_estimate,
    weight_update_rate,
)
from ucopt.errors import CriticDivergenceError
from ucopt.optctl import CostSpec, optimal_law, scalar_hjb_oracle


def _critic(w, n=None, scale=1.0, **kw):
    w = np.atleast_1d(np.asarray(w, dtype=float))
    return ValueCritic(BasisSpec(n_neurons=n or len(w), scale=scale), w, **kw)


class TestTypes:
    @pytest.mark.parametrize("kw", [dict(n_neurons=0), dict(scale=0.0), dict(scale=-1.0)])
    def test_basis_invalid(self, kw):
        with pytest.raises(ValueError):
            BasisSpec(**kw)

    def test_critic_defaults(self):
        c = ValueCritic()
        assert c.alpha1 == 2.0 and c.alpha2 == 0.24
        np.testing.assert_array_equal(c.w_hat, [0.0, 0.0])

    @pytest.mark.parametrize("kw", [dict(alpha1=0.0), dict(alpha2=0.0), dict(alpha2=-0.1)])
    def test_critic_invalid_rates(self, kw):
        with pytest.raises(ValueError):
            ValueCritic(**kw)

    def test_weight_shape_checked(self):
        with pytest.raises(ValueError):
            ValueCritic(BasisSpec(n_neurons=2), np.zeros(3))


class TestBasis:
    @pytest.mark.parametrize("n", [1, 2, 4])
    def test_origin(self, n):
        s, g = basis_eval(BasisSpec(n_neurons=n), 0.0)
        assert not s.any() and not g.any()

    def test_polynomial_values(self):
        s, g = basis_eval(BasisSpec(n_neurons=2, scale=1.0), 2.0)
        np.testing.assert_array_equal(s, [4.0, 16.0])
        np.testing.assert_array_equal(g, [4.0, 32.0])

    def test_scale(self):
        s, g = basis_eval(BasisSpec(n_neurons=2, scale=2.0), 2.0)
        np.testing.assert_allclose(s, [1.0, 1.0])
        np.testing.assert_allclose(g, [1.0, 2.0])

    @pytest.mark.parametrize("n", [1, 2, 4])
    def test_gradient_finite_difference(self, n):
        basis = BasisSpec(n_neurons=n, scale=1.0)
        rng = np.random.default_rng(n)
        h = 1e-6
        for e in rng.uniform(-2.0, 2.0, 100):
            _, g = basis_eval(basis, e)
            fd = (basis_eval(basis, e + h)[0] - basis_eval(basis, e - h)[0]) / (2 * h)
            np.testing.assert_allclose(g, fd, rtol=1e-6, atol=1e-9)


class TestEstimates:
    def test_value(self):
        assert value_estimate(_critic([0.0, 0.0]), 1.7) == 0.0
        assert value_estimate(_critic([3.0, -2.0]), 0.0) == 0.0
        assert value_estimate(_critic([3.0]), 2.0) == 12.0

    def test_control(self):
        spec = CostSpec(1.0, 1.0)
        assert control_estimate(_critic([0.0]), spec, 1.0, 1.0) == 0.0
        assert control_estimate(_critic([5.0, 1.0]), spec, 1.0, 0.0) == 0.0
        assert control_estimate(_critic([1.0]), spec, 1.0, 1.0) == -1.0

    @given(
        w=st.lists(st.floats(-10, 10), min_size=1, max_size=4),
        e=st.floats(-3, 3),
        g=st.floats(-2, 2),
        r=st.floats(1e-3, 10),
    )
    @settings(max_examples=200, deadline=None)
    def test_control_is_argmin_of_quadratic(self, w, e, g, r):
        c = _critic(w)
        spec = CostSpec(1.0, r)
        _, grad = basis_eval(c.basis, e)
        v = float(grad @ c.w_hat)
        u = control_estimate(c, spec, g, e)
        # minimizer of r u^2 + v g u
        assert u == pytest.approx(-g * v / (2 * r), rel=1e-12, abs=1e-300)

    def test_hamiltonian_examples(self):
        assert approx_hamiltonian(_critic([0.0]), CostSpec(1.0, 1.0, 0.0), 1.0, 0.0) == 0.0
        spec = CostSpec(1.0, 0.5, 0.0)
        assert approx_hamiltonian(_critic([1.0]), spec, 1.0, 1.0) == pytest.approx(0.0, abs=1e-15)

    @given(w=st.lists(st.floats(-10, 10), min_size=2, max_size=2), e=st.floats(-2, 2))
    @settings(max_examples=100, deadline=None)
    def test_hamiltonian_unit_gain_ratio_is_state_cost(self, w, e):
        spec = CostSpec(1.0, 1.0, 0.0)
        assert approx_hamiltonian(_critic(w), spec, 1.0, e) == pytest.approx(e * e, rel=1e-9, abs=1e-9)

    def test_hamiltonian_includes_disturbance_bound(self):
        assert approx_hamiltonian(_critic([0.0]), CostSpec(1.0, 1.0, 0.3), 1.0, 0.0) == pytest.approx(0.09)

    def test_omega(self):
        spec = CostSpec(1.0, 1.0)
        np.testing.assert_array_equal(omega(_critic([0.0, 0.0]), spec, 1.0, 1.0), [0.0, 0.0])
        np.testing.assert_array_equal(omega(_critic([3.0, 1.0]), spec, 1.0, 0.0), [0.0, 0.0])
        np.testing.assert_allclose(omega(_critic([2.0]), spec, 1.0, 1.0), [-4.0])


class TestLyapunovGate:
    def test_lyap_grad(self):
        assert lyap_grad(0.0) == 0.0
        assert lyap_grad(2.0) == 16.0
        assert lyap_grad(-2.0) == -16.0

    def test_lyap_grad_is_derivative_of_candidate(self):
        h = 1e-6
        for e in (-1.3, 0.4, 2.0):
            fd = (abs(e + h) ** 5 - abs(e - h) ** 5) / (5 * 2 * h)
            assert lyap_grad(e) == pytest.approx(fd, rel=1e-7)

    def test_theta(self):
        assert theta_indicator(1.0, -1.0) == 0
        assert theta_indicator(1.0, 1.0) == 1
        assert theta_indicator(0.0, 5.0) == 1
        assert theta_indicator(0.0, -5.0) == 1
        assert theta_indicator(-1.0, 1.0) == 0


class TestWeightUpdate:
    def test_origin(self):
        c = _critic([0.0, 0.0])
        np.testing.assert_array_equal(weight_update_rate(c, CostSpec(1, 1, 0.5), 1.0, 0.0, 1.0), [0.0, 0.0])

    def test_worked_example(self):
        c = _critic([1.0], alpha1=2.0, alpha2=0.24)
        w_dot = weight_update_rate(c, CostSpec(1.0, 1.0, 0.0), 1.0, 1.0, 1.0)
        # term 1: (2/2)*1*1*2*1 = 2; omega = -2, H = 1, term 2: -0.24*(-2)*1/(1+4)^2
        assert w_dot.shape == (1,)
        assert w_dot[0] == pytest.approx(2.0192, abs=1e-12)

    def test_independent_elementwise_formula(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(1, 5))
            w = rng.normal(size=n)
            spec = CostSpec(rng.uniform(0.1, 30), rng.uniform(0.005, 2), rng.uniform(0, 1))
            g, e, e_dot = rng.uniform(-1, 1), rng.uniform(-2, 2), rng.uniform(-2, 2)
            c = _critic(w, scale=rng.uniform(0.5, 2))
            x = e / c.basis.scale
            grad = np.array([2 * k * x ** (2 * k - 1) / c.basis.scale for k in range(1, n + 1)])
            k_ = g * g / spec.r_weight
            om = -0.5 * k_ * grad * (grad @ w)
            h = spec.q_weight * e * e - 0.25 * (w @ grad) ** 2 * k_ + 0.25 * (w @ grad) ** 2 + spec.d_max**2
            th = 0.0 if e * abs(e) ** 3 * e_dot < 0 else 1.0
            expected = 0.5 * c.alpha1 * th * k_ * grad * e * abs(e) ** 3 - c.alpha2 * om * h / (1 + om @ om) ** 2
            np.testing.assert_allclose(weight_update_rate(c, spec, g, e, e_dot), expected, rtol=1e-10, atol=1e-12)

    def test_gated_off(self):
        # theta = 0 (decaying error) and H = 0 (weights solve the approximate HJB)
        spec = CostSpec(1.0, 0.5, 0.0)
        c = _critic([1.0])
        assert approx_hamiltonian(c, spec, 1.0, 1.0) == pytest.approx(0.0, abs=1e-15)
        w_dot = weight_update_rate(c, spec, 1.0, 1.0, -1.0)
        np.testing.assert_array_equal(w_dot, [0.0])

    @given(
        w=st.lists(st.floats(-50, 50), min_size=1, max_size=4),
        e=st.floats(-3, 3),
        g=st.floats(-1, 1),
        r=st.floats(1e-3, 1),
    )
    @settings(max_examples=200, deadline=None)
    def test_normalized_term_bounded(self, w, e, g, r):
        spec = CostSpec(5.0, r, 0.2)
        c = _critic(w)
        om = omega(c, spec, g, e)
        h = approx_hamiltonian(c, spec, g, e)
        # with theta gated off (e_dot chosen against e) only the second term remains
        e_dot = -1.0 if e > 0 else 1.0
        if e == 0:
            return
        term2 = weight_update_rate(c, spec, g, e, e_dot)
        n_om = float(np.linalg.norm(om))
        bound = c.alpha2 * abs(h) * n_om / (1 + n_om**2) ** 2
        assert np.linalg.norm(term2) <= bound * (1 + 1e-9) + 1e-300
        assert bound <= c.alpha2 * abs(h) + 1e-300

    def test_learning_direction(self):
        spec = CostSpec(20.0, 0.01, 0.0)
        g = 1 / 5.7
        rng = np.random.default_rng(3)
        for _ in range(100):
            c = _critic(rng.normal(size=2), alpha2=1e-12)
            e = rng.uniform(-2, 2)
            e_dot = 1.0 if e > 0 else -1.0
            _, grad = basis_eval(c.basis, e)
            w_dot = weight_update_rate(c, spec, g, e, e_dot)
            assert float(w_dot @ (grad * lyap_grad(e))) >= 0.0

    def test_divergence(self):
        c = _critic([1e200, 1e200])
        with pytest.raises(CriticDivergenceError):
            weight_update_rate(c, CostSpec(1.0, 0.01), 1.0, 1e3, 1.0)


class TestCriticStep:
    def test_zero_start_at_origin(self):
        c = _critic([0.0, 0.0])
        u, log = critic_step(c, CostSpec(20, 0.01, 0.3), 1 / 5.7, 0.0, 0.0, 1e-4)
        assert u == 0.0
        np.testing.assert_array_equal(c.w_hat, [0.0, 0.0])
        assert log.h_hat == pytest.approx(0.09)
        assert log.theta == 1

    def test_control_from_pre_update_weights(self):
        spec = CostSpec(20, 0.01, 0.0)
        g = 1 / 5.7
        c = _critic([0.5, 0.2])
        u_expected = control_estimate(c, spec, g, 0.8)
        w_dot = weight_update_rate(c, spec, g, 0.8, 0.3)
        w0 = c.w_hat.copy()
        u, log = critic_step(c, spec, g, 0.8, 0.3, 1e-3)
        assert u == u_expected
        np.testing.assert_allclose(c.w_hat, w0 + 1e-3 * w_dot, rtol=1e-15)
        assert log.w_dot_norm == pytest.approx(np.linalg.norm(w_dot))
        assert log.v_hat == pytest.approx(float(w0 @ basis_eval(c.basis, 0.8)[0]))
        for name in ("v_hat", "v_e_hat", "u_hat", "h_hat", "w_dot_norm"):
            assert math.isfinite(getattr(log, name))
        assert log.theta in (0, 1)

    def test_invalid_dt(self):
        with pytest.raises(ValueError):
            critic_step(_critic([0.0]), CostSpec(), 0.1, 1.0, 0.0, 0.0)

    def test_oracle_projection_frozen_weights(self):
        spec = CostSpec(20.0, 0.01, 0.0)
        g = 1 / 5.7
        basis = BasisSpec(n_neurons=2)
        w, rms = oracle_projection(basis, spec, g)
        # the oracle gradient is linear in e when d_max = 0: fitted exactly by x^2
        assert rms < 1e-10
        c = ValueCritic(basis, w)
        for e in np.linspace(-1, 1, 21):
            u_opt = optimal_law(spec, g, scalar_hjb_oracle(spec, e, g))
            assert control_estimate(c, spec, g, e) == pytest.approx(u_opt, abs=1e-8)

    def test_oracle_projection_with_disturbance(self):
        spec = CostSpec(20.0, 0.01, 0.2)
        g = 1 / 5.7
        basis = BasisSpec(n_neurons=4)
        w, rms = oracle_projection(basis, spec, g)
        c = ValueCritic(basis, w)
        es = np.linspace(-1, 1, 401)
        errs = [
            control_estimate(c, spec, g, e) - optimal_law(spec, g, scalar_hjb_oracle(spec, e, g)) for e in es
        ]
        # control error equals the gradient fit error times g/(2r)
        got_rms = float(np.sqrt(np.mean(np.square(errs))))
        assert got_rms == pytest.approx(abs(g) / (2 * spec.r_weight) * rms, rel=1e-9)
