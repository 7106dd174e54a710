import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helars.errors import DegenerateMoments, DomainViolation, NotPositiveDefinite
from helars.models import LOG_HALF_SQRT_PI, NormalModel, TruncatedNormalModel, make_model
from helars.validation import fd_grad, fd_jacobian, quad_log_A, quad_moments

from conftest import random_xi


class TestTruncatedNormal:
    def test_anchor_values(self):
        m = TruncatedNormalModel(1)
        xi = np.array([0.0, -1.0])
        L = m.init_aux()
        np.testing.assert_allclose(L, [math.log(math.sqrt(math.pi) / 2)])
        np.testing.assert_allclose(m.pfaffian_xi(xi, L), [[0.564190, 0.5]], atol=1e-6)
        np.testing.assert_allclose(m.grad_psi_star(xi, L), [0.564190, 0.5], atol=1e-6)
        np.testing.assert_allclose(
            m.hess_psi_star(xi, L), [[0.181690, 0.282095], [0.282095, 0.5]], atol=1e-6
        )

    def test_oracle_matches_quadrature(self, rng):
        m = TruncatedNormalModel(1)
        for _ in range(20):
            xi = random_xi(rng, 1)
            assert abs(m.oracle_L(xi)[0] - quad_log_A(xi[0], xi[1])) < 1e-10

    def test_oracle_known_value(self):
        m = TruncatedNormalModel(1)
        # reference value is quoted to six decimals
        np.testing.assert_allclose(m.oracle_L([1.0, -1.0]), [0.548258], atol=2e-6)

    def test_moments_match_quadrature(self, rng):
        m = TruncatedNormalModel(3)
        xi = random_xi(rng, 3)
        mu = m.grad_psi_star(xi, m.oracle_L(xi))
        means, seconds = zip(*[quad_moments(xi[a], xi[3]) for a in range(3)])
        np.testing.assert_allclose(mu[:3], means, rtol=1e-9)
        np.testing.assert_allclose(mu[3], sum(seconds), rtol=1e-9)

    def test_gradient_is_fd_of_potential(self, rng):
        m = TruncatedNormalModel(3)
        psi = lambda x: m.psi_star(x, m.oracle_L(x))
        for _ in range(10):
            xi = random_xi(rng, 3)
            g = m.grad_psi_star(xi, m.oracle_L(xi))
            np.testing.assert_allclose(fd_grad(psi, xi), g, rtol=1e-6, atol=1e-8)

    def test_hessian_is_fd_of_gradient(self, rng):
        m = TruncatedNormalModel(3)
        grad = lambda x: m.grad_psi_star(x, m.oracle_L(x))
        for _ in range(10):
            xi = random_xi(rng, 3)
            H = m.hess_psi_star(xi, m.oracle_L(xi))
            np.testing.assert_allclose(fd_jacobian(grad, xi), H, rtol=1e-5, atol=1e-8)

    def test_frozen_jacobian_is_fd_at_fixed_aux(self, rng):
        m = TruncatedNormalModel(2)
        xi = random_xi(rng, 2)
        L = m.oracle_L(xi)
        diag, col, row, corner = m.frozen_jacobian_blocks(xi, L)
        J = fd_jacobian(lambda x: m.grad_psi_star(x, L), xi)
        np.testing.assert_allclose(np.diag(J)[:2], diag, rtol=1e-6)
        np.testing.assert_allclose(J[:2, 2], col, rtol=1e-6)
        np.testing.assert_allclose(J[2, :2], row, rtol=1e-6)
        np.testing.assert_allclose(J[2, 2], corner, rtol=1e-6)

    def test_pfaffian_matches_fd_of_oracle(self, rng):
        m = TruncatedNormalModel(2)
        xi = random_xi(rng, 2)
        P = m.pfaffian_xi(xi, m.oracle_L(xi))
        np.testing.assert_allclose(fd_jacobian(m.oracle_L, xi), P, rtol=1e-6, atol=1e-9)

    def test_xi_mu_roundtrip(self, rng):
        m = TruncatedNormalModel(4)
        for _ in range(20):
            xi = random_xi(rng, 4)
            L = m.oracle_L(xi)
            np.testing.assert_allclose(m.xi_from_mu(m.mu_from_xi(xi, L), L), xi, atol=1e-10)

    def test_domain_violation(self):
        m = TruncatedNormalModel(1)
        with pytest.raises(DomainViolation):
            m.grad_psi_star([0.0, 0.0], [0.0])
        with pytest.raises(DomainViolation):
            m.oracle_L([0.0, 0.5])

    def test_degenerate_moments(self):
        m = TruncatedNormalModel(2)
        with pytest.raises(DegenerateMoments):
            m.xi_from_mu([1.0, 1.0, 2.0], m.init_aux())

    def test_not_positive_definite_flagged(self):
        m = TruncatedNormalModel(1)
        # an aux far from the truth gives an impossible variance
        with pytest.raises(NotPositiveDefinite):
            m.hess_blocks(np.array([0.0, -1.0]), np.array([-3.0]))

    def test_ratios_stable_for_large_arguments(self):
        m = TruncatedNormalModel(2)
        xi = np.array([40.0, -30.0, -0.5])
        H = m.hess_psi_star(xi, m.oracle_L(xi))
        assert np.all(np.isfinite(H))
        assert np.all(np.linalg.eigvalsh(H) > 0)


class TestNormal:
    def test_potential_value(self):
        m = NormalModel(1)
        assert abs(m.psi_star([0.0, -1.0]) - 0.572365) < 1e-6

    def test_closed_forms_against_fd(self, rng):
        m = NormalModel(3)
        for _ in range(10):
            xi = random_xi(rng, 3)
            np.testing.assert_allclose(fd_grad(m.psi_star, xi), m.grad_psi_star(xi), rtol=1e-6, atol=1e-8)
            np.testing.assert_allclose(
                fd_jacobian(m.grad_psi_star, xi), m.hess_psi_star(xi), rtol=1e-5, atol=1e-8
            )

    def test_xi_mu_roundtrip(self, rng):
        m = NormalModel(5)
        xi = random_xi(rng, 5)
        np.testing.assert_allclose(m.xi_from_mu(m.mu_from_xi(xi)), xi, atol=1e-10)

    def test_empty_aux(self):
        m = NormalModel(3)
        assert m.n_aux == 0
        assert m.init_aux().shape == (0,)
        assert m.pfaffian_xi(random_xi(np.random.default_rng(0), 3), None).shape == (0, 4)


def test_make_model():
    assert isinstance(make_model("truncnorm", 3), TruncatedNormalModel)
    assert isinstance(make_model("normal", 3), NormalModel)
    with pytest.raises(ValueError):
        make_model("gamma", 3)


@settings(max_examples=50, deadline=None)
@given(
    s=st.floats(-3, 3),
    t=st.floats(-5, -0.2),
)
def test_hessian_positive_definite(s, t):
    m = TruncatedNormalModel(1)
    xi = np.array([s, t])
    H = m.hess_psi_star(xi, m.oracle_L(xi))
    assert np.all(np.linalg.eigvalsh(H) > 0)


def test_anchor_constant():
    assert abs(LOG_HALF_SQRT_PI - (-0.120782)) < 1e-6
