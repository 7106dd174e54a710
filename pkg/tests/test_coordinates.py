import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helars.coordinates import (
    DesignBlock,
    MixedPoint,
    dtheta_drho,
    fisher_theta,
    frozen_jacobian_theta,
    mixed_to_full,
    newton_halve_step,
    theta_to_eta,
    theta_to_xi,
)
from helars.errors import NoConvergence, SingularBlock
from helars.models import NormalModel, TruncatedNormalModel
from helars.validation import fd_jacobian


@pytest.fixture
def setup():
    rng = np.random.default_rng(3)
    design = DesignBlock(rng.normal(size=(7, 3)))
    model = TruncatedNormalModel(7)
    theta = np.array([0.5, 0.2, -0.3, 0.1, -0.7])
    aux = model.oracle_L(design.xi(theta))
    return design, model, theta, aux


class TestDesign:
    def test_x_b_structure(self):
        X = np.arange(6.0).reshape(3, 2) ** 1.5
        design = DesignBlock(X)
        XB = design.X_B
        assert XB.shape == (4, 4)
        np.testing.assert_array_equal(XB[:3, :3], np.column_stack([np.ones(3), X]))
        np.testing.assert_array_equal(XB[3], [0, 0, 0, 1])
        np.testing.assert_array_equal(XB[:3, 3], 0)

    def test_rank_deficient(self):
        with pytest.raises(ValueError):
            DesignBlock(np.ones((4, 1)))

    def test_theta_to_xi_example(self):
        design = DesignBlock(np.array([[1.0], [-1.0]]))
        np.testing.assert_allclose(theta_to_xi(design, [0.0, 1.0, -1.0]), [1.0, -1.0, -1.0])

    def test_intercept_broadcast(self):
        design = DesignBlock(np.array([[1.0], [2.0], [5.0]]))
        np.testing.assert_allclose(theta_to_xi(design, [2.5, 0.0, 0.0]), [2.5, 2.5, 2.5, 0.0])

    def test_xi_matches_dense(self, setup):
        design, _, theta, _ = setup
        np.testing.assert_allclose(design.xi(theta), design.X_B @ theta)


class TestEtaAndFisher:
    def test_eta_single_observation(self):
        m = TruncatedNormalModel(1)
        design = DesignBlock(np.zeros((1, 0)))
        eta = theta_to_eta(design, m, [0.0, -1.0], m.init_aux())
        np.testing.assert_allclose(eta, [0.564190, 0.5], atol=1e-6)

    def test_fisher_single_observation(self):
        m = TruncatedNormalModel(1)
        design = DesignBlock(np.zeros((1, 0)))
        G = fisher_theta(design, m, [0.0, -1.0], m.init_aux())
        np.testing.assert_allclose(G, [[0.181690, 0.282095], [0.282095, 0.5]], atol=1e-6)

    def test_fisher_chain_rule(self, setup):
        design, model, theta, aux = setup
        G = fisher_theta(design, model, theta, aux)
        dense = design.X_B.T @ model.hess_psi_star(design.xi(theta), aux) @ design.X_B
        np.testing.assert_allclose(G, dense, rtol=1e-12)
        np.linalg.cholesky(G)

    def test_fisher_is_fd_of_eta(self, setup):
        design, model, theta, _ = setup
        eta = lambda th: theta_to_eta(design, model, th, model.oracle_L(design.xi(th)))
        G = fisher_theta(design, model, theta, model.oracle_L(design.xi(theta)))
        np.testing.assert_allclose(fd_jacobian(eta, theta), G, rtol=1e-5, atol=1e-7)

    def test_frozen_jacobian_is_fd_at_fixed_aux(self, setup):
        design, model, theta, aux = setup
        J = frozen_jacobian_theta(design, model, theta, aux)
        np.testing.assert_allclose(
            fd_jacobian(lambda th: theta_to_eta(design, model, th, aux), theta), J, rtol=1e-5, atol=1e-7
        )

    def test_frozen_jacobian_is_fisher_for_normal(self, setup):
        design, _, theta, _ = setup
        m = NormalModel(7)
        np.testing.assert_allclose(
            frozen_jacobian_theta(design, m, theta, None), fisher_theta(design, m, theta, None)
        )


class TestNewtonHalveStep:
    def test_examples(self):
        assert newton_halve_step(-1.0, 3.0) == 0.25
        assert newton_halve_step(-1.0, 4.0) == 0.125
        assert newton_halve_step(-1.0, 0.5) == 1.0

    @settings(max_examples=200)
    @given(theta=st.floats(-10, -1e-6), excess=st.floats(1e-9, 1e6))
    def test_stays_negative(self, theta, excess):
        delta = -theta + excess
        scale = newton_halve_step(theta, delta)
        assert 0 < scale <= 1
        assert theta + scale * delta < 0


class TestMixedToFull:
    def test_empty_mask(self, setup):
        design, model, theta, aux = setup
        rho = MixedPoint(theta)
        th, eta = mixed_to_full(design, model, rho, aux, model.init_theta(3))
        np.testing.assert_array_equal(th, theta)
        np.testing.assert_allclose(eta, theta_to_eta(design, model, theta, aux))

    def test_full_mask_inverts_eta(self, setup):
        design, model, theta, aux = setup
        eta = theta_to_eta(design, model, theta, aux)
        th, _ = mixed_to_full(design, model, MixedPoint(eta, np.ones(5, bool)), aux, theta + 0.05)
        np.testing.assert_allclose(theta_to_eta(design, model, th, aux), eta, atol=1e-8)
        np.testing.assert_allclose(th, theta, atol=1e-8)

    def test_random_masks_roundtrip(self, setup, rng):
        design, model, theta, aux = setup
        eta = theta_to_eta(design, model, theta, aux)
        for _ in range(20):
            J = rng.random(5) < 0.5
            rho = MixedPoint.from_full(theta, eta, J)
            guess = theta + rng.normal(scale=0.05, size=5)
            guess[-1] = min(guess[-1], -0.1)
            th, et = mixed_to_full(design, model, rho, aux, guess)
            np.testing.assert_allclose(th, theta, atol=1e-6)
            np.testing.assert_allclose(et, eta, atol=1e-6)

    def test_callable_aux(self, setup):
        design, model, theta, _ = setup
        exact = lambda th: model.oracle_L(design.xi(th))
        eta = theta_to_eta(design, model, theta, exact(theta))
        J = np.array([True, False, True, False, True])
        th, _ = mixed_to_full(design, model, MixedPoint.from_full(theta, eta, J), exact, theta * 0.9)
        np.testing.assert_allclose(th, theta, atol=1e-8)

    def test_no_convergence(self, setup):
        design, model, theta, aux = setup
        eta = theta_to_eta(design, model, theta, aux)
        from helars.coordinates import NewtonOptions

        with pytest.raises(NoConvergence):
            mixed_to_full(
                design, model, MixedPoint(eta, np.ones(5, bool)), aux, theta + 0.3, NewtonOptions(max_iter=1)
            )


class TestDthetaDrho:
    def test_empty_mask_identity(self, setup):
        design, model, theta, aux = setup
        np.testing.assert_array_equal(dtheta_drho(design, model, theta, aux, np.zeros(5, bool)), np.eye(5))

    def test_full_mask_is_inverse_fisher(self, setup):
        design, model, theta, aux = setup
        out = dtheta_drho(design, model, theta, aux, np.ones(5, bool))
        np.testing.assert_allclose(out, np.linalg.inv(fisher_theta(design, model, theta, aux)), rtol=1e-10)

    def test_theta_rows_exact(self, setup):
        design, model, theta, aux = setup
        J = np.array([True, False, True, False, True])
        out = dtheta_drho(design, model, theta, aux, J)
        np.testing.assert_array_equal(out[~J], np.eye(5)[~J])

    def test_against_finite_differences(self, setup):
        design, model, theta, _ = setup
        exact = lambda th: model.oracle_L(design.xi(th))
        J = np.array([True, False, True, False, True])
        eta = theta_to_eta(design, model, theta, exact(theta))
        rho0 = MixedPoint.from_full(theta, eta, J).values

        def recover(rho):
            return mixed_to_full(design, model, MixedPoint(rho, J), exact, theta)[0]

        fd = fd_jacobian(recover, rho0, h=1e-5)
        out = dtheta_drho(design, model, theta, exact(theta), J)
        np.testing.assert_allclose(fd, out, rtol=1e-4, atol=1e-6)

    def test_singular_block(self):
        m = NormalModel(3)
        design = DesignBlock(np.array([[0.0], [1.0], [2.0]]))
        # huge covariate coefficient makes the block numerically singular
        theta = np.array([0.0, 0.0, -1e-18])
        with pytest.raises(SingularBlock):
            dtheta_drho(design, m, theta, None, np.ones(3, bool))
