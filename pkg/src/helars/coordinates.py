"""Coordinates on the GLM submanifold.

The submanifold is parametrized by ``theta = (theta^0, theta^1..theta^d,
theta^{d+1})``: intercept, covariate coefficients, and the shared
second-moment coefficient.  It sits in the ambient family through
``xi = X_B theta`` with ``X_B = [[1 | X, 0], [0, 1]]``, and its dual
coordinate is ``eta = X_B^T mu``.

A *mixed* point holds eta entries on a mask ``J`` and theta entries on the
complement; :func:`mixed_to_full` recovers the missing halves by Newton's
method.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergence, SingularBlock


class DesignBlock:
    """Block design ``X_B`` built from an ``(n, d)`` covariate matrix.

    ``X_B`` is never materialized in the hot paths; products with it are
    done blockwise.  ``r`` (number of extra sufficient statistics) is 1.
    """

    r = 1

    def __init__(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        self.X = X
        self.n, self.d = X.shape
        self.X_tilde = np.hstack([np.ones((self.n, 1)), X])
        rank = np.linalg.matrix_rank(self.X_tilde)
        if rank < self.d + 1:
            raise ValueError(f"design [1 | X] is rank deficient (rank {rank} < {self.d + 1})")

    @property
    def p(self):
        """Length of theta and eta, ``d + r + 1``."""
        return self.d + 1 + self.r

    @property
    def extra(self):
        """Indices of the non-covariate coordinates ``{0, d+1, ..., d+r}``."""
        return np.array([0] + list(range(self.d + 1, self.p)))

    @property
    def X_B(self):
        n, d = self.n, self.d
        out = np.zeros((n + self.r, self.p))
        out[:n, : d + 1] = self.X_tilde
        out[n:, d + 1 :] = np.eye(self.r)
        return out

    def xi(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.concatenate([self.X_tilde @ theta[: self.d + 1], theta[self.d + 1 :]])

    def eta_from_mu(self, mu):
        mu = np.asarray(mu, dtype=float)
        return np.concatenate([self.X_tilde.T @ mu[: self.n], mu[self.n :]])

    def aux_jacobian(self, own, shared):
        """``dL/dtheta = (dL/dxi) X_B`` from the sparse form of ``dL/dxi``."""
        return np.hstack([own[:, None] * self.X_tilde, shared[:, None]])


@dataclass
class MixedPoint:
    """Coordinate vector whose entries are eta on ``eta_mask`` and theta elsewhere."""

    values: np.ndarray
    eta_mask: np.ndarray = field(default=None)

    def __post_init__(self):
        self.values = np.array(self.values, dtype=float).reshape(-1)
        if self.eta_mask is None:
            self.eta_mask = np.zeros(self.values.shape[0], dtype=bool)
        self.eta_mask = np.array(self.eta_mask, dtype=bool).reshape(-1)
        if self.eta_mask.shape != self.values.shape:
            raise ValueError("values and eta_mask must have the same length")

    @classmethod
    def from_full(cls, theta, eta, eta_mask):
        eta_mask = np.asarray(eta_mask, dtype=bool)
        return cls(np.where(eta_mask, eta, theta), eta_mask)

    def with_value(self, index, value):
        values = self.values.copy()
        values[index] = value
        return MixedPoint(values, self.eta_mask.copy())


@dataclass(frozen=True)
class NewtonOptions:
    """Mixed-coordinate Newton settings.

    Convergence is declared when ``||F||^2 <= tol * max(1, ||eta_J||)^2``.
    """

    tol: float = 1e-24
    max_iter: int = 200


def theta_to_xi(design, theta):
    return design.xi(theta)


def theta_to_eta(design, model, theta, aux):
    xi = design.xi(theta)
    return design.eta_from_mu(model.mu_from_xi(xi, aux))


def fisher_theta(design, model, theta, aux, check=True):
    """Fisher information in theta, ``X_B^T G* X_B``."""
    xi = design.xi(theta)
    diag, cross, corner = model.hess_blocks(xi, aux, check=check)
    Xt = design.X_tilde
    d1 = design.d + 1
    G = np.empty((design.p, design.p))
    G[:d1, :d1] = Xt.T @ (diag[:, None] * Xt)
    G[:d1, d1] = Xt.T @ cross
    G[d1, :d1] = G[:d1, d1]
    G[d1, d1] = corner
    return G


def frozen_jacobian_theta(design, model, theta, aux):
    """Jacobian of ``eta`` in ``theta`` with the auxiliary vector held fixed."""
    xi = design.xi(theta)
    diag, col, row, corner = model.frozen_jacobian_blocks(xi, aux)
    Xt = design.X_tilde
    d1 = design.d + 1
    Jac = np.empty((design.p, design.p))
    Jac[:d1, :d1] = Xt.T @ (diag[:, None] * Xt)
    Jac[:d1, d1] = Xt.T @ col
    Jac[d1, :d1] = row @ Xt
    Jac[d1, d1] = corner
    return Jac


def newton_halve_step(theta_entry, delta_entry):
    """Scale ``(1/2)**alpha`` keeping ``theta_entry + scale * delta_entry < 0``.

    ``alpha = ceil(-log(-theta/delta) / log 2)``, bumped by one when that
    lands exactly on zero.  Only meaningful when the raw step crosses zero.
    """
    if not (theta_entry < 0.0 and theta_entry + delta_entry >= 0.0):
        return 1.0
    alpha = int(np.ceil(-np.log(-theta_entry / delta_entry) / np.log(2.0)))
    alpha = max(alpha, 0)
    scale = 0.5**alpha
    while theta_entry + scale * delta_entry >= 0.0:
        alpha += 1
        scale = 0.5**alpha
    return scale


def mixed_to_full(design, model, rho, aux, theta_guess, options=NewtonOptions()):
    """Recover ``(theta, eta)`` from a mixed point.

    Solves ``F = eta_J(rho) - eta_J(theta~(theta^J)) = 0`` for the unknown
    ``theta^J``, with ``L`` held at ``aux``; the Newton matrix is therefore
    the Jacobian of ``eta`` at fixed ``L`` (:func:`frozen_jacobian_theta`),
    which gives quadratic convergence to that root.  When ``aux`` is a
    callable giving the exact ``L(theta)``, the Fisher information is used.
    The unknown ``eta_{J-bar}`` enter the full residual with an identity
    Jacobian block, so they are read off from ``eta(theta)`` once ``theta``
    is found; the iterates for ``theta^J`` are the same as for the full
    block-triangular system.

    ``aux`` is the auxiliary vector at the point ``rho`` denotes; it may also
    be a callable ``theta -> aux`` (used by oracle mode).

    If a step would push ``theta^{d+1}`` to a non-negative value, it is
    shortened with :func:`newton_halve_step`.

    Returns
    -------
    theta, eta : ndarray
    """
    J = rho.eta_mask
    theta = np.array(theta_guess, dtype=float)
    theta[~J] = rho.values[~J]
    aux_fn = aux if callable(aux) else (lambda _: aux)
    if not J.any():
        return theta, theta_to_eta(design, model, theta, aux_fn(theta))

    target = rho.values[J]
    tol = options.tol * max(1.0, float(np.linalg.norm(target))) ** 2
    last = design.p - 1
    last_unknown = bool(J[last])
    sub_last = int(np.count_nonzero(J)) - 1
    for _ in range(options.max_iter + 1):
        cur_aux = aux_fn(theta)
        eta = theta_to_eta(design, model, theta, cur_aux)
        F = target - eta[J]
        if not np.all(np.isfinite(F)):
            raise NoConvergence("non-finite residual in mixed-coordinate Newton")
        if F @ F <= tol:
            return theta, eta
        if callable(aux):
            G = fisher_theta(design, model, theta, cur_aux, check=False)
        else:
            G = frozen_jacobian_theta(design, model, theta, cur_aux)
        try:
            step = np.linalg.solve(G[np.ix_(J, J)], F)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(f"singular Newton system: {exc}") from None
        if last_unknown:
            step = step * newton_halve_step(theta[last], step[sub_last])
        theta[J] += step
    raise NoConvergence(
        f"mixed-coordinate Newton did not converge in {options.max_iter} iterations "
        f"(|F|^2={F @ F:.3e})"
    )


def dtheta_drho(design, model, theta, aux, eta_mask):
    """Jacobian of the map from mixed coordinates to theta.

    Rows on the theta part are exact unit vectors; rows on the eta part are
    ``G_JJ^{-1} [I | -G_{J,J-bar}]`` arranged by column mask.
    """
    J = np.asarray(eta_mask, dtype=bool)
    p = design.p
    out = np.eye(p)
    if not J.any():
        return out
    G = fisher_theta(design, model, theta, aux, check=False)
    G_JJ = G[np.ix_(J, J)]
    if np.linalg.cond(G_JJ) > 1.0 / np.finfo(float).eps:
        raise SingularBlock("d eta_J / d theta^J is numerically singular")
    B = np.zeros((int(J.sum()), p))
    B[:, J] = np.eye(int(J.sum()))
    B[:, ~J] = -G[np.ix_(J, ~J)]
    out[J, :] = np.linalg.solve(G_JJ, B)
    return out
