"""Exponential-family models for the GLM ambient space.

A model describes the joint law of ``n`` independent observations through
the natural parameter ``xi = (xi^1, ..., xi^n, xi^{n+1})``, where each
``xi^a`` is the per-observation linear coefficient and ``xi^{n+1}`` is the
shared coefficient of ``sum(y**2)``.  Its log-partition function is written
as an elementary function of ``xi`` and an auxiliary vector ``L`` (one
log-normalizer per observation).  Everything the algorithms need (moments,
Fisher information, potential) is computed from ``(xi, L)`` alone.

Two models are provided:

* :class:`TruncatedNormalModel`: each ``y_a`` is normal restricted to
  ``(0, inf)``.  ``L_a = log A(xi^a, xi^{n+1})`` has no closed form and is
  carried along paths by integrating its Pfaffian system.
* :class:`NormalModel`: the untruncated baseline.  Its potential is closed
  form, so the auxiliary vector is empty.
"""

import math

import numpy as np
from scipy.special import erfcx

from .errors import DegenerateMoments, DomainViolation, NotPositiveDefinite

LOG_HALF_SQRT_PI = math.log(math.sqrt(math.pi) / 2.0)


def _as_vector(x):
    return np.asarray(x, dtype=float).reshape(-1)


class ExpFamilyModel:
    """Common surface of the models.

    Subclasses implement the block forms :meth:`aux_gradient` and
    :meth:`hess_blocks`; the dense matrices are assembled here.  Both models
    have one extra sufficient statistic (``r = 1``).

    Parameters
    ----------
    n : int
        Number of observations.
    """

    name = "abstract"
    r = 1

    def __init__(self, n):
        if n < 1:
            raise ValueError("need at least one observation")
        self.n = int(n)

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n})"

    # -- bookkeeping ---------------------------------------------------------

    @property
    def dim(self):
        """Length of the natural parameter, ``n + r``."""
        return self.n + self.r

    @property
    def n_aux(self):
        """Length of the auxiliary vector."""
        raise NotImplementedError

    def in_domain(self, xi):
        xi = _as_vector(xi)
        return bool(xi[self.n] < 0.0 and np.isfinite(xi).all())

    def check_domain(self, xi):
        xi = _as_vector(xi)
        if xi.shape[0] != self.dim:
            raise ValueError(f"xi must have length {self.dim}, got {xi.shape[0]}")
        if not self.in_domain(xi):
            raise DomainViolation(
                f"xi^(n+1) must be negative and xi finite; got xi^(n+1)={xi[self.n]!r}"
            )
        return xi

    def _aux(self, aux):
        if self.n_aux == 0:
            return np.zeros(0)
        aux = _as_vector(aux)
        if aux.shape[0] != self.n_aux:
            raise ValueError(f"aux must have length {self.n_aux}, got {aux.shape[0]}")
        return aux

    def init_theta(self, d):
        """Anchor point ``theta = (0, ..., 0, -1)`` for ``d`` covariates."""
        theta = np.zeros(d + 1 + self.r)
        theta[-1] = -1.0
        return theta

    def init_aux(self):
        """Exact auxiliary vector at the anchor ``xi = (0, ..., 0, -1)``."""
        raise NotImplementedError

    def init_point(self, d):
        return self.init_theta(d), self.init_aux()

    # -- block forms ---------------------------------------------------------

    def _aux_gradient_unchecked(self, xi, aux):
        return self.aux_gradient(xi, aux)

    def aux_gradient(self, xi, aux):
        """Non-zero entries of ``dL/dxi``.

        Returns ``(own, shared)`` where ``own[a] = dL_a/dxi^a`` and
        ``shared[a] = dL_a/dxi^{n+1}``; all other entries vanish.
        """
        raise NotImplementedError

    def frozen_jacobian_blocks(self, xi, aux):
        """Jacobian of ``mu`` in ``xi`` with ``L`` held fixed.

        Returns ``(diag, col, row, corner)``: ``diag[a] = dmu_a/dxi^a``,
        ``col[a] = dmu_a/dxi^{n+1}``, ``row[a] = dmu_{n+1}/dxi^a`` and
        ``corner = dmu_{n+1}/dxi^{n+1}``.  Where ``L`` is a closed form of
        ``xi`` this is the Hessian of the potential.
        """
        diag, cross, corner = self.hess_blocks(xi, aux, check=False)
        return diag, cross, cross, corner

    def hess_blocks(self, xi, aux, check=True):
        """Non-zero blocks of the Hessian of the potential.

        Returns ``(diag, cross, corner)``: ``diag[a]`` is entry ``(a, a)``,
        ``cross[a]`` is entry ``(a, n+1)`` and ``corner`` is ``(n+1, n+1)``.
        Off-diagonal ``(a, b)`` entries with ``a != b <= n`` are zero.
        """
        raise NotImplementedError

    # -- dense contract ------------------------------------------------------

    def pfaffian_xi(self, xi, aux):
        """``dL/dxi`` as an ``n_aux x (n+1)`` matrix."""
        xi = self.check_domain(xi)
        aux = self._aux(aux)
        out = np.zeros((self.n_aux, self.dim))
        if self.n_aux:
            own, shared = self._aux_gradient_unchecked(xi, aux)
            idx = np.arange(self.n)
            out[idx, idx] = own
            out[:, self.n] = shared
        return out

    def grad_psi_star(self, xi, aux):
        """Expectation parameter ``mu = d psi*/d xi``."""
        raise NotImplementedError

    def mu_from_xi(self, xi, aux=None):
        return self.grad_psi_star(xi, aux)

    def hess_psi_star(self, xi, aux=None):
        """Fisher information in ``xi`` as a dense symmetric matrix."""
        diag, cross, corner = self.hess_blocks(xi, aux)
        n = self.n
        h = np.zeros((n + 1, n + 1))
        h[np.arange(n), np.arange(n)] = diag
        h[:n, n] = cross
        h[n, :n] = cross
        h[n, n] = corner
        return h

    def check_positive_definite(self, diag, cross, corner):
        # block Cholesky of [[diag(d), c], [c^T, s]]
        if not (np.all(diag > 0.0) and np.all(np.isfinite(diag))):
            raise NotPositiveDefinite("non-positive variance entry in the Fisher information")
        schur = corner - np.sum(cross * cross / diag)
        if not (np.isfinite(schur) and schur > 0.0):
            raise NotPositiveDefinite(
                f"Fisher information is not positive definite (Schur complement {schur!r})"
            )

    def psi_star(self, xi, aux):
        raise NotImplementedError

    def xi_from_mu(self, mu, aux):
        raise NotImplementedError

    def oracle_L(self, xi):
        """Closed-form auxiliary vector; for validation only."""
        raise NotImplementedError


class TruncatedNormalModel(ExpFamilyModel):
    """Independent observations, each normal truncated to ``(0, inf)``.

    With ``A(s, t) = int_0^inf exp(s*y + t*y**2) dy`` and
    ``L_a = log A(xi^a, xi^{n+1})`` the potential is ``sum(L)``.  The
    log-normalizers satisfy

    ``dL_a/dxi^a = -(exp(-L_a) + xi^a) / (2 xi^{n+1})``
    ``dL_a/dxi^{n+1} = -(1 + xi^a dL_a/dxi^a) / (2 xi^{n+1})``

    and ``dL_a/dxi^b = 0`` for other ``b <= n``.
    """

    name = "truncnorm"

    @property
    def n_aux(self):
        return self.n

    def init_aux(self):
        return np.full(self.n, LOG_HALF_SQRT_PI)

    def moment_ratios(self, xi, aux, order=4):
        """Ratios ``D_m = (d^m A_a / d(xi^a)^m) / A_a`` for ``m = 1..order``.

        ``D_1`` comes from the Pfaffian system; higher ratios follow the
        recursion ``D_m = -((m-1) D_{m-2} + xi^a D_{m-1}) / (2 xi^{n+1})``
        with ``D_0 = 1``.  Working with ratios keeps everything O(1) even
        when ``A_a`` itself over- or underflows.

        Returns an array of shape ``(order + 1, n)`` with row ``m`` holding
        ``D_m`` (row 0 is all ones).
        """
        xi = self.check_domain(xi)
        return self._ratios(xi, self._aux(aux), order)

    def _ratios(self, xi, aux, order):
        t = xi[self.n]
        s = xi[: self.n]
        c = -0.5 / t
        D = np.empty((order + 1, self.n))
        D[0] = 1.0
        D[1] = c * (np.exp(-aux) + s)
        for m in range(2, order + 1):
            D[m] = c * ((m - 1) * D[m - 2] + s * D[m - 1])
        return D

    def aux_gradient(self, xi, aux):
        return self._aux_gradient_unchecked(self.check_domain(xi), self._aux(aux))

    def _aux_gradient_unchecked(self, xi, aux):
        D = self._ratios(xi, aux, 2)
        # dL/dxi^{n+1} = (d A/d xi^{n+1}) / A = D_2
        return D[1], D[2]

    def grad_psi_star(self, xi, aux):
        own, shared = self.aux_gradient(xi, aux)
        return np.concatenate([own, [shared.sum()]])

    def frozen_jacobian_blocks(self, xi, aux):
        # D_1 = c (exp(-L) + s) and D_2 = c (1 + s D_1) with c = -1/(2t)
        D = self.moment_ratios(xi, aux, order=2)
        t = xi[self.n]
        s = xi[: self.n]
        c = -0.5 / t
        diag = np.full(self.n, c)
        col = -D[1] / t
        row = c * (D[1] + s * c)
        corner = float(np.sum(-(D[2] + c * s * D[1]) / t))
        return diag, col, row, corner

    def hess_blocks(self, xi, aux, check=True):
        D = self.moment_ratios(xi, aux, order=4)
        diag = D[2] - D[1] ** 2
        cross = D[3] - D[2] * D[1]
        corner = float(np.sum(D[4] - D[2] ** 2))
        if check:
            self.check_positive_definite(diag, cross, corner)
        return diag, cross, corner

    def psi_star(self, xi, aux):
        self.check_domain(xi)
        return float(np.sum(self._aux(aux)))

    def xi_from_mu(self, mu, aux):
        mu = _as_vector(mu)
        aux = self._aux(aux)
        n = self.n
        m1, m2 = mu[:n], mu[n]
        spread = m2 - np.sum(m1 * m1)
        if not spread > 1e-12 * abs(m2):
            raise DegenerateMoments(
                f"second moment does not exceed the squared means (spread {spread!r})"
            )
        inv_A = np.exp(-aux)
        t = -np.sum(1.0 - m1 * inv_A) / (2.0 * spread)
        xi = np.concatenate([-2.0 * t * m1 - inv_A, [t]])
        return self.check_domain(xi)

    def oracle_L(self, xi):
        xi = self.check_domain(xi)
        s = -xi[self.n]
        z = -xi[: self.n] / (2.0 * math.sqrt(s))
        # erfc(z) * exp(z^2) == erfcx(z); the exp(z^2) cancels the xi^2/(4s) term
        return 0.5 * math.log(math.pi / s) - math.log(2.0) + np.log(erfcx(z))


class NormalModel(ExpFamilyModel):
    """Independent untruncated normal observations with common variance.

    ``psi*(xi) = -sum(xi_a**2) / (4 xi^{n+1}) - (n/2) log(-xi^{n+1}) + (n/2) log(pi)``.
    No auxiliary vector is needed; ``aux`` arguments are ignored.
    """

    name = "normal"

    @property
    def n_aux(self):
        return 0

    def init_aux(self):
        return np.zeros(0)

    def aux_gradient(self, xi, aux):
        return np.zeros(0), np.zeros(0)

    def grad_psi_star(self, xi, aux=None):
        xi = self.check_domain(xi)
        n = self.n
        t = xi[n]
        s = xi[:n]
        return np.concatenate([-s / (2.0 * t), [np.sum(s * s) / (4.0 * t * t) - n / (2.0 * t)]])

    def hess_blocks(self, xi, aux=None, check=True):
        xi = self.check_domain(xi)
        n = self.n
        t = xi[n]
        s = xi[:n]
        diag = np.full(n, -0.5 / t)
        cross = s / (2.0 * t * t)
        corner = float(-np.sum(s * s) / (2.0 * t**3) + n / (2.0 * t * t))
        if check:
            self.check_positive_definite(diag, cross, corner)
        return diag, cross, corner

    def psi_star(self, xi, aux=None):
        xi = self.check_domain(xi)
        n = self.n
        t = xi[n]
        s = xi[:n]
        return float(-np.sum(s * s) / (4.0 * t) - 0.5 * n * math.log(-t) + 0.5 * n * math.log(math.pi))

    def xi_from_mu(self, mu, aux=None):
        mu = _as_vector(mu)
        n = self.n
        m1, m2 = mu[:n], mu[n]
        spread = m2 - np.sum(m1 * m1)
        if not spread > 1e-12 * abs(m2):
            raise DegenerateMoments(
                f"second moment does not exceed the squared means (spread {spread!r})"
            )
        t = -n / (2.0 * spread)
        return np.concatenate([-2.0 * t * m1, [t]])

    def oracle_L(self, xi):
        self.check_domain(xi)
        return np.zeros(0)


MODELS = {
    TruncatedNormalModel.name: TruncatedNormalModel,
    NormalModel.name: NormalModel,
}


def make_model(name, n):
    try:
        cls = MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None
    return cls(n)
