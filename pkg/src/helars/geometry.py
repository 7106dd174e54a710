"""m-projections and restricted divergences on the GLM submanifold.

An index set ``I`` lists the active covariates (a subset of ``1..d``).  The
submanifold ``M_I`` has ``theta^j = 0`` for every covariate ``j`` outside
``I``; ``M(i, alpha, I)`` further pins ``theta^i = alpha``.
"""

import numpy as np

from .coordinates import MixedPoint, NewtonOptions, mixed_to_full, theta_to_eta
from .errors import MaskViolation
from .transport import DEFAULT_OPTIONS, transport_mixed

MASK_TOL = 1e-10


def active_mask(design, active):
    """Boolean mask over theta that is true on ``{0, d+1..}`` and on ``active``."""
    mask = np.zeros(design.p, dtype=bool)
    mask[design.extra] = True
    for j in active:
        if not 1 <= j <= design.d:
            raise ValueError(f"active index {j} is not a covariate index")
        mask[j] = True
    return mask


def check_mask(design, theta, active):
    live = active_mask(design, active)
    bad = np.flatnonzero(~live & (np.abs(theta) > MASK_TOL))
    if bad.size:
        raise MaskViolation(f"theta has non-zero entries {bad.tolist()} outside the active set")


def m_project(
    design,
    model,
    theta,
    aux,
    i,
    alpha,
    active,
    opts=DEFAULT_OPTIONS,
    newton=NewtonOptions(),
):
    """m-projection of ``(theta, aux)`` onto ``M(i, alpha, active)``.

    The target is the mixed point that keeps ``eta`` on ``{0, d+1..}`` and on
    ``active`` minus ``i``, and fixes ``theta`` on ``i`` (at ``alpha``) and on
    the inactive covariates (at 0).  ``L`` is transported in these mixed
    coordinates as ``theta^i`` moves from its current value to ``alpha``.

    Returns
    -------
    theta, aux : ndarray
        The projection and its auxiliary vector.
    """
    if i not in active:
        raise ValueError(f"covariate {i} is not in the active set")
    theta = np.asarray(theta, dtype=float)
    eta = theta_to_eta(design, model, theta, aux)
    eta_mask = active_mask(design, active)
    eta_mask[i] = False

    rho_old = MixedPoint.from_full(theta, eta, eta_mask)
    rho_old.values[~eta_mask] = np.where(np.arange(design.p)[~eta_mask] == i, theta[i], 0.0)
    rho_new = rho_old.with_value(i, alpha)

    aux_new = transport_mixed(model, design, rho_old, aux, rho_new, opts, theta_start=theta, newton=newton)
    theta_new, _ = mixed_to_full(design, model, rho_new, aux_new, theta, newton)
    return theta_new, aux_new


def divergence_I(p, q, active, design, model):
    """Divergence ``D^[I](p, q)`` between two points of ``M_I``.

    ``p`` and ``q`` are ``(theta, aux)`` pairs.  With both points in ``M_I``
    the restricted potentials coincide with the full ones, so this is
    ``psi(q) - psi(p) - eta(p) . (theta_q - theta_p)``, the Kullback-Leibler
    divergence from ``p`` to ``q``.
    """
    theta_p, aux_p = p
    theta_q, aux_q = q
    theta_p = np.asarray(theta_p, dtype=float)
    theta_q = np.asarray(theta_q, dtype=float)
    check_mask(design, theta_p, active)
    check_mask(design, theta_q, active)
    live = active_mask(design, active)
    xi_p = design.xi(np.where(live, theta_p, 0.0))
    xi_q = design.xi(np.where(live, theta_q, 0.0))
    eta_p = design.eta_from_mu(model.mu_from_xi(xi_p, aux_p))
    psi_p = model.psi_star(xi_p, aux_p)
    psi_q = model.psi_star(xi_q, aux_q)
    return float(psi_q - psi_p - eta_p[live] @ (theta_q - theta_p)[live])


def divergence(p, q, design, model):
    """Full-index divergence (``I = {1..d}``)."""
    return divergence_I(p, q, range(1, design.d + 1), design, model)
