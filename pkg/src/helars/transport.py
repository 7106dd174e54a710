"""Holonomic transport of the auxiliary vector.

Given ``L`` at one point and a derivative field ``dL/drho = H(rho, L)``,
``L`` at another point is obtained by integrating along the straight segment
between them with an embedded Dormand-Prince 5(4) pair.
"""

from dataclasses import dataclass

import numpy as np

from .coordinates import (
    MixedPoint,
    NewtonOptions,
    dtheta_drho,
    mixed_to_full,
)
from .errors import NonFiniteDerivative, NumericalError, StepLimitExceeded

# Dormand & Prince (1980), 7 stages, FSAL
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 5.0
# PI controller exponents (Hairer, Norsett & Wanner, II.4)
_BETA = 0.04
_ALPHA = 0.2 - 0.75 * _BETA


@dataclass(frozen=True)
class TransportOptions:
    """Integrator settings.

    ``checkpoints`` splits the unit parameter interval into that many equal
    pieces, each integrated adaptively.  ``oracle=True`` replaces numerical
    transport with the model's closed-form ``L`` (validation only).
    """

    rel_tol: float = 1e-11
    abs_tol: float = 1e-13
    checkpoints: int = 2
    max_steps: int = 10_000
    oracle: bool = False

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.checkpoints < 1 or self.max_steps < 1:
            raise ValueError("checkpoints and max_steps must be >= 1")


DEFAULT_OPTIONS = TransportOptions()


def _rms(x):
    return float(np.sqrt(np.mean(x * x)))


class _Integrator:
    def __init__(self, rhs, rtol, atol, max_steps):
        self.rhs = rhs
        self.rtol = rtol
        self.atol = atol
        self.max_steps = max_steps
        self.steps = 0
        self.h = None

    def _scale(self, y, y_new=None):
        mag = np.abs(y) if y_new is None else np.maximum(np.abs(y), np.abs(y_new))
        return self.atol + self.rtol * mag

    def _initial_step(self, t0, y0, f0, span):
        sc = self._scale(y0)
        d0, d1 = _rms(y0 / sc), _rms(f0 / sc)
        h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
        h0 = min(h0, span)
        try:
            f1 = self.rhs(t0 + h0, y0 + h0 * f0)
        except NumericalError:
            return h0
        if not np.all(np.isfinite(f1)):
            return h0
        d2 = _rms((f1 - f0) / sc) / h0
        big = max(d1, d2)
        h1 = max(1e-6, h0 * 1e-3) if big <= 1e-15 else (0.01 / big) ** 0.2
        return min(100.0 * h0, h1, span)

    def run(self, t0, t1, y0):
        y = np.array(y0, dtype=float)
        f = self.rhs(t0, y)
        if not np.all(np.isfinite(f)):
            raise NonFiniteDerivative(f"derivative field is not finite at t={t0}")
        span = t1 - t0
        h = self.h if self.h is not None else self._initial_step(t0, y, f, span)
        h_min = 1e-14 * max(1.0, abs(t1))
        t = t0
        err_prev = 1e-4
        last_error = None
        while t < t1:
            if self.steps >= self.max_steps:
                raise StepLimitExceeded(f"more than {self.max_steps} integration steps")
            self.steps += 1
            final = t + h >= t1 - 1e-15 * max(1.0, abs(t1))
            if final:
                h = t1 - t
            K = np.empty((7, y.size))
            K[0] = f
            ok = True
            try:
                for s in range(1, 7):
                    ys = y + h * (_A[s] @ K[:s])
                    k = self.rhs(t + _C[s] * h, ys)
                    if not np.isfinite(k).all():
                        ok = False
                        break
                    K[s] = k
            except NumericalError as exc:
                ok = False
                last_error = exc
            if ok:
                # stage 7 is evaluated at the 5th-order solution (FSAL)
                y_new = ys
                err = _rms(h * (_E @ K) / self._scale(y, y_new))
            else:
                err = np.inf
            if err <= 1.0:
                t = t1 if final else t + h
                y = y_new
                f = K[6]
                fac = _SAFETY * max(err, 1e-10) ** (-_ALPHA) * err_prev**_BETA
                h_next = h * min(_FAC_MAX, max(_FAC_MIN, fac))
                err_prev = max(err, 1e-4)
                if not final:
                    h = h_next
                self.h = h_next
            else:
                fac = _FAC_MIN if not np.isfinite(err) else max(_FAC_MIN, _SAFETY * err ** (-_ALPHA))
                h *= min(1.0, fac)
                if h < h_min:
                    if last_error is not None:
                        raise last_error
                    raise NonFiniteDerivative("step size underflow; the path likely leaves the domain")
        return y


def integrate_segment(field, start, aux_start, end, opts=DEFAULT_OPTIONS):
    """Integrate ``L`` from ``start`` to ``end`` along the straight segment.

    Parameters
    ----------
    field : callable
        ``field(coords, aux)`` returning ``dL/dcoords`` with shape
        ``(len(aux), len(coords))``.
    start, end : array_like
        Segment endpoints (same length).
    aux_start : array_like
        ``L`` at ``start``.
    opts : TransportOptions

    Returns
    -------
    ndarray
        ``L`` at ``end``.
    """
    start = np.asarray(start, dtype=float).reshape(-1)
    end = np.asarray(end, dtype=float).reshape(-1)
    aux = np.array(aux_start, dtype=float).reshape(-1)
    if start.shape != end.shape:
        raise ValueError("start and end must have the same length")
    if not np.all(np.isfinite(aux)):
        raise NonFiniteDerivative("initial auxiliary vector is not finite")
    if aux.size == 0 or np.array_equal(start, end):
        return aux
    direction = end - start

    def rhs(t, y):
        return field(start + t * direction, y) @ direction

    integ = _Integrator(rhs, opts.rel_tol, opts.abs_tol, opts.max_steps)
    knots = np.linspace(0.0, 1.0, opts.checkpoints + 1)
    for t0, t1 in zip(knots[:-1], knots[1:]):
        aux = integ.run(t0, t1, aux)
    return aux


def theta_field(design, model):
    """Derivative field ``dL/dtheta`` of the auxiliary vector."""

    def field(theta, aux):
        own, shared = model.aux_gradient(design.xi(theta), aux)
        return design.aux_jacobian(own, shared)

    return field


def transport_theta(model, design, theta_old, aux_old, theta_new, opts=DEFAULT_OPTIONS):
    """``L`` at ``theta_new`` by transport from ``(theta_old, aux_old)``."""
    model.check_domain(design.xi(theta_old))
    model.check_domain(design.xi(theta_new))
    if model.n_aux == 0:
        return np.zeros(0)
    if opts.oracle:
        return model.oracle_L(design.xi(theta_new))
    return integrate_segment(theta_field(design, model), theta_old, aux_old, theta_new, opts)


def transport_mixed(
    model,
    design,
    rho_old,
    aux_old,
    rho_new,
    opts=DEFAULT_OPTIONS,
    theta_start=None,
    newton=NewtonOptions(),
):
    """``L`` at the mixed point ``rho_new`` by transport from ``rho_old``.

    The field is ``(dL/dtheta)(dtheta*/drho)``; every evaluation recovers
    theta from ``(rho, L)`` with :func:`mixed_to_full`, seeded by the theta
    recovered at the previous evaluation.  ``theta_start`` (theta at
    ``rho_old``) seeds the first one; when omitted it is recovered from the
    model's anchor point.
    """
    if not np.array_equal(rho_old.eta_mask, rho_new.eta_mask):
        raise ValueError("mixed points must share the same eta mask")
    J = rho_old.eta_mask
    if model.n_aux == 0:
        return np.zeros(0)
    if theta_start is None:
        guess = model.init_theta(design.d)
        theta_start, _ = mixed_to_full(design, model, rho_old, aux_old, guess, newton)
    if opts.oracle:
        theta_new, _ = mixed_to_full(
            design,
            model,
            rho_new,
            lambda th: model.oracle_L(design.xi(th)),
            theta_start,
            newton,
        )
        return model.oracle_L(design.xi(theta_new))
    if not J.any():
        return transport_theta(model, design, rho_old.values, aux_old, rho_new.values, opts)

    seed = [np.array(theta_start, dtype=float)]
    dL_dtheta = theta_field(design, model)

    def field(rho, aux):
        theta, _ = mixed_to_full(design, model, MixedPoint(rho, J), aux, seed[0], newton)
        seed[0] = theta
        return dL_dtheta(theta, aux) @ dtheta_drho(design, model, theta, aux, J)

    return integrate_segment(field, rho_old.values, aux_old, rho_new.values, opts)
