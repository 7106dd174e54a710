"""Independent oracles for testing.

Nothing here imports the transport, geometry or estimation code: the
normalizer is computed by direct quadrature and derivatives by central
differences.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainViolation, ToleranceNotMet


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-13
    rel_tol: float = 1e-12
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")


DEFAULT_SPEC = QuadratureSpec()


def _peak(xi1, xi2):
    # maximizer of xi1*y + xi2*y**2 on [0, inf)
    return max(0.0, -xi1 / (2.0 * xi2))


def _quad_unit(fn, spec):
    # integrate fn(y) over [0, inf) through y = t / (1 - t)
    def g(t):
        if t >= 1.0:
            return 0.0
        y = t / (1.0 - t)
        return fn(y) / (1.0 - t) ** 2

    val, err = integrate.quad(
        g, 0.0, 1.0, epsabs=spec.abs_tol, epsrel=spec.rel_tol, limit=spec.max_subdivisions
    )
    if not math.isfinite(val) or err > max(spec.abs_tol, spec.rel_tol * abs(val)) * 1e3:
        raise ToleranceNotMet(f"quadrature error estimate {err:.3e} for value {val:.6e}")
    return val, err


def _log_A_parts(xi1, xi2, spec):
    if not xi2 < 0.0:
        raise DomainViolation(f"second coefficient must be negative, got {xi2!r}")
    y0 = _peak(xi1, xi2)
    top = xi1 * y0 + xi2 * y0 * y0
    # factor out the peak so the integrand is at most 1
    val, err = _quad_unit(lambda y: math.exp(xi1 * y + xi2 * y * y - top), spec)
    return top, val, err


def quad_log_A(xi1, xi2, spec=DEFAULT_SPEC):
    """``log int_0^inf exp(xi1*y + xi2*y**2) dy`` by adaptive quadrature."""
    top, val, _ = _log_A_parts(xi1, xi2, spec)
    return top + math.log(val)


def quad_A(xi1, xi2, spec=DEFAULT_SPEC):
    """``int_0^inf exp(xi1*y + xi2*y**2) dy`` by adaptive quadrature."""
    top, val, _ = _log_A_parts(xi1, xi2, spec)
    return math.exp(top) * val


def quad_moments(xi1, xi2, spec=DEFAULT_SPEC):
    """``(E[y], E[y**2])`` under the density proportional to ``exp(xi1*y + xi2*y**2)`` on ``y > 0``."""
    top, z, _ = _log_A_parts(xi1, xi2, spec)
    out = []
    for k in (1, 2):
        v, _ = _quad_unit(lambda y, k=k: y**k * math.exp(xi1 * y + xi2 * y * y - top), spec)
        out.append(v / z)
    return tuple(out)


def fd_grad(f, x, h=None):
    """Central-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        hi = 1e-6 * max(1.0, abs(x[i])) if h is None else h
        e = np.zeros_like(x)
        e[i] = hi
        g[i] = (f(x + e) - f(x - e)) / (2.0 * hi)
    return g


def fd_jacobian(f, x, h=None):
    """Central-difference Jacobian of a vector function, rows = outputs."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        hi = 1e-6 * max(1.0, abs(x[i])) if h is None else h
        e = np.zeros_like(x)
        e[i] = hi
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2.0 * hi))
    return np.column_stack(cols)


def brute_divergence(p_xi, q_xi, spec=DEFAULT_SPEC):
    """Kullback-Leibler divergence ``KL(p || q)`` for truncated-normal laws.

    ``p_xi`` and ``q_xi`` are natural parameters ``(xi^1..xi^n, xi^{n+1})``.
    Each observation contributes ``int p_a log(p_a / q_a)``, integrated
    numerically with both normalizers also obtained by quadrature.
    """
    p_xi = np.asarray(p_xi, dtype=float)
    q_xi = np.asarray(q_xi, dtype=float)
    n = p_xi.size - 1
    tp, tq = p_xi[n], q_xi[n]
    total = 0.0
    for a in range(n):
        sp, sq = p_xi[a], q_xi[a]
        lp = quad_log_A(sp, tp, spec)
        lq = quad_log_A(sq, tq, spec)

        def integrand(y):
            log_p = sp * y + tp * y * y - lp
            log_q = sq * y + tq * y * y - lq
            return math.exp(log_p) * (log_p - log_q)

        v, _ = _quad_unit(integrand, spec)
        total += v
    return total
