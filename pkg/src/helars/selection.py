"""Covariate ranking by iterated holonomic m-projections.

Starting from the full MLE, each step projects the current estimate onto
``theta^i = 0`` for every active covariate ``i``, removes the covariate whose
projection is closest in divergence, moves the remaining coefficients so that
every projection sits at that same divergence, and finally restores the
intercept and the second-moment coefficient so that their dual coordinates
match the intercept-only MLE.  The order in which coefficients reach zero
ranks the covariates from least to most important.
"""

from dataclasses import dataclass, field

import numpy as np

from .coordinates import MixedPoint, NewtonOptions, mixed_to_full, theta_to_eta
from .errors import BracketingFailure, MonotonicityViolation, NumericalError
from .estimation import MleOptions, mle_full, mle_null
from .geometry import divergence, divergence_I, m_project
from .transport import DEFAULT_OPTIONS, TransportOptions, transport_mixed


@dataclass(frozen=True)
class SelectionConfig:
    """Settings for :func:`run_helars`.

    ``bisection_tol`` is relative to the target divergence; the bisection
    stops once ``|D - t*| <= bisection_tol * t*`` or after ``bisection_max``
    midpoints.
    """

    bisection_tol: float = 1e-3
    bisection_max: int = 40
    transport: TransportOptions = DEFAULT_OPTIONS
    newton: NewtonOptions = NewtonOptions()
    mle: MleOptions = field(default_factory=MleOptions)
    check_monotone: bool = True

    def __post_init__(self):
        if not self.bisection_tol > 0:
            raise ValueError("bisection_tol must be positive")
        if self.bisection_max < 1:
            raise ValueError("bisection_max must be >= 1")


@dataclass
class PathStep:
    k: int
    theta: np.ndarray
    aux: np.ndarray
    divergence_ratio: float
    removed: int = None
    t_star: float = None
    alphas: dict = None


@dataclass
class SelectionPath:
    steps: list
    removal_order: list
    mle: object = None
    null: object = None

    @property
    def thetas(self):
        return np.array([s.theta for s in self.steps])

    @property
    def ratios(self):
        return np.array([s.divergence_ratio for s in self.steps])

    def problems(self, zero_tol=0.0):
        """List violated path invariants (empty when the path is well formed)."""
        out = []
        d = len(self.steps) - 1
        r = self.ratios
        if r[0] != 1.0 or r[-1] != 0.0:
            out.append("ratios must run from 1 to 0")
        if np.any(np.diff(r) >= 0.0):
            out.append("ratios are not strictly decreasing")
        prev = set()
        for s in self.steps:
            zeros = {j for j in range(1, d + 1) if abs(s.theta[j]) <= zero_tol}
            if len(zeros) != s.k or not prev <= zeros:
                out.append(f"zero set at step {s.k} is {sorted(zeros)}")
            prev = zeros
        if sorted(self.removal_order) != list(range(1, d + 1)):
            out.append("removal order is not a permutation")
        return out


def _with_context(exc, k, i=None):
    where = f"step {k}" if i is None else f"step {k}, covariate {i}"
    new = type(exc)(f"{where}: {exc}")
    new.__cause__ = exc
    return new


def _check_monotone(records, theta_i, t_star, config):
    # divergence must grow as alpha moves away from the current value
    pts = sorted(records, key=lambda ad: abs(ad[0] - theta_i))
    slack = 0.1 * config.bisection_tol * t_star
    for (a0, d0), (a1, d1) in zip(pts[:-1], pts[1:]):
        if d1 < d0 - slack:
            raise MonotonicityViolation(
                f"divergence fell from {d0:.6g} at alpha={a0:.6g} to {d1:.6g} at alpha={a1:.6g}"
            )


def find_component_alpha(t_star, i, active, current, design, model, config=SelectionConfig(), t_zero=None):
    """Value of ``theta^i`` whose projection lies at divergence ``t_star``.

    Bisection over ``[0, theta^i]`` (``current`` is ``(theta, aux)``): at a
    midpoint with divergence below ``t_star`` the solution is further from
    ``theta^i`` and the bracket end at ``theta^i`` moves to the midpoint;
    otherwise the end at 0 does.

    ``t_zero`` is the divergence of the projection at ``alpha = 0`` if the
    caller already has it.

    Returns
    -------
    alpha : float
    records : list of (alpha, divergence)
        Every evaluated point, including both bracket ends.
    """
    theta, aux = current
    if t_zero is None:
        proj = m_project(design, model, theta, aux, i, 0.0, active, config.transport, config.newton)
        t_zero = divergence_I((theta, aux), proj, active, design, model)
    if t_zero < t_star * (1.0 - config.bisection_tol):
        raise BracketingFailure(
            f"divergence at alpha=0 ({t_zero:.6g}) is below the target {t_star:.6g}"
        )
    records = [(0.0, t_zero), (float(theta[i]), 0.0)]
    lo, hi = 0.0, float(theta[i])
    mid = 0.5 * (lo + hi)
    for _ in range(config.bisection_max):
        mid = 0.5 * (lo + hi)
        proj = m_project(design, model, theta, aux, i, mid, active, config.transport, config.newton)
        div = divergence_I((theta, aux), proj, active, design, model)
        records.append((mid, div))
        if abs(div - t_star) <= config.bisection_tol * t_star:
            break
        if div < t_star:
            hi = mid
        else:
            lo = mid
    if config.check_monotone:
        _check_monotone(records, float(theta[i]), t_star, config)
    return mid, records


def wrap_up(theta, aux, theta_next, eta_null, design, model, config=SelectionConfig()):
    """Fill in the intercept and second-moment coefficient of ``theta_next``.

    Covariate entries of ``theta_next`` are kept; the remaining entries are
    chosen so that their dual coordinates equal ``eta_null``.
    """
    extra = np.zeros(design.p, dtype=bool)
    extra[design.extra] = True
    eta = theta_to_eta(design, model, theta, aux)
    rho_old = MixedPoint.from_full(theta, eta, extra)
    rho_new = MixedPoint.from_full(theta_next, eta_null, extra)
    aux_new = transport_mixed(
        model, design, rho_old, aux, rho_new, config.transport, theta_start=theta, newton=config.newton
    )
    theta_new, _ = mixed_to_full(design, model, rho_new, aux_new, theta, config.newton)
    return theta_new, aux_new


def run_helars(dataset, design, model, config=SelectionConfig(), full=None, null=None):
    """Rank the covariates of ``dataset``.

    ``full`` and ``null`` are optional precomputed results of
    :func:`mle_full` and :func:`mle_null`.

    Returns
    -------
    SelectionPath
        ``d + 1`` steps from the full MLE (ratio 1) to the intercept-only MLE
        (ratio 0).
    """
    d = design.d
    if full is None:
        full = mle_full(dataset, design, model, config.mle)
    if null is None:
        null = mle_null(dataset, design, model, config.mle)
    theta, aux = full.theta_hat.copy(), full.aux.copy()
    null_point = (null.theta_hat, null.aux)
    eta_null = theta_to_eta(design, model, *null_point)
    max_div = divergence((theta, aux), null_point, design, model)

    steps = [PathStep(0, theta.copy(), aux.copy(), 1.0)]
    order = []
    active = list(range(1, d + 1))
    for k in range(1, d + 1):
        t = []
        for i in active:
            try:
                proj = m_project(design, model, theta, aux, i, 0.0, active, config.transport, config.newton)
                t.append(divergence_I((theta, aux), proj, active, design, model))
            except NumericalError as exc:
                raise _with_context(exc, k, i) from exc
        # first index wins on ties
        pos = int(np.argmin(t))
        t_star, i_star = t[pos], active[pos]

        theta_next = theta.copy()
        theta_next[i_star] = 0.0
        alphas = {i_star: 0.0}
        for i, t_i in zip(active, t):
            if i == i_star:
                continue
            try:
                alpha, _ = find_component_alpha(
                    t_star, i, active, (theta, aux), design, model, config, t_zero=t_i
                )
            except NumericalError as exc:
                raise _with_context(exc, k, i) from exc
            theta_next[i] = alpha
            alphas[i] = alpha

        active = [i for i in active if i != i_star]
        order.append(i_star)
        if k == d:
            # every covariate is zero: the intercept-only MLE itself
            theta, aux = null.theta_hat.copy(), null.aux.copy()
            ratio = 0.0
        else:
            try:
                theta, aux = wrap_up(theta, aux, theta_next, eta_null, design, model, config)
            except NumericalError as exc:
                raise _with_context(exc, k) from exc
            ratio = divergence_I((theta, aux), null_point, active, design, model) / max_div
        steps.append(PathStep(k, theta.copy(), aux.copy(), float(ratio), i_star, t_star, alphas))
    return SelectionPath(steps, order, full, null)


def covariate_order(path):
    """Covariates in the order their coefficients become zero along the path."""
    d = len(path.steps) - 1
    order = []
    seen = set()
    for s in path.steps[1:]:
        zeros = {j for j in range(1, d + 1) if s.theta[j] == 0.0} - seen
        if len(zeros) != 1:
            raise ValueError(f"step {s.k} zeroes {sorted(zeros)} new covariates, expected one")
        j = zeros.pop()
        order.append(j)
        seen.add(j)
    return order
