"""Maximum likelihood for the full and the intercept-only model.

Damped Newton-Raphson in theta, started from the least-squares fit of the
untruncated normal model.  The auxiliary vector is carried from the anchor
point to the start and along every trial step with :func:`transport_theta`,
so ``L`` is never evaluated from a closed form.
"""

from dataclasses import dataclass, field

import numpy as np

from .coordinates import fisher_theta, newton_halve_step
from .errors import NoConvergence, NumericalError, SingularHessian
from .transport import DEFAULT_OPTIONS, TransportOptions, transport_theta


@dataclass
class Scaling:
    """Affine maps applied to the raw data; ``x_std = (x - center) / scale``."""

    x_center: np.ndarray
    x_scale: np.ndarray
    y_center: float = 0.0
    y_scale: float = 1.0


@dataclass
class Dataset:
    """Response ``y`` (length n) and covariates ``X`` (n x d).

    ``suff_stat`` is ``Y = (y_1, ..., y_n, sum(y**2))``.
    """

    y: np.ndarray
    X: np.ndarray
    names: list = None
    response_name: str = "y"
    scaling: Scaling = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float).reshape(-1)
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        self.X = X
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X and y have different numbers of rows")
        if self.names is None:
            self.names = [f"x{j + 1}" for j in range(self.d)]
        if len(self.names) != self.d:
            raise ValueError("one name per covariate column is required")

    @property
    def n(self):
        return self.y.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    @property
    def suff_stat(self):
        return np.concatenate([self.y, [self.y @ self.y]])


@dataclass(frozen=True)
class MleOptions:
    """Newton-Raphson settings.

    Steps are scaled by ``damping`` until the Newton step is shorter than
    ``full_step_radius`` (Euclidean norm in theta), after which full steps
    are taken.  Short steps keep the iterates away from regions where
    transporting ``L`` loses accuracy.

    ``start`` is ``"least_squares"`` (Newton starts from the untruncated
    normal fit, with ``L`` transported there from the anchor) or
    ``"anchor"`` (Newton starts at the anchor itself).
    """

    tol: float = 1e-12
    max_iter: int = 1000
    max_halvings: int = 20
    fallback_step: float = 0.1
    damping: float = 0.1
    full_step_radius: float = 0.05
    start: str = "least_squares"
    transport: TransportOptions = field(default_factory=lambda: DEFAULT_OPTIONS)


    def __post_init__(self):
        if self.start not in ("least_squares", "anchor"):
            raise ValueError(f"unknown start {self.start!r}")


@dataclass
class MleResult:
    theta_hat: np.ndarray
    aux: np.ndarray
    loglike: float
    grad_norm: float
    iterations: int


def loglike(dataset, design, model, theta, aux):
    """``Y . X_B theta - psi*(X_B theta)``."""
    xi = model.check_domain(design.xi(theta))
    return float(dataset.suff_stat @ xi - model.psi_star(xi, aux))


def score(dataset, design, model, theta, aux):
    """Gradient of the log-likelihood, ``X_B^T (Y - mu)``."""
    mu = model.mu_from_xi(design.xi(theta), aux)
    return design.eta_from_mu(dataset.suff_stat - mu)


def _least_squares_theta(dataset, design, free):
    # normal-model MLE on the free coordinates: theta = (beta / s2, -1 / (2 s2))
    A = design.X_B[: dataset.n, : design.p - 1][:, free[:-1]]
    beta, *_ = np.linalg.lstsq(A, dataset.y, rcond=None)
    s2 = float(np.mean((dataset.y - A @ beta) ** 2))
    theta = np.zeros(design.p)
    if not (np.isfinite(s2) and s2 > 0.0):
        return None
    theta[np.flatnonzero(free[:-1])] = beta / s2
    theta[-1] = -0.5 / s2
    return theta


def _start_point(dataset, design, model, free, opts):
    theta, aux = model.init_point(design.d)
    ll = loglike(dataset, design, model, theta, aux)
    if opts.start == "anchor":
        return theta, aux, ll
    guess = _least_squares_theta(dataset, design, free)
    if guess is None:
        return theta, aux, ll
    try:
        guess_aux = transport_theta(model, design, theta, aux, guess, opts.transport)
        guess_ll = loglike(dataset, design, model, guess, guess_aux)
    except NumericalError:
        return theta, aux, ll
    if guess_ll < ll:
        return theta, aux, ll
    return guess, guess_aux, guess_ll


def _newton(dataset, design, model, free, opts):
    theta, aux, ll = _start_point(dataset, design, model, free, opts)
    last = design.p - 1
    for it in range(opts.max_iter + 1):
        g = score(dataset, design, model, theta, aux)[free]
        gg = float(g @ g)
        if gg <= opts.tol:
            theta, aux, ll, gg = _polish(dataset, design, model, free, opts, theta, aux, ll, g, gg)
            return MleResult(theta, aux, ll, float(np.sqrt(gg)), it)
        if it == opts.max_iter:
            break
        G = fisher_theta(design, model, theta, aux)[np.ix_(free, free)]
        try:
            step = np.linalg.solve(G, g)
            if not (np.all(np.isfinite(step)) and step @ g > 0.0):
                raise np.linalg.LinAlgError("not an ascent direction")
        except np.linalg.LinAlgError:
            # gradient ascent fallback
            step = opts.fallback_step * g / np.sqrt(gg)
        delta = np.zeros(design.p)
        delta[free] = step
        delta *= newton_halve_step(theta[last], delta[last])

        s = 1.0 if np.linalg.norm(delta) <= opts.full_step_radius else opts.damping
        for _ in range(opts.max_halvings + 1):
            trial = theta + s * delta
            try:
                trial_aux = transport_theta(model, design, theta, aux, trial, opts.transport)
                trial_ll = loglike(dataset, design, model, trial, trial_aux)
            except NumericalError:
                trial_ll = -np.inf
            if trial_ll >= ll - 1e-12 * (1.0 + abs(ll)):
                break
            s *= 0.5
        else:
            raise NoConvergence(f"log-likelihood did not increase after {opts.max_halvings} halvings")
        theta, aux, ll = trial, trial_aux, trial_ll
    raise NoConvergence(
        f"Newton-Raphson did not converge in {opts.max_iter} iterations (|grad|^2={gg:.3e})"
    )


def _polish(dataset, design, model, free, opts, theta, aux, ll, g, gg):
    # one extra full Newton step; kept only if it improves both ll and the gradient
    try:
        G = fisher_theta(design, model, theta, aux)[np.ix_(free, free)]
        trial = theta.copy()
        trial[free] += np.linalg.solve(G, g)
        trial_aux = transport_theta(model, design, theta, aux, trial, opts.transport)
        trial_ll = loglike(dataset, design, model, trial, trial_aux)
        tg = score(dataset, design, model, trial, trial_aux)[free]
    except (NumericalError, np.linalg.LinAlgError):
        return theta, aux, ll, gg
    if trial_ll >= ll and tg @ tg <= gg:
        return trial, trial_aux, trial_ll, float(tg @ tg)
    return theta, aux, ll, gg


def _check_fit(design, model, theta, aux):
    try:
        fisher_theta(design, model, theta, aux)
    except NumericalError as exc:
        raise SingularHessian(f"information matrix at the estimate is degenerate: {exc}") from None


def mle_full(dataset, design, model, opts=MleOptions()):
    """MLE of the model with every covariate, starting from the anchor point."""
    res = _newton(dataset, design, model, np.ones(design.p, dtype=bool), opts)
    _check_fit(design, model, res.theta_hat, res.aux)
    return res


def mle_null(dataset, design, model, opts=MleOptions()):
    """MLE with every covariate coefficient pinned at zero."""
    free = np.zeros(design.p, dtype=bool)
    free[design.extra] = True
    res = _newton(dataset, design, model, free, opts)
    _check_fit(design, model, res.theta_hat, res.aux)
    return res
