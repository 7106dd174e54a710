"""Covariate ranking for GLMs with holonomic transport of log-normalizers."""

from .coordinates import (
    DesignBlock,
    MixedPoint,
    NewtonOptions,
    dtheta_drho,
    fisher_theta,
    mixed_to_full,
    newton_halve_step,
    theta_to_eta,
    theta_to_xi,
)
from .datasets import ingest, simulate, standardize, theta_to_raw
from .errors import HelarsError, InputError, NumericalError
from .estimation import Dataset, MleOptions, MleResult, loglike, mle_full, mle_null
from .geometry import divergence, divergence_I, m_project
from .models import NormalModel, TruncatedNormalModel, make_model
from .selection import SelectionConfig, SelectionPath, covariate_order, find_component_alpha, run_helars
from .transport import TransportOptions, integrate_segment, transport_mixed, transport_theta

__all__ = [
    "Dataset",
    "DesignBlock",
    "HelarsError",
    "InputError",
    "MixedPoint",
    "MleOptions",
    "MleResult",
    "NewtonOptions",
    "NormalModel",
    "NumericalError",
    "SelectionConfig",
    "SelectionPath",
    "TransportOptions",
    "TruncatedNormalModel",
    "covariate_order",
    "divergence",
    "divergence_I",
    "dtheta_drho",
    "find_component_alpha",
    "fisher_theta",
    "ingest",
    "integrate_segment",
    "loglike",
    "m_project",
    "make_model",
    "mixed_to_full",
    "mle_full",
    "mle_null",
    "newton_halve_step",
    "run_helars",
    "simulate",
    "standardize",
    "theta_to_eta",
    "theta_to_raw",
    "theta_to_xi",
    "transport_mixed",
    "transport_theta",
]
