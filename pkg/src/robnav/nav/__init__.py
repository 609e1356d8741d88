"""Navigation models: strapdown main filter, GNSS-only fallback filter, GNSS observables."""

from robnav.nav.fallback_filter import FallbackFilterModel, uniform_propagate
from robnav.nav.frames import LocalFrame
from robnav.nav.gnss import GnssObservation, predict_deltarange, predict_pseudorange, sigma_epsilon
from robnav.nav.main_filter import (
    ImuSample,
    MainFilterModel,
    MainState,
    bias_propagate,
    lever_arm_transform,
    main_jacobians,
    strapdown_propagate,
)
from robnav.nav.params import InitialSigma, NoiseParams

__all__ = [
    "FallbackFilterModel",
    "GnssObservation",
    "ImuSample",
    "InitialSigma",
    "LocalFrame",
    "MainFilterModel",
    "MainState",
    "NoiseParams",
    "bias_propagate",
    "lever_arm_transform",
    "main_jacobians",
    "predict_deltarange",
    "predict_pseudorange",
    "sigma_epsilon",
    "strapdown_propagate",
    "uniform_propagate",
]
