"""Exploratory mean-variance portfolio selection under jump-diffusion markets."""

from .errors import ConfigError, DataError, EMVJError, InvalidParameterError, TrainingDivergedError
from .params import (
    NO_JUMPS,
    REFERENCE_JUMPS,
    REFERENCE_MARKET,
    REFERENCE_THETA0,
    GaussianPolicy,
    JumpParams,
    MarketParams,
    PreferenceParams,
    Theta,
)
from .policy import aux_h, delta_merton, delta_squared_merton, equilibrium_policy, value_C
from .trainer import RunConfig, TrainTrace, train

__version__ = "0.1.0"
