"""Contour-dynamics laboratory for corner-like gSQG patches."""

from .analytic import (
    Annulus,
    FRecord,
    GsqgParams,
    annulus,
    beta_star,
    cos_power_integral,
    eval_F,
    predicted_d2s_v2,
    predicted_ds_v,
    scaled_F_derivative,
)
from . import errors

__version__ = "0.1.0"
