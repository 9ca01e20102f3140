"""Channel models for diffusion-based molecular communication with multiple
fully-absorbing spherical receivers.

Computes, analytically and by particle-based Monte Carlo, the probability
that a molecule released by a point transmitter is absorbed by each receiver
by a given time, plus the derived security (malicious-receiver influence) and
cooperation (array-gain) figures of merit.
"""

from .errors import (
    ConfigError,
    ConvergenceError,
    GeometryError,
    InputError,
    InversionError,
    MetricUndefinedError,
    MultifarError,
    SingularSystemError,
    StepSizeWarning,
)
from .geometry import (
    GeometryReport,
    Receiver,
    SystemGeometry,
    angle_between,
    geometry_from_dict,
    geometry_to_dict,
    load_geometry,
    proxy_distance,
    radial_distance,
    subset,
    uca_geometry,
    validate,
)
from .laplace import (
    InversionConfig,
    LaplaceFn,
    final_value,
    invert,
    p_bar_laplace,
    stehfest_weights,
)
from .channel import (
    HittingCurve,
    SeriesConfig,
    SeriesResult,
    hit_n,
    hit_n_asymptotic,
    hit_single,
    hit_symmetric,
    hit_symmetric_asymptotic,
    hit_three,
    hit_two,
    hitting_curve,
    is_uca,
    n_far_transform,
    n_far_transforms,
    resolve_model,
    symmetric_series,
    three_far_transform,
)
from .metrics import (
    ArrayGainResult,
    InfluenceResult,
    array_gain,
    array_gain_asymptotic_symmetric,
    influence_vs_angle,
    malicious_influence,
    malicious_influence_asymptotic_symmetric,
    mirrored_pair_geometry,
)
from .simulator import (
    ErrorMap,
    GridFamily,
    SimConfig,
    SimEstimate,
    estimate_error_map,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "MultifarError",
    "GeometryError",
    "InputError",
    "ConfigError",
    "InversionError",
    "ConvergenceError",
    "SingularSystemError",
    "MetricUndefinedError",
    "StepSizeWarning",
    "Receiver",
    "SystemGeometry",
    "GeometryReport",
    "radial_distance",
    "angle_between",
    "proxy_distance",
    "uca_geometry",
    "validate",
    "subset",
    "geometry_from_dict",
    "geometry_to_dict",
    "load_geometry",
    "LaplaceFn",
    "InversionConfig",
    "p_bar_laplace",
    "invert",
    "final_value",
    "stehfest_weights",
    "SeriesConfig",
    "SeriesResult",
    "HittingCurve",
    "hit_single",
    "hit_two",
    "three_far_transform",
    "hit_three",
    "symmetric_series",
    "hit_symmetric",
    "hit_symmetric_asymptotic",
    "n_far_transforms",
    "n_far_transform",
    "hit_n",
    "hit_n_asymptotic",
    "is_uca",
    "resolve_model",
    "hitting_curve",
    "InfluenceResult",
    "ArrayGainResult",
    "malicious_influence",
    "malicious_influence_asymptotic_symmetric",
    "array_gain",
    "array_gain_asymptotic_symmetric",
    "mirrored_pair_geometry",
    "influence_vs_angle",
    "SimConfig",
    "SimEstimate",
    "simulate",
    "GridFamily",
    "ErrorMap",
    "estimate_error_map",
]
