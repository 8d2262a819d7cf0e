"""Reflection-vector design for a target-mounted IRS that suppresses radar echoes
over an angular window."""

from .errors import DegenerateGeometryError, LmiInfeasibleError, SingularDualError
from .gain import TargetRcs, reflection_gain, sample_window, window_max_gain
from .geometry import AngularWindow, ArrayGeometry, RegionRect, SpatialFrequencyPair, Vec3, angular_window
from .optimizer import StealthInstance, primal_oracle, solve_stealth

__all__ = [
    "AngularWindow",
    "ArrayGeometry",
    "DegenerateGeometryError",
    "LmiInfeasibleError",
    "RegionRect",
    "SingularDualError",
    "SpatialFrequencyPair",
    "StealthInstance",
    "TargetRcs",
    "Vec3",
    "angular_window",
    "primal_oracle",
    "reflection_gain",
    "sample_window",
    "solve_stealth",
    "window_max_gain",
]
