"""Array-gain computation and electromagnetic MIMO channel normalization.

Submodules
----------
geometry   array topologies, element placement, excitation synthesis
specfun    Bessel/Beta/1F2 series utilities
farfield   far-field gains: quadrature, closed forms, physical apertures
nearfield  dyadic Green's functions, Poynting flux, near-field gains
channel    correlation/Kronecker channels and normalization policies
capacity   log-det capacity, Monte Carlo sweeps
cli        config-driven experiment runner (also the `hmimo` console tool)
"""

from . import capacity, channel, cli, farfield, geometry, nearfield, specfun
from .geometry import (AngularSpread, ArrayGeometry, Excitation,
                       build_geometry, focus_excitation, steer_excitation,
                       uniform_excitation)
from .farfield import (COS_PATTERN, ISOTROPIC, EfficiencyModel, ElementPattern,
                       GainResult, average_effective_area, average_gain,
                       average_realized_gain, effective_area,
                       embedded_efficiency, gain_closed, gain_physical,
                       gain_quadrature)
from .channel import (ChannelMatrix, NormalizationPolicy, correlation_matrix,
                      kronecker_channel, nearfield_polarimetric_channel,
                      normalize)
from .capacity import CapacityConfig, capacity_once, ergodic_capacity

__version__ = "0.1.0"

__all__ = [
    "AngularSpread", "ArrayGeometry", "CapacityConfig", "ChannelMatrix",
    "COS_PATTERN", "EfficiencyModel", "ElementPattern", "Excitation",
    "GainResult", "ISOTROPIC", "NormalizationPolicy", "average_effective_area",
    "average_gain", "average_realized_gain", "build_geometry", "capacity",
    "capacity_once", "channel", "cli", "correlation_matrix", "effective_area",
    "embedded_efficiency", "ergodic_capacity", "farfield", "focus_excitation",
    "gain_closed", "gain_physical", "gain_quadrature", "geometry",
    "kronecker_channel", "nearfield", "nearfield_polarimetric_channel",
    "normalize", "specfun", "steer_excitation", "uniform_excitation",
]
