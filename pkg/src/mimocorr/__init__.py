"""Spatial MIMO channel correlation in non-separable scattering environments.

Builds modal and antenna-domain correlation matrices from bi-angular
power densities, compares them with the Kronecker approximation, and
estimates ergodic mutual information by Monte Carlo.
"""
__version__ = "0.1.0"

from .capacity import (CapacityCurve, RealizationEngine, average_mi, draw_channel,
                       draw_channels, mutual_information, psd_sqrt)
from .correlation import (ChannelCorrelation, ModalCorrelationMatrix, build_r, build_rs,
                          build_rs_kronecker, gamma_closed_form, gamma_quadrature, isotropic_rs)
from .errors import (DegenerateDistributionError, InvalidArgumentError, MimoCorrError,
                     NotPositiveSemidefiniteError, NumericalFailure, UnsupportedMethodError)
from .geometry import AntennaPosition, ArrayGeometry, mode_count, uniform_circular_array
from .psd import (BiAngularPsd, Family, GaussianPsd, LaplacianPsd, MixturePsd, PsdParams,
                  SeparablePsd, UniformLimitedPsd, kronecker_psd, make_psd)
from .smf import ConfigurationMatrix, Side, configuration_matrix, smf
