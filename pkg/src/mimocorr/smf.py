"""Spatial-to-mode functions and configuration matrices for 2-D apertures."""
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import jv

from .errors import InvalidArgumentError
from .geometry import AntennaPosition, ArrayGeometry

__all__ = ["Side", "ConfigurationMatrix", "smf", "configuration_matrix"]


class Side(str, Enum):
    TRANSMITTER = "transmitter"
    RECEIVER = "receiver"


def _smf(orders, radii, azimuths):
    orders = np.asarray(orders)
    return jv(orders, 2 * np.pi * np.asarray(radii)) * np.exp(
        1j * orders * (np.asarray(azimuths) - np.pi / 2))


def smf(order: int, position: AntennaPosition) -> complex:
    """Coupling of an antenna at `position` with circular mode `order`.

    Evaluates ``J_n(2*pi*radius) * exp(1j*n*(azimuth - pi/2))``.
    """
    return complex(_smf(int(order), position.radius, position.azimuth))


@dataclass(frozen=True)
class ConfigurationMatrix:
    """Antennas-by-modes matrix of SMF values.

    Column ``j`` holds mode order ``j - M``.
    """

    entries: np.ndarray
    M: int
    side: Side

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.M, self.M + 1)

    @property
    def n_antennas(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def configuration_matrix(geometry: ArrayGeometry, M: int = None,
                         side: Side = Side.TRANSMITTER) -> ConfigurationMatrix:
    """Assemble the configuration matrix of an array.

    Parameters
    ----------
    geometry : ArrayGeometry
    M : int, optional
        Mode half-width. Defaults to the aperture's own mode count.
    side : Side
        Only recorded; the matrix itself is the same for both ends.
    """
    if M is None:
        M = geometry.mode_half_width
    if int(M) != M or M < 0:
        raise InvalidArgumentError(f"M must be a non-negative integer, got {M}")
    M = int(M)
    orders = np.arange(-M, M + 1)[np.newaxis, :]
    entries = _smf(orders, geometry.radii[:, np.newaxis], geometry.azimuths[:, np.newaxis])
    entries.setflags(write=False)
    return ConfigurationMatrix(entries, M, Side(side))
