"""Antenna array geometry.

All lengths are expressed in wavelengths, so the wave number times a
distance is simply ``2*pi*length``.
"""
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError

__all__ = ["AntennaPosition", "ArrayGeometry", "uniform_circular_array",
           "mode_count", "wrap_angle"]


def wrap_angle(angle):
    """Reduce angles (radians) modulo 2*pi into [-pi, pi)."""
    wrapped = np.mod(np.asarray(angle, dtype=float) + np.pi, 2 * np.pi) - np.pi
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class AntennaPosition:
    """Antenna location in polar coordinates relative to its aperture centre.

    Parameters
    ----------
    radius : float
        Distance from the origin, in wavelengths.
    azimuth : float
        Polar angle in radians. Stored reduced into [-pi, pi).
    """

    radius: float
    azimuth: float = 0.0

    def __post_init__(self):
        radius = float(self.radius)
        if not math.isfinite(radius) or radius < 0:
            raise InvalidArgumentError(f"radius must be finite and >= 0, got {self.radius}")
        if not math.isfinite(float(self.azimuth)):
            raise InvalidArgumentError("azimuth must be finite")
        object.__setattr__(self, "radius", radius)
        object.__setattr__(self, "azimuth", wrap_angle(self.azimuth))

    @classmethod
    def from_cartesian(cls, x, y):
        return cls(math.hypot(x, y), math.atan2(y, x))


@dataclass(frozen=True)
class ArrayGeometry:
    """An ordered set of antennas enclosed by a circle of radius `aperture_radius`.

    When `aperture_radius` is omitted the smallest enclosing radius
    (the largest element radius) is used.
    """

    positions: tuple
    aperture_radius: float = None

    def __post_init__(self):
        positions = tuple(p if isinstance(p, AntennaPosition) else AntennaPosition(*p)
                          for p in self.positions)
        if not positions:
            raise InvalidArgumentError("an array needs at least one antenna")
        max_radius = max(p.radius for p in positions)
        aperture = max_radius if self.aperture_radius is None else float(self.aperture_radius)
        # small slack so rounding in constructors does not trip containment
        if not aperture >= max_radius - 1e-12:
            raise InvalidArgumentError(
                f"aperture_radius {aperture} does not contain an antenna at radius {max_radius}")
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "aperture_radius", max(aperture, max_radius))

    def __len__(self):
        return len(self.positions)

    @property
    def n_antennas(self) -> int:
        return len(self.positions)

    @property
    def radii(self) -> np.ndarray:
        return np.array([p.radius for p in self.positions])

    @property
    def azimuths(self) -> np.ndarray:
        return np.array([p.azimuth for p in self.positions])

    @property
    def mode_half_width(self) -> int:
        """Mode half-width M for this aperture (see :func:`mode_count`)."""
        return mode_count(self.aperture_radius)

    def cartesian(self) -> np.ndarray:
        """Return an (n, 2) array of x, y coordinates in wavelengths."""
        return np.column_stack([self.radii * np.cos(self.azimuths),
                                self.radii * np.sin(self.azimuths)])


def uniform_circular_array(n: int, ring_radius: float) -> ArrayGeometry:
    """Build an n-element uniform circular array.

    Element j sits at azimuth ``2*pi*j/n``; the first element is at
    azimuth zero. The aperture radius equals the ring radius.
    """
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"n must be a positive integer, got {n}")
    if ring_radius < 0:
        raise InvalidArgumentError(f"ring_radius must be >= 0, got {ring_radius}")
    n = int(n)
    positions = [AntennaPosition(ring_radius, 2 * math.pi * j / n) for j in range(n)]
    return ArrayGeometry(tuple(positions), ring_radius)


def mode_count(aperture_radius: float) -> int:
    """Half-width M of the effective mode set of an aperture.

    ``M = ceil(pi * e * r)`` with `r` in wavelengths, so an aperture of
    radius 0.5 supports 2M+1 = 11 modes. Returns the half-width; the
    number of modes is ``2*M + 1``.
    """
    if not aperture_radius >= 0:
        raise InvalidArgumentError(f"aperture radius must be >= 0, got {aperture_radius}")
    return int(math.ceil(math.pi * math.e * aperture_radius))


def array_from_positions(positions: Sequence, aperture_radius=None) -> ArrayGeometry:
    """Build an array from ``(radius, azimuth)`` pairs (radians)."""
    return ArrayGeometry(tuple(AntennaPosition(r, a) for r, a in positions), aperture_radius)
