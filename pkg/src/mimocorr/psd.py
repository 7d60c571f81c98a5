"""Bi-angular power spectral densities over departure and arrival azimuth.

Every density lives on the torus [-pi, pi)^2 and integrates to one. The
families are parameterized around a mean (departure, arrival) pair, and
all quadrature is done in coordinates centred on that mean: the Fourier
coefficients at integer orders are unchanged by the periodic shift, so a
cluster straddling the +-pi seam needs no special treatment.

Sign conventions: transmit-side coefficients use ``exp(+1j*m*phi)`` and
receive-side coefficients use ``exp(-1j*l*varphi)``, so that

    gamma(dm, dl) = iint G(phi, varphi) exp(1j*dm*phi) exp(-1j*dl*varphi)
"""
import abc
import csv
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import k0, ndtr

from .errors import (DegenerateDistributionError, InvalidArgumentError,
                     NumericalFailure)
from .geometry import wrap_angle
from .quadrature import converge, graded_breakpoints, panel_rule

__all__ = ["Family", "PsdParams", "BiAngularPsd", "UniformLimitedPsd", "GaussianPsd",
           "LaplacianPsd", "MixturePsd", "SeparablePsd", "make_psd", "kronecker_psd",
           "density_grid", "count_local_maxima", "write_grid_csv"]

# Radial cut-off in whitened units; both profiles are below 1e-21 there.
_RADIAL_CUTOFF = 50.0
_RADIAL_BREAKPOINTS = np.array([0.0, 1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 0.03, 0.1, 0.2, 0.35,
                                0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0,
                                6.0, 7.0, 8.0, 10.0, 12.0, 14.0, 17.0, 20.0, 24.0, 28.0,
                                33.0, 40.0, _RADIAL_CUTOFF])
_INNER_BREAKPOINTS = graded_breakpoints(1.0, _RADIAL_CUTOFF)
_NODE_CHUNK = 65536
_MIN_MASS = 1e-12


class Family(str, Enum):
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"
    LAPLACIAN = "laplacian"
    MIXTURE = "mixture"
    SEPARABLE = "separable"


@dataclass(frozen=True)
class PsdParams:
    """Location, spread and angle covariance of a single scattering cluster.

    All angles are radians. `spread_t`/`spread_r` are the standard
    deviations for the Gaussian and Laplacian families and the half-widths
    for the uniform-limited family.
    """

    mean_departure: float
    mean_arrival: float
    spread_t: float
    spread_r: float
    rho: float = 0.0

    def __post_init__(self):
        for name in ("mean_departure", "mean_arrival", "spread_t", "spread_r", "rho"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidArgumentError(f"{name} must be finite")
        if self.spread_t <= 0 or self.spread_r <= 0:
            raise InvalidArgumentError("spreads must be positive")
        if abs(self.rho) > 1:
            raise InvalidArgumentError(f"rho must lie in [-1, 1], got {self.rho}")
        object.__setattr__(self, "mean_departure", wrap_angle(self.mean_departure))
        object.__setattr__(self, "mean_arrival", wrap_angle(self.mean_arrival))

    @classmethod
    def from_degrees(cls, mean_departure, mean_arrival, spread_t, spread_r, rho=0.0):
        return cls(math.radians(mean_departure), math.radians(mean_arrival),
                   math.radians(spread_t), math.radians(spread_r), rho)


class BiAngularPsd(abc.ABC):
    """Interface shared by every joint departure/arrival power density."""

    family: Family

    @abc.abstractmethod
    def density(self, phi, varphi):
        """Evaluate G(phi, varphi); broadcasts over array arguments."""

    @abc.abstractmethod
    def marginal_tx(self, phi):
        """Departure-angle marginal, the integral of G over arrival angle."""

    @abc.abstractmethod
    def marginal_rx(self, varphi):
        """Arrival-angle marginal, the integral of G over departure angle."""

    @abc.abstractmethod
    def modal_coefficients(self, dm_max, dl_max):
        """2-D Fourier coefficients gamma(dm, dl) by quadrature of G.

        Returns
        -------
        ndarray
            Complex array of shape ``(2*dm_max+1, 2*dl_max+1)`` where entry
            ``[dm + dm_max, dl + dl_max]`` holds gamma(dm, dl).
        """

    @abc.abstractmethod
    def tx_coefficients(self, orders):
        """Fourier coefficients of the departure marginal, ``exp(+1j*m*phi)``."""

    @abc.abstractmethod
    def rx_coefficients(self, orders):
        """Fourier coefficients of the arrival marginal, ``exp(-1j*l*varphi)``."""

    def gamma(self, dm, dl):
        table = self.modal_coefficients(abs(int(dm)), abs(int(dl)))
        return complex(table[dm + abs(dm), dl + abs(dl)])

    @property
    def is_single_family(self):
        return self.family in (Family.UNIFORM, Family.GAUSSIAN, Family.LAPLACIAN)


def _centred(phi, varphi, params):
    return (wrap_angle(np.asarray(phi, dtype=float) - params.mean_departure),
            wrap_angle(np.asarray(varphi, dtype=float) - params.mean_arrival))


def _phase_table(values, params, dm_max, dl_max):
    a = np.arange(-dm_max, dm_max + 1)[:, np.newaxis]
    b = np.arange(-dl_max, dl_max + 1)[np.newaxis, :]
    return values * np.exp(1j * (a * params.mean_departure - b * params.mean_arrival))


def _fourier_sums(x, y, w, dm_max, dl_max):
    """Sum of w * exp(1j*(a*x - b*y)) over nodes for all orders at once."""
    a = np.arange(-dm_max, dm_max + 1)
    b = np.arange(-dl_max, dl_max + 1)
    total = np.zeros((a.size, b.size), dtype=complex)
    for start in range(0, x.size, _NODE_CHUNK):
        sl = slice(start, start + _NODE_CHUNK)
        ex = np.exp(1j * np.outer(a, x[sl])) * w[sl]
        ey = np.exp(-1j * np.outer(b, y[sl]))
        total += ex @ ey.T
    return total


def _hermitian_table(table):
    # gamma(-dm, -dl) = conj(gamma(dm, dl)) because G is real
    return 0.5 * (table + np.conj(table[::-1, ::-1]))


def _converged(evaluate, what):
    value, error, _ = converge(evaluate)
    if not error < 1e-10:
        raise NumericalFailure(f"{what}: quadrature did not converge "
                               f"(last refinement changed the result by {error:.3g})")
    return value


@dataclass(frozen=True)
class _SingleFamilyPsd(BiAngularPsd):
    params: PsdParams
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def _marginal(self, x, side, n=None):
        raise NotImplementedError

    def _marginal_rule(self, side, n):
        raise NotImplementedError

    def _side_coefficients(self, orders, side):
        orders = np.atleast_1d(np.asarray(orders, dtype=int))
        sign = 1.0 if side == "tx" else -1.0
        mean = self.params.mean_departure if side == "tx" else self.params.mean_arrival

        def evaluate(n):
            x, w = self._marginal_rule(side, n)
            return np.exp(sign * 1j * np.outer(orders, x)) @ w

        values = _converged(evaluate, f"{self.family.value} {side} marginal coefficients")
        return values * np.exp(sign * 1j * orders * mean)

    def tx_coefficients(self, orders):
        return self._side_coefficients(orders, "tx")

    def rx_coefficients(self, orders):
        return self._side_coefficients(orders, "rx")


@dataclass(frozen=True)
class UniformLimitedPsd(_SingleFamilyPsd):
    """Uniform power over a rectangle of half-widths (spread_t, spread_r),
    tilted by a bilinear term in the Morgenstern style.

    ``G = 1/(4 Dt Dr) - rho*x*y/(4 Dt^2 Dr^2)`` for ``|x| <= Dt, |y| <= Dr``
    with x, y the offsets from the mean; zero elsewhere. Non-negative
    whenever ``|rho| <= 1``.
    """

    family = Family.UNIFORM

    def __post_init__(self):
        if self.params.spread_t > math.pi or self.params.spread_r > math.pi:
            raise InvalidArgumentError("uniform-limited half-widths cannot exceed pi")

    def _value(self, x, y):
        dt, dr, rho = self.params.spread_t, self.params.spread_r, self.params.rho
        inside = (np.abs(x) <= dt) & (np.abs(y) <= dr)
        value = 1.0 / (4 * dt * dr) - rho * x * y / (4 * dt ** 2 * dr ** 2)
        return np.where(inside, value, 0.0)

    def density(self, phi, varphi):
        return self._value(*_centred(phi, varphi, self.params))

    def _marginal(self, x, side, n=None):
        half = self.params.spread_t if side == "tx" else self.params.spread_r
        return np.where(np.abs(x) <= half, 1.0 / (2 * half), 0.0)

    def marginal_tx(self, phi):
        return self._marginal(wrap_angle(np.asarray(phi, float) - self.params.mean_departure), "tx")

    def marginal_rx(self, varphi):
        return self._marginal(wrap_angle(np.asarray(varphi, float) - self.params.mean_arrival), "rx")

    def _box_rule(self, n):
        dt, dr = self.params.spread_t, self.params.spread_r
        x, wx = panel_rule(np.linspace(-dt, dt, 5), n)
        y, wy = panel_rule(np.linspace(-dr, dr, 5), n)
        X, Y = np.meshgrid(x, y, indexing="ij")
        w = np.outer(wx, wy) * self._value(X, Y)
        return X.ravel(), Y.ravel(), w.ravel()

    def _marginal_rule(self, side, n):
        half = self.params.spread_t if side == "tx" else self.params.spread_r
        x, w = panel_rule(np.linspace(-half, half, 5), n)
        return x, w / (2 * half)

    def modal_coefficients(self, dm_max, dl_max):
        def evaluate(n):
            return _fourier_sums(*self._box_rule(n), dm_max, dl_max)

        table = _converged(evaluate, "uniform-limited modal coefficients")
        return _hermitian_table(_phase_table(table, self.params, dm_max, dl_max))


@dataclass(frozen=True)
class _EllipticalPsd(_SingleFamilyPsd):
    """Density of the form ``Omega * f(Q / (1 - rho^2))`` truncated to the torus.

    With ``x = s_t*r*cos(t)`` and ``y = s_r*r*(rho*cos(t) + sqrt(1-rho^2)*sin(t))``
    the quadratic form becomes ``r^2``, so integration is done in these
    polar coordinates. The truncation square maps to a quadrilateral whose
    corners split the angular panels.
    """

    def __post_init__(self):
        if abs(self.params.rho) >= 1:
            raise DegenerateDistributionError(
                f"{self.family.value} density needs |rho| < 1, got {self.params.rho}")

    @staticmethod
    @abc.abstractmethod
    def _profile(r):
        """Unnormalized density as a function of the whitened radius."""

    @property
    def _s(self):
        return math.sqrt(1.0 - self.params.rho ** 2)

    def _whitened_radius(self, x, y):
        st, sr, rho = self.params.spread_t, self.params.spread_r, self.params.rho
        u = x / st
        z = (y / sr - rho * u) / self._s
        return np.hypot(u, z)

    def _polar_rule(self, n):
        key = ("polar", n)
        if key in self._cache:
            return self._cache[key]
        st, sr, rho, s = self.params.spread_t, self.params.spread_r, self.params.rho, self._s
        cx = np.array([np.pi, -np.pi, -np.pi, np.pi])
        cy = np.array([np.pi, np.pi, -np.pi, -np.pi])
        cu = cx / st
        corners = np.sort(np.arctan2((cy / sr - rho * cu) / s, cu))
        corners = np.append(corners, corners[0] + 2 * np.pi)
        theta_bp = np.concatenate([np.linspace(corners[k], corners[k + 1], 3)[:-1]
                                   for k in range(4)] + [[corners[-1]]])
        theta, wt = panel_rule(theta_bp, n)
        dir_x = st * np.cos(theta)
        dir_y = sr * (rho * np.cos(theta) + s * np.sin(theta))
        with np.errstate(divide="ignore"):
            rlim = np.minimum(np.pi / np.abs(dir_x), np.pi / np.abs(dir_y))
        rlim = np.minimum(rlim, _RADIAL_CUTOFF)
        r_bp = np.minimum(_RADIAL_BREAKPOINTS[np.newaxis, :], rlim[:, np.newaxis])
        r, wr = panel_rule(r_bp, n)
        x = (r * dir_x[:, np.newaxis]).ravel()
        y = (r * dir_y[:, np.newaxis]).ravel()
        w = (wt[:, np.newaxis] * wr * r * self._profile(r)).ravel() * (st * sr * s)
        self._cache[key] = (x, y, w)
        return x, y, w

    @property
    def normalization(self):
        """The constant Omega making the truncated density integrate to one."""
        if "omega" not in self._cache:
            mass = _converged(lambda n: self._polar_rule(n)[2].sum(),
                              f"{self.family.value} normalization")
            if not mass > _MIN_MASS:
                raise DegenerateDistributionError(
                    f"{self.family.value} density has mass {mass:.3g}; cannot normalize")
            self._cache["omega"] = 1.0 / float(mass)
        return self._cache["omega"]

    def density(self, phi, varphi):
        x, y = _centred(phi, varphi, self.params)
        with np.errstate(divide="ignore"):
            return self.normalization * self._profile(self._whitened_radius(x, y))

    def _inner_integral(self, u, z_lo, z_hi, n):
        """Integral of the profile at sqrt(u^2 + z^2) over z in [z_lo, z_hi]."""
        zb = np.clip(_INNER_BREAKPOINTS[np.newaxis, :], z_lo[:, np.newaxis], z_hi[:, np.newaxis])
        z, wz = panel_rule(zb, n)
        return np.sum(wz * self._profile(np.hypot(u[:, np.newaxis], z)), axis=1)

    def _marginal(self, x, side, n=None):
        """Marginal at centred offsets `x` on the given side."""
        st, sr, rho, s = self.params.spread_t, self.params.spread_r, self.params.rho, self._s
        own, other = (st, sr) if side == "tx" else (sr, st)
        x = np.asarray(x, dtype=float)
        u = np.ravel(x) / own
        z_lo = (-np.pi / other - rho * u) / s
        z_hi = (np.pi / other - rho * u) / s
        if n is None:
            inner = _converged(lambda m: self._inner_integral(u, z_lo, z_hi, m),
                               f"{self.family.value} marginal")
        else:
            inner = self._inner_integral(u, z_lo, z_hi, n)
        return (self.normalization * other * s * inner).reshape(x.shape)

    def marginal_tx(self, phi):
        return self._marginal(wrap_angle(np.asarray(phi, float) - self.params.mean_departure), "tx")

    def marginal_rx(self, varphi):
        return self._marginal(wrap_angle(np.asarray(varphi, float) - self.params.mean_arrival), "rx")

    def _marginal_rule(self, side, n):
        own = self.params.spread_t if side == "tx" else self.params.spread_r
        x, w = panel_rule(graded_breakpoints(own, np.pi), n)
        return x, w * self._marginal(x, side, n)

    def modal_coefficients(self, dm_max, dl_max):
        key = ("gamma", dm_max, dl_max)
        if key not in self._cache:
            def evaluate(n):
                x, y, w = self._polar_rule(n)
                return _fourier_sums(x, y, w, dm_max, dl_max) / w.sum()

            table = _converged(evaluate, f"{self.family.value} modal coefficients")
            self._cache[key] = _hermitian_table(_phase_table(table, self.params, dm_max, dl_max))
        return self._cache[key]


@dataclass(frozen=True)
class GaussianPsd(_EllipticalPsd):
    """Bivariate Gaussian density truncated to [-pi, pi)^2 around its mean."""

    family = Family.GAUSSIAN

    @staticmethod
    def _profile(r):
        return np.exp(-0.5 * r * r)

    def _inner_integral(self, u, z_lo, z_hi, n):
        # closed form of the inner Gaussian integral
        return np.exp(-0.5 * u * u) * math.sqrt(2 * math.pi) * (ndtr(z_hi) - ndtr(z_lo))


@dataclass(frozen=True)
class LaplacianPsd(_EllipticalPsd):
    """Elliptical bivariate Laplacian density truncated to [-pi, pi)^2.

    The profile is ``K0(sqrt(Q / (1 - rho^2)))``. With this scaling the
    untruncated density has characteristic function
    ``1 / (1 + s_t^2 a^2 - 2 rho s_t s_r a b + s_r^2 b^2)``. The density is
    infinite at the mean (logarithmic singularity).
    """

    family = Family.LAPLACIAN

    @staticmethod
    def _profile(r):
        return k0(r)


@dataclass(frozen=True)
class MixturePsd(BiAngularPsd):
    """Convex combination of densities.

    Parameters
    ----------
    components : sequence of (weight, BiAngularPsd)
        Weights must be positive and sum to one within 1e-12.
    """

    components: tuple
    family = Family.MIXTURE

    def __post_init__(self):
        components = tuple((float(w), p) for w, p in self.components)
        if not components:
            raise InvalidArgumentError("a mixture needs at least one component")
        weights = np.array([w for w, _ in components])
        if np.any(~(weights > 0)):
            raise InvalidArgumentError("mixture weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise InvalidArgumentError(f"mixture weights sum to {weights.sum():.15g}, not 1")
        object.__setattr__(self, "components", components)

    @classmethod
    def equal_weights(cls, psds):
        psds = list(psds)
        return cls(tuple((1.0 / len(psds), p) for p in psds[:-1])
                   + ((1.0 - (len(psds) - 1) / len(psds), psds[-1]),))

    @property
    def weights(self):
        return np.array([w for w, _ in self.components])

    def _combine(self, method, *args):
        return sum(w * getattr(p, method)(*args) for w, p in self.components)

    def density(self, phi, varphi):
        return self._combine("density", phi, varphi)

    def marginal_tx(self, phi):
        return self._combine("marginal_tx", phi)

    def marginal_rx(self, varphi):
        return self._combine("marginal_rx", varphi)

    def modal_coefficients(self, dm_max, dl_max):
        return self._combine("modal_coefficients", dm_max, dl_max)

    def tx_coefficients(self, orders):
        return self._combine("tx_coefficients", orders)

    def rx_coefficients(self, orders):
        return self._combine("rx_coefficients", orders)


@dataclass(frozen=True)
class SeparablePsd(BiAngularPsd):
    """Product of the two marginals of `source`.

    This is the joint density implied by the Kronecker model.
    """

    source: BiAngularPsd
    family = Family.SEPARABLE

    def density(self, phi, varphi):
        return self.source.marginal_tx(phi) * self.source.marginal_rx(varphi)

    def marginal_tx(self, phi):
        return self.source.marginal_tx(phi)

    def marginal_rx(self, varphi):
        return self.source.marginal_rx(varphi)

    def tx_coefficients(self, orders):
        return self.source.tx_coefficients(orders)

    def rx_coefficients(self, orders):
        return self.source.rx_coefficients(orders)

    def modal_coefficients(self, dm_max, dl_max):
        return np.outer(self.tx_coefficients(np.arange(-dm_max, dm_max + 1)),
                        self.rx_coefficients(np.arange(-dl_max, dl_max + 1)))


def kronecker_psd(psd: BiAngularPsd) -> SeparablePsd:
    """Separable density ``P_tx(phi) * P_rx(varphi)`` built from `psd`'s marginals."""
    if isinstance(psd, SeparablePsd):
        return psd
    return SeparablePsd(psd)


_FAMILIES = {Family.UNIFORM: UniformLimitedPsd, Family.GAUSSIAN: GaussianPsd,
             Family.LAPLACIAN: LaplacianPsd}


def make_psd(family, params: PsdParams) -> BiAngularPsd:
    """Construct a single-family density by name."""
    try:
        cls = _FAMILIES[Family(family)]
    except (ValueError, KeyError):
        raise InvalidArgumentError(f"unknown single-cluster family {family!r}") from None
    return cls(params)


def density_grid(psd: BiAngularPsd, resolution: int):
    """Tabulate `psd` on a uniform periodic grid.

    Returns ``(angles, values)`` where ``angles`` holds `resolution` points
    spanning [-pi, pi) and ``values[i, j] = G(angles[i], angles[j])``.
    Infinite values (Laplacian means falling on a node) are replaced by the
    density a quarter grid step away.
    """
    if int(resolution) != resolution or resolution < 3:
        raise InvalidArgumentError(f"resolution must be an integer >= 3, got {resolution}")
    resolution = int(resolution)
    angles = np.linspace(-np.pi, np.pi, resolution, endpoint=False)
    if isinstance(psd, SeparablePsd):
        values = np.outer(psd.marginal_tx(angles), psd.marginal_rx(angles))
    else:
        values = psd.density(angles[:, np.newaxis], angles[np.newaxis, :])
    bad = ~np.isfinite(values)
    if np.any(bad):
        step = 2 * np.pi / resolution
        i, j = np.nonzero(bad)
        values = values.copy()
        values[i, j] = psd.density(angles[i] + step / 4, angles[j] + step / 4)
    return angles, values


def count_local_maxima(values, rel_threshold=0.01):
    """Count grid points strictly above all 8 periodic neighbours and above
    `rel_threshold` times the global maximum."""
    values = np.asarray(values, dtype=float)
    is_max = values > rel_threshold * values.max()
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                is_max &= values > np.roll(values, (di, dj), axis=(0, 1))
    return int(is_max.sum())


def write_grid_csv(path, angles, values):
    """Write a tabulated density as rows of ``phi_deg, varphi_deg, density``."""
    deg = np.degrees(angles)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["phi_deg", "varphi_deg", "density"])
        for i, phi in enumerate(deg):
            for j, varphi in enumerate(deg):
                writer.writerow([f"{phi:.10g}", f"{varphi:.10g}", f"{values[i, j]:.17g}"])
