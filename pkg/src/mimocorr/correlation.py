"""Modal and antenna-domain channel correlation matrices.

Index conventions
-----------------
``vec(H)`` stacks the columns of H, so the receive index runs fastest.
The modal matrix R_S therefore consists of (2*M_T+1)^2 blocks indexed by
transmit mode orders (m, m'), each block (2*M_R+1) square and indexed by
receive orders (l, l'). Mode orders run from -M to M; row ``i`` of a
block corresponds to order ``i - M``.
"""
import csv
import logging
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, UnsupportedMethodError
from .psd import BiAngularPsd, Family, PsdParams
from .smf import ConfigurationMatrix

__all__ = ["ModalCorrelationMatrix", "ChannelCorrelation", "sinc", "gamma_closed_form",
           "gamma_quadrature", "closed_form_table", "build_rs", "build_rs_kronecker",
           "isotropic_rs", "build_r", "write_matrix_csv", "read_matrix_csv"]

logger = logging.getLogger(__name__)

ASYMMETRY_TOLERANCE = 1e-9


def sinc(x):
    """Unnormalized sinc, ``sin(x)/x`` with ``sinc(0) = 1``."""
    x = np.asarray(x, dtype=float)
    return np.sinc(x / np.pi)


def _uniform_gamma(p: PsdParams, dm, dl):
    dt, dr = p.spread_t, p.spread_r
    phase = np.exp(1j * (dm * p.mean_departure - dl * p.mean_arrival))
    if dm == 0 and dl == 0:
        return 1.0 + 0j
    if dl == 0:
        return sinc(dm * dt) * phase
    if dm == 0:
        return sinc(dl * dr) * phase
    xt, xr = dm * dt, dl * dr
    cross = p.rho / (dl * dm * dt * dr) * (np.cos(xt) - sinc(xt)) * (sinc(xr) - np.cos(xr))
    return phase * (sinc(xt) * sinc(xr) + cross)


def _quadratic(p: PsdParams, dm, dl):
    st, sr = p.spread_t, p.spread_r
    return st ** 2 * dm ** 2 - 2 * p.rho * st * sr * dm * dl + sr ** 2 * dl ** 2


def gamma_closed_form(family, params: PsdParams, dm: int, dl: int) -> complex:
    """Closed-form modal correlation gamma(dm, dl) for a single cluster.

    The uniform-limited result is exact. The Gaussian result integrates
    the untruncated density (accurate for small spreads); the Laplacian
    result is exact for the untruncated density.
    """
    family = Family(family)
    dm, dl = int(dm), int(dl)
    if dm == 0 and dl == 0:
        return 1.0 + 0j
    if family is Family.UNIFORM:
        return complex(_uniform_gamma(params, dm, dl))
    phase = 1j * (dm * params.mean_departure - dl * params.mean_arrival)
    q = _quadratic(params, dm, dl)
    if family is Family.GAUSSIAN:
        return complex(np.exp(phase - 0.5 * q))
    if family is Family.LAPLACIAN:
        return complex(np.exp(phase) / (q + 1.0))
    raise UnsupportedMethodError(f"no closed form for family {family.value!r}")


def gamma_quadrature(psd: BiAngularPsd, dm: int, dl: int) -> complex:
    """gamma(dm, dl) as the 2-D Fourier coefficient of `psd`, by quadrature."""
    return psd.gamma(dm, dl)


def closed_form_table(family, params, dm_max, dl_max):
    """Closed-form gamma over ``[-dm_max, dm_max] x [-dl_max, dl_max]``."""
    table = np.empty((2 * dm_max + 1, 2 * dl_max + 1), dtype=complex)
    for i, dm in enumerate(range(-dm_max, dm_max + 1)):
        for j, dl in enumerate(range(-dl_max, dl_max + 1)):
            table[i, j] = gamma_closed_form(family, params, dm, dl)
    return table


@dataclass(frozen=True)
class ModalCorrelationMatrix:
    """Correlation matrix of ``vec(H_S)`` with its block layout."""

    entries: np.ndarray
    M_T: int
    M_R: int

    @property
    def block_size(self):
        return 2 * self.M_R + 1

    def block(self, m, m_prime):
        """Block for transmit mode orders (m, m') in ``-M_T..M_T``."""
        if abs(m) > self.M_T or abs(m_prime) > self.M_T:
            raise InvalidArgumentError("transmit mode order out of range")
        b = self.block_size
        i, j = (m + self.M_T) * b, (m_prime + self.M_T) * b
        return self.entries[i:i + b, j:j + b]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def _assemble(table, M_T, M_R):
    """Fill R_S from a gamma table indexed ``[dm + 2*M_T, dl + 2*M_R]``."""
    m = np.repeat(np.arange(-M_T, M_T + 1), 2 * M_R + 1)
    l = np.tile(np.arange(-M_R, M_R + 1), 2 * M_T + 1)
    dm = m[:, np.newaxis] - m[np.newaxis, :]
    dl = l[:, np.newaxis] - l[np.newaxis, :]
    entries = table[dm + 2 * M_T, dl + 2 * M_R]
    entries.setflags(write=False)
    return ModalCorrelationMatrix(entries, M_T, M_R)


def _check_orders(M_T, M_R):
    for name, value in (("M_T", M_T), ("M_R", M_R)):
        if int(value) != value or value < 0:
            raise InvalidArgumentError(f"{name} must be a non-negative integer, got {value}")
    return int(M_T), int(M_R)


def build_rs(psd: BiAngularPsd, M_T: int, M_R: int, method="quadrature") -> ModalCorrelationMatrix:
    """Modal correlation matrix of the scattering channel.

    Parameters
    ----------
    psd : BiAngularPsd
    M_T, M_R : int
        Mode half-widths at the transmit and receive apertures.
    method : {"quadrature", "closed-form"}
        ``"closed-form"`` is only available for single-cluster families.
    """
    M_T, M_R = _check_orders(M_T, M_R)
    if method == "quadrature":
        table = psd.modal_coefficients(2 * M_T, 2 * M_R)
    elif method in ("closed-form", "closed_form"):
        if not psd.is_single_family:
            raise UnsupportedMethodError(
                f"closed-form coefficients are not available for {psd.family.value} densities")
        table = closed_form_table(psd.family, psd.params, 2 * M_T, 2 * M_R)
        table = 0.5 * (table + np.conj(table[::-1, ::-1]))
    else:
        raise InvalidArgumentError(f"unknown method {method!r}")
    return _assemble(table, M_T, M_R)


def build_rs_kronecker(psd: BiAngularPsd, M_T: int, M_R: int) -> ModalCorrelationMatrix:
    """Kronecker approximation ``F_T (x) F_R`` from the marginals of `psd`."""
    M_T, M_R = _check_orders(M_T, M_R)
    ft = psd.tx_coefficients(np.arange(-2 * M_T, 2 * M_T + 1))
    fr = psd.rx_coefficients(np.arange(-2 * M_R, 2 * M_R + 1))
    m = np.arange(-M_T, M_T + 1)
    l = np.arange(-M_R, M_R + 1)
    F_T = ft[m[:, np.newaxis] - m[np.newaxis, :] + 2 * M_T]
    F_R = fr[l[:, np.newaxis] - l[np.newaxis, :] + 2 * M_R]
    F_T = 0.5 * (F_T + F_T.conj().T)
    F_R = 0.5 * (F_R + F_R.conj().T)
    entries = np.kron(F_T, F_R)
    entries.setflags(write=False)
    return ModalCorrelationMatrix(entries, M_T, M_R)


def isotropic_rs(M_T: int, M_R: int) -> ModalCorrelationMatrix:
    """R_S of isotropic scattering: the identity."""
    M_T, M_R = _check_orders(M_T, M_R)
    entries = np.eye((2 * M_T + 1) * (2 * M_R + 1), dtype=complex)
    entries.setflags(write=False)
    return ModalCorrelationMatrix(entries, M_T, M_R)


@dataclass(frozen=True)
class ChannelCorrelation:
    """Correlation matrix of ``vec(H)`` for an n_R x n_T channel.

    Attributes
    ----------
    asymmetry : float
        Relative Hermitian defect of the product before symmetrization.
    """

    entries: np.ndarray
    n_T: int
    n_R: int
    asymmetry: float = 0.0

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def build_r(J_T: ConfigurationMatrix, J_R: ConfigurationMatrix,
            R_S: ModalCorrelationMatrix) -> ChannelCorrelation:
    """Antenna-domain correlation ``(conj(J_T) (x) J_R) R_S (J_T^T (x) J_R^H)``."""
    jt, jr = np.asarray(J_T), np.asarray(J_R)
    rs = np.asarray(R_S)
    if jt.ndim != 2 or jr.ndim != 2:
        raise InvalidArgumentError("configuration matrices must be 2-D")
    if jt.shape[1] * jr.shape[1] != rs.shape[0] or rs.shape[0] != rs.shape[1]:
        raise InvalidArgumentError(
            f"dimension mismatch: J_T {jt.shape}, J_R {jr.shape}, R_S {rs.shape}")
    if isinstance(R_S, ModalCorrelationMatrix) and (
            jt.shape[1] != 2 * R_S.M_T + 1 or jr.shape[1] != 2 * R_S.M_R + 1):
        raise InvalidArgumentError("configuration matrices do not match the mode orders of R_S")
    A = np.kron(jt.conj(), jr)
    R = A @ rs @ A.conj().T
    scale = np.linalg.norm(R)
    asymmetry = float(np.linalg.norm(R - R.conj().T) / scale) if scale > 0 else 0.0
    if asymmetry > ASYMMETRY_TOLERANCE:
        logger.warning("channel correlation deviates from Hermitian by %.3g (relative)", asymmetry)
    R = 0.5 * (R + R.conj().T)
    R.setflags(write=False)
    return ChannelCorrelation(R, jt.shape[0], jr.shape[0], asymmetry)


def write_matrix_csv(path, matrix):
    """Write a complex matrix with real and imaginary parts interleaved per column."""
    matrix = np.asarray(matrix)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in matrix:
            writer.writerow([f"{v:.17g}" for z in row for v in (z.real, z.imag)])


def read_matrix_csv(path):
    """Inverse of :func:`write_matrix_csv`."""
    rows = np.loadtxt(path, delimiter=",", ndmin=2)
    return rows[:, 0::2] + 1j * rows[:, 1::2]
