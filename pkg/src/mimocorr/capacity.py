"""Correlated channel realizations and ergodic mutual information."""
import csv
import logging
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, NotPositiveSemidefiniteError

__all__ = ["psd_sqrt", "RealizationEngine", "draw_channel", "draw_channels",
           "mutual_information", "average_mi", "CapacityCurve", "BLOCK_SIZE",
           "DEFAULT_TRIALS"]

logger = logging.getLogger(__name__)

CLAMP_TOLERANCE = 1e-9
HERMITIAN_TOLERANCE = 1e-9
# Trials are generated in blocks of this size; block b is seeded with
# spawn key (b,) so trial t depends only on (seed, t).
BLOCK_SIZE = 4096
DEFAULT_TRIALS = 20000


def _psd_eig(R):
    R = np.asarray(R)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {R.shape}")
    if not np.all(np.isfinite(R)):
        raise InvalidArgumentError("matrix has non-finite entries")
    scale = max(np.max(np.abs(R)), np.finfo(float).tiny)
    if np.max(np.abs(R - R.conj().T)) > HERMITIAN_TOLERANCE * scale:
        raise InvalidArgumentError("matrix is not Hermitian")
    w, V = np.linalg.eigh(0.5 * (R + R.conj().T))
    top = max(w.max(), 0.0)
    if w.min() < -CLAMP_TOLERANCE * top:
        raise NotPositiveSemidefiniteError(
            f"eigenvalue {w.min():.6g} is below -{CLAMP_TOLERANCE:g} * {top:.6g}", w.min())
    clamped = int(np.count_nonzero(w < 0))
    if clamped:
        logger.debug("clamped %d slightly negative eigenvalues (min %.3g)", clamped, w.min())
    return np.maximum(w, 0.0), V, clamped


def psd_sqrt(R) -> np.ndarray:
    """Positive semidefinite square root ``U diag(sqrt(w)) U^H`` of a Hermitian matrix.

    Eigenvalues in ``[-1e-9 * w_max, 0)`` are treated as zero; anything
    more negative raises :class:`NotPositiveSemidefiniteError`.
    """
    w, V, _ = _psd_eig(R)
    return (V * np.sqrt(w)) @ V.conj().T


@dataclass(frozen=True)
class RealizationEngine:
    """Generator of channel matrices with ``vec(H) = sqrt_r @ vec(W)``."""

    sqrt_r: np.ndarray
    n_T: int
    n_R: int
    rng_seed: int = 0
    clamped_eigenvalues: int = 0

    @classmethod
    def from_correlation(cls, R, n_T=None, n_R=None, seed=0):
        """Build an engine from a :class:`ChannelCorrelation` or a raw matrix."""
        n_T = getattr(R, "n_T", n_T)
        n_R = getattr(R, "n_R", n_R)
        matrix = np.asarray(R)
        if n_T is None or n_R is None or n_T * n_R != matrix.shape[0]:
            raise InvalidArgumentError("n_T * n_R must match the correlation size")
        w, V, clamped = _psd_eig(matrix)
        sqrt_r = (V * np.sqrt(w)) @ V.conj().T
        sqrt_r.setflags(write=False)
        return cls(sqrt_r, int(n_T), int(n_R), int(seed), clamped)

    @property
    def correlation(self):
        return self.sqrt_r @ self.sqrt_r.conj().T


def _white(seed, n, block):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))
    z = rng.standard_normal((BLOCK_SIZE, n, 2))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)


def draw_channels(engine: RealizationEngine, count: int, start: int = 0) -> np.ndarray:
    """Trials ``start .. start+count-1`` as an array of shape (count, n_R, n_T)."""
    n = engine.n_T * engine.n_R
    out = np.empty((count, engine.n_R, engine.n_T), dtype=complex)
    t = start
    while t < start + count:
        block, offset = divmod(t, BLOCK_SIZE)
        take = min(BLOCK_SIZE - offset, start + count - t)
        w = _white(engine.rng_seed, n, block)[offset:offset + take]
        h = w @ engine.sqrt_r.T
        # column-stacked: receive index fastest
        out[t - start:t - start + take] = h.reshape(take, engine.n_T, engine.n_R).transpose(0, 2, 1)
        t += take
    return out


def draw_channel(engine: RealizationEngine, index: int = 0) -> np.ndarray:
    """Channel realization number `index` (an n_R x n_T matrix)."""
    return draw_channels(engine, 1, index)[0]


def mutual_information(H, snr: float) -> float:
    """``log2 det(I + snr/n_T * H H^H)`` in bits per channel use."""
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    if not np.all(np.isfinite(H)):
        raise InvalidArgumentError("channel matrix has non-finite entries")
    if not snr > 0:
        raise InvalidArgumentError(f"snr must be positive, got {snr}")
    n_R, n_T = H.shape
    A = np.eye(n_R) + (snr / n_T) * (H @ H.conj().T)
    L = np.linalg.cholesky(A)
    return float(2.0 * np.sum(np.log2(np.abs(np.diag(L)))))


@dataclass
class CapacityCurve:
    """Monte Carlo estimate of average mutual information against SNR."""

    snr_db: np.ndarray
    mean_mi: np.ndarray
    std_err: np.ndarray
    trials: int
    scenario_id: str = ""

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["snr_db", "mean_mi_bits", "std_err", "trials", "scenario_id"])
            for s, m, e in zip(self.snr_db, self.mean_mi, self.std_err):
                writer.writerow([f"{s:.10g}", f"{m:.17g}", f"{e:.17g}", self.trials,
                                 self.scenario_id])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(np.array([float(r["snr_db"]) for r in rows]),
                   np.array([float(r["mean_mi_bits"]) for r in rows]),
                   np.array([float(r["std_err"]) for r in rows]),
                   int(rows[0]["trials"]) if rows else 0,
                   rows[0]["scenario_id"] if rows else "")


def _per_trial_mi(engine, snr_lin, trials):
    """Mutual information for every trial and SNR, shape (trials, n_snr)."""
    out = np.empty((trials, snr_lin.size))
    for start in range(0, trials, BLOCK_SIZE):
        count = min(BLOCK_SIZE, trials - start)
        H = draw_channels(engine, count, start)
        # eigenvalues of H H^H are shared by every SNR point
        lam = np.linalg.eigvalsh(H @ H.conj().transpose(0, 2, 1))
        lam = np.maximum(lam, 0.0)
        out[start:start + count] = np.sum(
            np.log2(1.0 + lam[:, np.newaxis, :] * (snr_lin[:, np.newaxis] / engine.n_T)), axis=2)
    return out


def average_mi(engine: RealizationEngine, snr_db, trials: int = DEFAULT_TRIALS,
               scenario_id: str = "") -> CapacityCurve:
    """Average mutual information at each SNR (dB) over `trials` realizations.

    The same realizations are reused for every SNR point. With a single
    trial the standard error is undefined and reported as NaN.
    """
    if int(trials) != trials or trials < 1:
        raise InvalidArgumentError(f"trials must be a positive integer, got {trials}")
    snr_db = np.atleast_1d(np.asarray(snr_db, dtype=float))
    mi = _per_trial_mi(engine, 10.0 ** (snr_db / 10.0), int(trials))
    mean = mi.mean(axis=0)
    if trials > 1:
        std_err = mi.std(axis=0, ddof=1) / np.sqrt(trials)
    else:
        std_err = np.full(snr_db.shape, np.nan)
    return CapacityCurve(snr_db, mean, std_err, int(trials), scenario_id)
