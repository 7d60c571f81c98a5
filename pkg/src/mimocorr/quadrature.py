"""Composite Gauss-Legendre rules shared by the density and correlation code."""
import functools

import numpy as np
from numpy.polynomial.legendre import leggauss

# Node counts per panel tried in turn by the adaptive drivers.
REFINEMENT_LEVELS = (16, 32, 64, 128)
TOLERANCE = 1e-10


@functools.lru_cache(maxsize=None)
def _leggauss(n):
    x, w = leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_rule(breakpoints, n):
    """Composite rule with `n` nodes on each interval between breakpoints.

    `breakpoints` may have leading dimensions; the panels run along the
    last axis. Zero-width panels contribute zero weight, which lets
    callers clip a fixed breakpoint set to a variable interval.

    Returns
    -------
    nodes, weights : ndarray
        Shape ``breakpoints.shape[:-1] + (n_panels * n,)``.
    """
    b = np.asarray(breakpoints, dtype=float)
    x, w = _leggauss(n)
    lo, hi = b[..., :-1, np.newaxis], b[..., 1:, np.newaxis]
    half = 0.5 * (hi - lo)
    nodes = 0.5 * (hi + lo) + half * x
    weights = half * w
    shape = b.shape[:-1] + (-1,)
    return nodes.reshape(shape), weights.reshape(shape)


def graded_breakpoints(scale, limit, fine=(1e-10, 1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 0.05, 0.1,
                                           0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0,
                                           8.0, 12.0, 16.0, 24.0, 32.0, 48.0)):
    """Breakpoints symmetric about 0, graded geometrically towards 0.

    The grading is `scale` times `fine`, clipped to ``[-limit, limit]``.
    """
    pos = np.asarray(fine) * scale
    pos = np.unique(np.concatenate([pos[pos < limit], [limit]]))
    return np.concatenate([-pos[::-1], [0.0], pos])


def converge(evaluate, levels=REFINEMENT_LEVELS, tol=TOLERANCE):
    """Evaluate at increasing refinement until successive results agree.

    Parameters
    ----------
    evaluate : callable
        Maps a node count to an ndarray of estimates.

    Returns
    -------
    value : ndarray
        Finest estimate.
    error : float
        Max absolute difference between the last two estimates.
    level : int
        Node count of the accepted estimate.
    """
    previous = None
    error = np.inf
    for n in levels:
        current = np.asarray(evaluate(n))
        if previous is not None:
            error = float(np.max(np.abs(current - previous), initial=0.0))
            if error < tol:
                return current, error, n
        previous = current
    return previous, error, levels[-1]
