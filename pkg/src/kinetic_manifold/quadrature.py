"""Cumulative integrals with exponential weights on uniform grids.

The integrand is replaced on each cell by the cubic through four
neighbouring samples and integrated exactly against ``exp(lam (x_{j+1} - y))``.
That makes the rules exact for constants and cubics, which the Green-function
solver relies on to reproduce constant states to rounding error.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.signal import lfilter

__all__ = ["cell_integrals", "exp_sweep", "decaying_convolution", "cumulative_from_center"]

_STENCILS = {
    "left": np.array([0.0, 1.0, 2.0, 3.0]),
    "mid": np.array([-1.0, 0.0, 1.0, 2.0]),
    "right": np.array([-2.0, -1.0, 0.0, 1.0]),
}


@lru_cache(maxsize=None)
def _lagrange(kind: str) -> np.ndarray:
    nodes = _STENCILS[kind]
    V = np.vander(nodes, 4, increasing=True)
    return np.linalg.inv(V).T  # row i: monomial coefficients of the i-th basis polynomial


def _moments(z: float) -> np.ndarray:
    """``m_j = int_0^1 exp(z (1 - t)) t^j dt`` for j = 0..3 and z <= 0."""
    if abs(z) < 0.5:
        # series m_j = sum_k z^k j! / (k + j + 1)!
        out = np.zeros(4)
        for j in range(4):
            term = 1.0 / (j + 1)
            for k in range(40):
                out[j] += term
                term *= z / (k + j + 2)
        return out
    out = np.empty(4)
    out[0] = np.expm1(z) / z
    for j in range(1, 4):
        out[j] = (j * out[j - 1] - 1.0) / z
    return out


def cell_integrals(c: np.ndarray, z: float, h: float) -> np.ndarray:
    """``I_j = int_{x_j}^{x_{j+1}} exp(lam (x_{j+1} - y)) c(y) dy`` with ``z = lam h``.

    ``c`` has shape ``(m, ...)``; the result has shape ``(m - 1, ...)``.
    """
    c = np.asarray(c, float)
    m = c.shape[0]
    mom = _moments(z)
    w = {k: h * (_lagrange(k) @ mom) for k in _STENCILS}
    out = np.empty((m - 1,) + c.shape[1:])
    wm = w["mid"]
    out[1:m - 2] = wm[0] * c[0:m - 3] + wm[1] * c[1:m - 2] + wm[2] * c[2:m - 1] + wm[3] * c[3:m]
    wl = w["left"]
    out[0] = wl[0] * c[0] + wl[1] * c[1] + wl[2] * c[2] + wl[3] * c[3]
    wr = w["right"]
    out[m - 2] = wr[0] * c[m - 4] + wr[1] * c[m - 3] + wr[2] * c[m - 2] + wr[3] * c[m - 1]
    return out


def exp_sweep(c: np.ndarray, lam: float, h: float, init: float) -> np.ndarray:
    """Solve ``a' = lam a + c`` left to right from ``a(x_0) = init`` (``lam <= 0``)."""
    z = lam * h
    cells = cell_integrals(c, z, h)
    decay = np.exp(z)
    body = lfilter([1.0], [1.0, -decay], cells, zi=[decay * init])[0]
    return np.concatenate([[init], body])


def decaying_convolution(c: np.ndarray, lam: float, h: float) -> np.ndarray:
    """Bounded solution of ``a' = lam a + c`` on the line for ``lam != 0``.

    Beyond the grid ``c`` is extended by its boundary values, which gives the
    closed-form starting value ``-c_edge / lam`` on the upwind side.
    """
    c = np.asarray(c, float)
    if lam < 0:
        return exp_sweep(c, lam, h, c[0] / (-lam))
    rev = c[::-1]
    return -exp_sweep(rev, -lam, h, rev[0] / lam)[::-1]


def cumulative_from_center(g: np.ndarray, h: float) -> np.ndarray:
    """``int_0^{x_j} g`` at every node of a grid whose middle node is ``x = 0``."""
    g = np.asarray(g, float)
    cells = cell_integrals(g, 0.0, h)
    zero = np.zeros((1,) + g.shape[1:])
    cum = np.concatenate([zero, np.cumsum(cells, axis=0)])
    return cum - cum[g.shape[0] // 2]
