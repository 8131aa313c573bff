"""Exponentially weighted norms of grid functions and related checks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ModelError
from .grid import GridFunction

__all__ = [
    "WeightParams",
    "default_weights",
    "derivative",
    "norm_l2w",
    "norm_h1w",
    "norm_z",
    "sobolev_embedding_check",
    "SmoothMap",
    "substitution_frechet_check",
    "fit_slope",
]


@dataclass(frozen=True)
class WeightParams:
    alpha: float
    gamma: float
    beta: float

    def __post_init__(self):
        a, g, b = self.alpha, self.gamma, self.beta
        if not (0 < a < g < b):
            raise ModelError("weights must satisfy 0 < alpha < gamma < beta")
        if not 2 * a < b - g:
            raise ModelError("weights must satisfy 2 alpha < beta - gamma")

    def check_rate(self, nu: float) -> None:
        if not self.beta < nu / 2:
            raise ModelError(f"beta={self.beta} must be below half the decay rate ({nu / 2})")

    def doubled(self) -> "WeightParams":
        return WeightParams(2 * self.alpha, 2 * self.gamma, 2 * self.beta)


def default_weights(nu: float) -> WeightParams:
    return WeightParams(0.05 * nu, 0.1 * nu, 0.25 * nu)


def _one_sided(offsets) -> np.ndarray:
    """First-derivative weights at 0 from samples at integer ``offsets``."""
    k = len(offsets)
    V = np.vander(np.asarray(offsets, float), k, increasing=True).T
    rhs = np.zeros(k)
    rhs[1] = 1.0
    return np.linalg.solve(V, rhs)


_EDGE0 = _one_sided(range(0, 6))
_EDGE1 = _one_sided(range(-1, 5))


def _fd(v: np.ndarray, h: float) -> np.ndarray:
    m = v.shape[0]
    if m < 5:
        raise ModelError("need at least five nodes to differentiate")
    d = np.empty_like(v)
    d[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * h)
    if m < 6:
        d[0] = (-25 * v[0] + 48 * v[1] - 36 * v[2] + 16 * v[3] - 3 * v[4]) / (12 * h)
        d[1] = (-3 * v[0] - 10 * v[1] + 18 * v[2] - 6 * v[3] + v[4]) / (12 * h)
        d[-1] = (25 * v[-1] - 48 * v[-2] + 36 * v[-3] - 16 * v[-4] + 3 * v[-5]) / (12 * h)
        d[-2] = (3 * v[-1] + 10 * v[-2] - 18 * v[-3] + 6 * v[-4] - v[-5]) / (12 * h)
        return d
    # six-point one-sided stencils at the two outermost nodes
    head, tail = v[:6], v[-6:][::-1]
    d[0] = np.tensordot(_EDGE0, head, axes=1) / h
    d[1] = np.tensordot(_EDGE1, head, axes=1) / h
    d[-1] = -np.tensordot(_EDGE0, tail, axes=1) / h
    d[-2] = -np.tensordot(_EDGE1, tail, axes=1) / h
    return d


def derivative(f: GridFunction) -> GridFunction:
    """Fourth-order finite-difference derivative."""
    return GridFunction(f.L, _fd(f.values, f.h))


def _pointwise_sq(f: GridFunction, gram) -> np.ndarray:
    v = f.values
    if gram is None:
        return np.einsum("ij,ij->i", v, v)
    return np.einsum("ij,jk,ik->i", v, gram, v)


def _weighted_integral(x, h, w, dens):
    return np.trapezoid(np.exp(-2 * w * np.abs(x)) * dens, dx=h)


def norm_l2w(f: GridFunction, w: float, gram=None) -> float:
    return float(np.sqrt(_weighted_integral(f.x, f.h, w, _pointwise_sq(f, gram))))


def norm_h1w(f: GridFunction, w: float, gram=None) -> float:
    return float(np.hypot(norm_l2w(f, w, gram), norm_l2w(derivative(f), w, gram)))


def norm_z(f: GridFunction, p: WeightParams, gram=None) -> float:
    return float(np.hypot(norm_l2w(f, p.gamma, gram), norm_l2w(derivative(f), p.beta, gram)))


def sobolev_embedding_check(f: GridFunction, p: WeightParams, gram=None) -> dict:
    """Largest nodal ratio ``e^{-2 beta|x|} |f(x)|^2 / (e^{-(beta-gamma)|x|} |f|_Z^2)``."""
    z2 = norm_z(f, p, gram) ** 2
    if z2 == 0:
        return {"constant": 0.0, "argmax": 0.0}
    x = f.x
    ratio = np.exp(-2 * p.beta * np.abs(x)) * _pointwise_sq(f, gram)
    ratio /= np.exp(-(p.beta - p.gamma) * np.abs(x)) * z2
    k = int(np.argmax(ratio))
    return {"constant": float(ratio[k]), "argmax": float(x[k]), "bound": 2.0 * max(2 * p.beta + 1, 2.0)}


@dataclass(frozen=True)
class SmoothMap:
    """Nodewise map ``R^n -> R^n`` with its derivative.

    ``value(V)`` and ``deriv(V, D)`` take ``(m, n)`` arrays of points and
    directions.
    """

    value: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray, np.ndarray], np.ndarray]


def fit_slope(xs, ys) -> tuple[float, float]:
    """Least-squares slope of ``log y`` against ``log x`` and its RMS residual."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    A = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(resid**2)))


def substitution_frechet_check(N: SmoothMap, f0: GridFunction, f: GridFunction,
                               p: WeightParams, scales=None, gram=None) -> dict:
    """Linearization remainder of the substitution operator along ``f0 + t (f - f0)``.

    The remainder is measured in the doubled-weight mixed norm and the step in
    the plain one; the fitted exponent is the log-log slope between them.
    """
    scales = np.asarray(scales if scales is not None else 2.0 ** -np.arange(1, 7), float)
    d = f - f0
    base = N.value(f0.values)
    lin = N.deriv(f0.values, d.values)
    p2 = p.doubled()
    res, steps = [], []
    for t in scales:
        r = GridFunction(f0.L, N.value(f0.values + t * d.values) - base - t * lin)
        res.append(norm_z(r, p2, gram))
        steps.append(t * norm_z(d, p, gram))
    res, steps = np.array(res), np.array(steps)
    ok = res > 0
    exponent = fit_slope(steps[ok], res[ok])[0] if ok.sum() >= 2 else float("inf")
    return {"residuals": res, "steps": steps, "exponent": exponent}
