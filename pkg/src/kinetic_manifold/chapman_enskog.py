"""Equilibrium graph, reduced flux and viscosity, and case classification.

Coordinates follow :class:`~kinetic_manifold.linear.Decomposition`: a state
``w`` (a perturbation of ``u_bar``) is written ``(u, v)`` with ``u`` in the
equilibrium tangent space and ``v`` in its complement.  Functions ending in
``_c`` take and return those coordinates; the public wrappers use ambient
vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ClassificationError, ConvergenceError
from .linear import Decomposition, build_decomposition
from .model import KineticModel

__all__ = [
    "Classification",
    "CEData",
    "ce_data",
    "equilibrium_graph",
    "flux",
    "viscosity",
    "flux_jacobian",
    "classify",
    "rankine_hugoniot",
    "char_speed",
]

CASES = ("Noncharacteristic", "SimpleGNL", "LinearlyDegenerate", "Unclassified")


class CEData:
    """Model data in adapted coordinates with batched Newton solves."""

    def __init__(self, dec: Decomposition, radius: float | None = None):
        self.dec = dec
        m = dec.model
        self.p, self.n = dec.p, dec.n
        Bi = dec.basis
        self.B = np.einsum("ak,kij,ib,jc->abc", dec.basis_inv, m.B, Bi, Bi)
        self.ub = dec.to_coords(m.u_bar)
        self.A = dec.A_c
        self.L = 2.0 * np.einsum("kij,i->kj", self.B, self.ub)
        self.radius = radius if radius is not None else 0.1 * float(m.norm(m.u_bar)) + 0.1

    def q_residual(self, w):
        """``Q(u_bar + w)`` in coordinates, batched over leading axes."""
        return w @ self.L.T + np.einsum("kij,...i,...j->...k", self.B, w, w)

    def dq(self, w):
        """Jacobian of ``Q(u_bar + w)``, batched: ``(..., n, n)``."""
        return self.L + 2.0 * np.einsum("kij,...i->...kj", self.B, w)

    def graph(self, u, tol=1e-13, max_iter=60):
        """``v*(u)`` for a batch of ``u`` of shape ``(..., p)``."""
        u = np.asarray(u, float)
        lead = u.shape[:-1]
        u2 = u.reshape(-1, self.p)
        if np.abs(u2).max(initial=0.0) > self.radius:
            raise ConvergenceError(f"state outside the Newton radius {self.radius:.3g}")
        p = self.p
        v = np.zeros((u2.shape[0], self.n - p))
        for _ in range(max_iter):
            w = np.concatenate([u2, v], axis=1)
            F = self.q_residual(w)[:, p:]
            J = self.dq(w)[:, p:, p:]
            step = np.linalg.solve(J, F[..., None])[..., 0]
            v = v - step
            if np.abs(step).max(initial=0.0) <= tol * max(1.0, np.abs(v).max(initial=0.0)):
                break
        else:
            raise ConvergenceError("Newton iteration for the equilibrium graph did not converge")
        return v.reshape(lead + (self.n - p,))

    def state(self, u):
        u = np.asarray(u, float)
        return np.concatenate([u, self.graph(u)], axis=-1)

    def flux(self, u):
        w = self.state(u)
        return w @ self.A[: self.p].T

    def flux_jacobian(self, u):
        u = np.asarray(u, float)
        w = self.state(u)
        p = self.p
        J = self.dq(w)
        dv = -np.linalg.solve(J[..., p:, p:], J[..., p:, :p])
        return self.A[:p, :p] + self.A[:p, p:] @ dv

    def viscosity(self):
        A12 = self.A[: self.p, self.p:]
        return -A12 @ np.linalg.solve(self.dec.E_c, A12.T)


@lru_cache(maxsize=32)
def ce_data(model: KineticModel) -> CEData:
    return CEData(build_decomposition(model))


def _perp_coords(dec, u):
    return dec.to_coords(u)[..., : dec.p]


def _perp_ambient(dec, c):
    return np.asarray(c) @ dec.basis[:, : dec.p].T


def equilibrium_graph(model: KineticModel, u) -> np.ndarray:
    """V-component ``v*(u)`` of the equilibrium through ``u_bar + u``."""
    d = ce_data(model)
    v = d.graph(_perp_coords(d.dec, u))
    return np.asarray(v) @ d.dec.basis[:, d.dec.p:].T


def flux(model: KineticModel, u) -> np.ndarray:
    d = ce_data(model)
    return _perp_ambient(d.dec, d.flux(_perp_coords(d.dec, u)))


def viscosity(model: KineticModel) -> np.ndarray:
    """``D* = -A12 E^{-1} A12*`` in orthonormal coordinates of V_perp."""
    return ce_data(model).viscosity()


def flux_jacobian(model: KineticModel, u) -> np.ndarray:
    """``f*'(u)`` in orthonormal coordinates of V_perp."""
    d = ce_data(model)
    return d.flux_jacobian(_perp_coords(d.dec, u))


def char_speed(model: KineticModel, u_c) -> np.ndarray:
    """Eigenvalue of ``f*'(u)`` closest to zero; ``u_c`` in V_perp coordinates."""
    d = ce_data(model)
    J = d.flux_jacobian(np.atleast_2d(u_c))
    ev = np.linalg.eigvals(J)
    idx = np.argmin(np.abs(ev), axis=-1)
    return np.take_along_axis(ev, idx[:, None], axis=-1)[:, 0].real


@dataclass(frozen=True)
class Classification:
    case: str
    m: int
    r_bar: np.ndarray  # ambient unit vector (GNL) or kernel basis columns
    Lambda: float
    kappa: np.ndarray
    f_prime_eigs: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "m": self.m,
            "lambda": self.Lambda,
            "kappa": np.atleast_1d(self.kappa).ravel().tolist(),
            "r_bar": np.asarray(self.r_bar).ravel().tolist(),
            "eigs": np.asarray(self.f_prime_eigs).tolist(),
        }


def _second_difference_lambda(d: CEData, steps=(1e-3, 5e-4)) -> float:
    e = np.zeros(d.p)
    e[0] = 1.0
    vals = []
    for s in steps:
        fp = d.flux(s * e)[0]
        fm = d.flux(-s * e)[0]
        vals.append((fp + fm) / s**2)
    s1, s2 = steps
    ratio = (s1 / s2) ** 2
    return float((ratio * vals[1] - vals[0]) / (ratio - 1.0))


def classify(model: KineticModel, tol: float = 1e-7, ldg_tol: float = 1e-10) -> Classification:
    d = ce_data(model)
    dec = d.dec
    eigs = np.sort(np.linalg.eigvals(d.flux_jacobian(np.zeros(dec.p))).real)
    r = dec.r
    if r == 0:
        return Classification("Noncharacteristic", 0, np.zeros((model.dim, 0)), 0.0,
                              np.zeros((0, 0)), eigs)
    kappa = d.viscosity()[:r, :r]
    if np.linalg.eigvalsh(kappa)[0] <= 0:
        raise ClassificationError("kappa is not positive definite")
    r_bar = dec.basis[:, :r] if r > 1 else dec.basis[:, 0]
    Lam = _second_difference_lambda(d) if r == 1 else 0.0
    diag = {"lambda_tol": tol}
    if r == 1 and abs(Lam) > 10 * tol:
        return Classification("SimpleGNL", 1, r_bar, Lam, kappa, eigs, diag)
    if abs(Lam) < tol / 10:
        from .center_manifold import fiber_field_coefficients

        coeffs = fiber_field_coefficients(dec, model, degrees=(2, 3))
        diag["fiber_coefficients_max"] = coeffs
        if coeffs <= ldg_tol:
            return Classification("LinearlyDegenerate", r, r_bar, Lam, kappa, eigs, diag)
    return Classification("Unclassified", r, r_bar, Lam, kappa, eigs, diag)


def rankine_hugoniot(model: KineticModel, eps: float, cls: Classification | None = None,
                     tol: float = 1e-14, max_iter: int = 60):
    """Endstates ``(u_minus, u_plus, q)`` of a small standing shock, ambient vectors.

    The flux constant is ``q = (Lambda eps^2 / 2) r_bar``; ``u_minus`` is the
    state at ``x -> -inf`` of the associated Lax shock.
    """
    d = ce_data(model)
    dec = d.dec
    cls = cls or classify(model)
    if cls.case != "SimpleGNL":
        raise ClassificationError("Rankine-Hugoniot endstates need a simple genuinely nonlinear model")
    q_c = np.zeros(dec.p)
    q_c[0] = cls.Lambda * eps**2 / 2
    if eps == 0:
        z = np.zeros(model.dim)
        return z, z.copy(), z.copy()
    out = []
    sgn = np.sign(cls.Lambda)
    for side in (+1.0, -1.0):
        u = np.zeros(dec.p)
        u[0] = side * sgn * eps
        for _ in range(max_iter):
            F = d.flux(u) - q_c
            step = np.linalg.solve(d.flux_jacobian(u), F)
            u = u - step
            if np.abs(step).max() <= tol * max(eps, 1e-300):
                break
        else:
            raise ConvergenceError("Rankine-Hugoniot Newton iteration did not converge")
        out.append(u)
    if np.abs(out[0] - out[1]).max() < 1e-3 * eps:
        raise ConvergenceError("Rankine-Hugoniot branches collapsed")
    return _perp_ambient(dec, out[0]), _perp_ambient(dec, out[1]), _perp_ambient(dec, q_c)
