"""Brute-force reference computations used by the tests.

Nothing here reuses the adapted-coordinate machinery of :mod:`linear` or the
polynomial expansion of :mod:`center_manifold`; each routine goes back to the
model data directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.integrate import solve_bvp

from .errors import ConvergenceError, HypothesisError
from .grid import GridFunction
from .model import KineticModel, apply_B

__all__ = [
    "PencilSpectrum",
    "pencil_trichotomy",
    "fd_jacobian",
    "fourier_K0",
    "bvp_full_shoot",
]


@dataclass(frozen=True, eq=False)
class PencilSpectrum:
    eigenvalues: np.ndarray
    H_c: np.ndarray
    H_s: np.ndarray
    H_u: np.ndarray
    P_c: np.ndarray
    P_s: np.ndarray
    P_u: np.ndarray
    kernel_dims: tuple  # dims of ker M, ker M^2, ker M^3 for M = A^{-1} Q'

    @property
    def dims(self):
        return self.H_c.shape[1], self.H_s.shape[1], self.H_u.shape[1]


def pencil_trichotomy(model: KineticModel, rtol: float = 1e-9) -> PencilSpectrum:
    """Spectral subspaces of the pencil ``Q'(u_bar) x = lam A x``."""
    L = model.dQ_matrix()
    M = np.linalg.solve(model.A, L)
    lam, vecs = sla.eig(L, model.A)
    # the defective zero eigenvalue splits into a tiny complex pair; only the
    # hyperbolic eigenvalues need to be real
    big = np.abs(lam) > rtol * 1e3 * np.abs(lam).max()
    if np.abs(lam[big].imag).max(initial=0.0) > 1e-8 * np.abs(lam).max():
        raise HypothesisError("pencil has non-real eigenvalues")
    lam = lam.real
    vecs = vecs.real

    dims = []
    Mk = np.eye(model.dim)
    for _ in range(3):
        Mk = Mk @ M
        s = np.linalg.svd(Mk, compute_uv=False)
        dims.append(int((s <= rtol * 1e2 * s[0]).sum()))
    if dims[2] != dims[1]:
        raise HypothesisError("generalized kernel of the pencil has height above two")
    n_c = dims[1]
    U, s, Vh = np.linalg.svd(M @ M)
    Hc = Vh[model.dim - n_c:].T
    Hs = np.linalg.qr(vecs[:, big & (lam < 0)])[0]
    Hu = np.linalg.qr(vecs[:, big & (lam > 0)])[0]
    if Hc.shape[1] + Hs.shape[1] + Hu.shape[1] != model.dim:
        raise HypothesisError("pencil eigenvector count does not match dimension")
    Bm = np.concatenate([Hc, Hs, Hu], axis=1)
    Binv = np.linalg.inv(Bm)
    n_s = Hs.shape[1]

    def block(a, b):
        sel = np.zeros((model.dim, model.dim))
        sel[a:b, a:b] = np.eye(b - a)
        return Bm @ sel @ Binv

    return PencilSpectrum(lam, Hc, Hs, Hu, block(0, n_c), block(n_c, n_c + n_s),
                          block(n_c + n_s, model.dim), tuple(dims))


def fd_jacobian(fn, point, step: float = 1e-3) -> np.ndarray:
    """Fourth-order central-difference Jacobian of ``fn`` at ``point``."""
    point = np.asarray(point, float)
    f0 = np.asarray(fn(point), float)
    J = np.empty((f0.size, point.size))
    for i in range(point.size):
        e = np.zeros_like(point)
        e[i] = step
        J[:, i] = (-np.asarray(fn(point + 2 * e)) + 8 * np.asarray(fn(point + e))
                   - 8 * np.asarray(fn(point - e)) + np.asarray(fn(point - 2 * e))) / (12 * step)
    return J


def fourier_K0(dec, g: GridFunction) -> GridFunction:
    """Periodic Fourier solve of ``Gamma0 v' = E0 v + g`` for decaying ``g``.

    Multiplies the discrete transform by ``(2 pi i omega Gamma0 - E0)^{-1}``;
    only meaningful when ``g`` and the solution are negligible at the edges.
    """
    coeffs = g.values @ dec.basis_inv[dec.sl_vt].T
    sol = _multiplier_solve(dec.Gamma0, dec.E0, coeffs, g.h)
    return GridFunction(g.L, sol @ dec.basis[:, dec.sl_vt].T)


def _multiplier_solve(Gamma0, E0, coeffs, h):
    m = coeffs.shape[0]
    omega = np.fft.fftfreq(m, d=h)
    hat = np.fft.fft(coeffs, axis=0)
    out = np.empty_like(hat)
    for k, w in enumerate(omega):
        out[k] = np.linalg.solve(2j * np.pi * w * Gamma0 - E0, hat[k])
    return np.fft.ifft(out, axis=0).real


def _equilibrium_through(model, u, tol=1e-14, max_iter=60):
    """Equilibrium ``w`` (perturbation of ``u_bar``) with ``P_perp w = u``.

    Plain Newton on ``Q(u_bar + u + v) = 0`` over ``v`` in V, using a
    V basis from the gram-orthogonal complement of ``v_perp_basis``.
    """
    G = model.gram
    Y = model.v_perp_basis.T
    Vb = sla.null_space(Y.T @ G)
    v = np.zeros(Vb.shape[1])
    for _ in range(max_iter):
        w = u + Vb @ v
        F = Vb.T @ G @ apply_B(model, model.u_bar + w, model.u_bar + w)
        J = Vb.T @ G @ model.dQ_matrix(model.u_bar + w) @ Vb
        step = np.linalg.solve(J, F)
        v = v - step
        if np.abs(step).max() <= tol * max(1.0, np.abs(v).max()):
            return u + Vb @ v
    raise ConvergenceError("equilibrium Newton iteration did not converge")


def bvp_full_shoot(model: KineticModel, eps: float, L: float, m: int, u_minus=None, u_plus=None,
                   tol: float = 1e-9) -> GridFunction:
    """Standing shock of the full system ``A w' = Q'(u_bar) w + B(w, w)``.

    Collocation on ``[0, L]`` for ``(w(-s), w(s))``.  Boundary data: matching
    and the phase ``u1(0) = midpoint`` at ``s = 0``; the conserved flux and the
    stable (left) or unstable (right) eigen-projections of the linearization at
    the endstates at ``s = L``.  ``u_minus``, ``u_plus`` are ambient V_perp
    endstates; when omitted they are taken from the reduced flux.
    """
    n = model.dim
    x = np.linspace(-L, L, m)
    if eps == 0:
        return GridFunction(L, np.zeros((m, n)))
    if u_minus is None or u_plus is None:
        from .chapman_enskog import rankine_hugoniot

        u_minus, u_plus, _ = rankine_hugoniot(model, eps)
    G = model.gram
    w_minus = _equilibrium_through(model, np.asarray(u_minus, float))
    w_plus = _equilibrium_through(model, np.asarray(u_plus, float))
    Ainv = np.linalg.inv(model.A)
    L0 = model.dQ_matrix()
    Yp = sla.orth(model.v_perp_basis.T)  # Euclidean basis of V_perp
    Pperp = Yp @ np.linalg.solve(Yp.T @ G @ Yp, Yp.T @ G)
    r_bar = u_minus - u_plus
    r_bar = r_bar / np.sqrt(r_bar @ G @ r_bar)
    coord = r_bar @ G  # component along r_bar
    flux_row = Yp.T @ G @ Pperp @ model.A
    flux_val = flux_row @ w_minus

    def lin(w):
        return Ainv @ (L0 + 2.0 * np.einsum("kij,i->kj", model.B, w))

    def left_rows(M, keep):
        lam, V = np.linalg.eig(M.T)
        big = np.abs(lam) > 1e-9 * np.abs(lam).max()
        return V[:, big & keep(lam.real)].real.T

    left = left_rows(lin(w_minus), lambda lr: lr < 0)
    right = left_rows(lin(w_plus), lambda lr: lr > 0)
    if len(left) + len(right) + Yp.shape[1] + 1 != n:
        raise ConvergenceError("endstate splitting does not close the boundary value problem")

    def fun(s, y):
        a, b = y[:n].T, y[n:].T
        fa = (a @ L0.T + apply_B(model, a, a)) @ Ainv.T
        fb = (b @ L0.T + apply_B(model, b, b)) @ Ainv.T
        return np.vstack([-fa.T, fb.T])

    def bc(ya, yb):
        return np.concatenate([
            ya[:n] - ya[n:],
            [coord @ ya[n:] - 0.5 * coord @ (u_minus + u_plus)],
            flux_row @ yb[:n] - flux_val,
            left @ (yb[:n] - w_minus),
            right @ (yb[n:] - w_plus),
        ])

    s = np.linspace(0.0, L, 1201)
    # rate of the tanh guess from the jump size; no expansion data enters
    rate = 4.0 / L * 8.0
    th = 0.5 * (1 + np.tanh(rate * s / 2))
    y0 = np.vstack([np.outer(w_minus, th) + np.outer(w_plus, 1 - th),
                    np.outer(w_minus, 1 - th) + np.outer(w_plus, th)])
    sol = solve_bvp(fun, bc, s, y0, tol=tol, max_nodes=400000)
    if not sol.success:
        raise ConvergenceError(f"full-system collocation failed: {sol.message}")
    c = m // 2
    out = np.empty((m, n))
    out[c:] = sol.sol(x[c:])[n:].T
    out[: c + 1] = sol.sol(-x[: c + 1])[:n].T
    return GridFunction(L, out)
