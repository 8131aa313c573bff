"""Linear structure of ``A w' = Q'(u_bar) w + f``.

The state space is split into the equilibrium tangent space (kernel of the
linearized collision operator) and its complement, each of which is split
again according to the kernel of the flux block ``A11`` and of the coupling
``T12``.  In the adapted, metric-orthonormal coordinates

    (u1, ut, v1, vt) = (ker A11, im A11, V1, V~)

every operator used by the fixed-point solver is an explicit block matrix.
Public functions take and return ambient coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.integrate import quad

from .errors import DecompositionError, HypothesisError, ModelError
from .grid import GridFunction
from .model import KineticModel, verify_hypotheses
from .quadrature import cumulative_from_center, decaying_convolution

__all__ = [
    "Decomposition",
    "build_decomposition",
    "trichotomy_project",
    "linear_center_solution",
    "green_apply",
    "apply_K0",
    "apply_volterra",
    "apply_K",
    "solve_inhomogeneous",
    "resolvent_norm",
    "exp_convolution_closed_form",
    "exp_convolution_quadrature",
]


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Derived linear data of a model.

    Matrices whose name ends in ``_c`` act on adapted coordinates; the others
    act on ambient vectors.  ``basis`` holds the adapted basis as columns, so
    ``x = basis @ c`` and ``c = basis_inv @ x``.
    """

    model: KineticModel
    basis: np.ndarray
    basis_inv: np.ndarray
    r: int  # dim ker A11
    p: int  # dim V_perp
    # blocks (adapted coordinates)
    A_c: np.ndarray
    E_c: np.ndarray  # Q'(u_bar) on V, in (v1, vt) coordinates
    A11_im: np.ndarray  # A11 restricted to im A11 (diagonal)
    T12_v1: np.ndarray  # T12 restricted to V1, r x r
    Gamma0: np.ndarray
    E0: np.ndarray
    Gamma1: np.ndarray  # r x (n - p), acts on V coordinates
    E1: np.ndarray  # r x (n - p)
    Gamma_prime: np.ndarray  # Gamma1 + E1 E0^{-1} Gamma0 on V~, r x mt
    slave: np.ndarray  # E0^{-1} P_V~ E on V1, mt x r
    center_slope: np.ndarray  # E1 (I - E0^{-1} P_V~ E) on V1, r x r
    ut_from_vt: np.ndarray  # -A11~^{-1} A12~ on V~, (p - r) x mt
    # hyperbolic data of S = Gamma0^{-1} E0
    rates: np.ndarray  # eigenvalues of S, sorted
    modes: np.ndarray  # eigenvectors, X^T (-E0) X = I
    nu: float
    delta: float
    # ambient operators
    P_c: np.ndarray
    P_s: np.ndarray
    P_u: np.ndarray
    H_c: np.ndarray
    H_s: np.ndarray
    H_u: np.ndarray
    Gamma3: np.ndarray
    Gamma4: np.ndarray
    slope: np.ndarray  # w0 -> d/dx of the linear center solution

    # --- index helpers
    @property
    def n(self) -> int:
        return self.model.dim

    @property
    def mt(self) -> int:
        return self.n - self.p - self.r

    @property
    def sl_u1(self):
        return slice(0, self.r)

    @property
    def sl_ut(self):
        return slice(self.r, self.p)

    @property
    def sl_v1(self):
        return slice(self.p, self.p + self.r)

    @property
    def sl_vt(self):
        return slice(self.p + self.r, self.n)

    @property
    def sl_perp(self):
        return slice(0, self.p)

    @property
    def sl_v(self):
        return slice(self.p, self.n)

    def projector(self, block: slice) -> np.ndarray:
        return self.basis[:, block] @ self.basis_inv[block, :]

    @property
    def P_perp(self):
        return self.projector(self.sl_perp)

    @property
    def P_V(self):
        return self.projector(self.sl_v)

    @property
    def P_kerA11(self):
        return self.projector(self.sl_u1)

    @property
    def P_imA11(self):
        return self.projector(self.sl_ut)

    @property
    def P_V1(self):
        return self.projector(self.sl_v1)

    @property
    def P_Vt(self):
        return self.projector(self.sl_vt)

    @property
    def dim_c(self) -> int:
        return self.p + self.r

    @property
    def stable(self) -> np.ndarray:
        return self.rates < 0

    def to_coords(self, x) -> np.ndarray:
        return np.asarray(x, float) @ self.basis_inv.T

    def from_coords(self, c) -> np.ndarray:
        return np.asarray(c, float) @ self.basis.T

    def hyperbolic_embed_c(self, h) -> np.ndarray:
        """Adapted coordinates of the hyperbolic vector with V~-part ``h``."""
        h = np.asarray(h, float)
        out = np.zeros(h.shape[:-1] + (self.n,))
        out[..., self.sl_u1] = h @ self.Gamma_prime.T
        out[..., self.sl_ut] = h @ self.ut_from_vt.T
        out[..., self.sl_vt] = h
        return out

    def hyperbolic_part_c(self, c) -> np.ndarray:
        """The V~-coordinate ``vt + E0^{-1} P_V~ E v1`` of ``(I - P_c)``."""
        c = np.asarray(c, float)
        return c[..., self.sl_vt] + c[..., self.sl_v1] @ self.slave.T

    def spectral_projector_c(self, stable: bool) -> np.ndarray:
        X = self.modes[:, self.stable if stable else ~self.stable]
        return X @ X.T @ (-self.E0)

    def summary(self) -> dict:
        return {
            "n": self.n,
            "dim_v_perp": self.p,
            "dim_ker_A11": self.r,
            "dim_V1": self.r,
            "dim_V_tilde": self.mt,
            "dim_H_c": self.dim_c,
            "dim_H_s": int(self.stable.sum()),
            "dim_H_u": int((~self.stable).sum()),
            "nu": self.nu,
            "delta": self.delta,
            "rates": self.rates.tolist(),
        }


def _sym(M):
    return 0.5 * (M + M.T)


def build_decomposition(model: KineticModel, tol: float = 1e-8, rank_tol: float = 1e-9) -> Decomposition:
    report = verify_hypotheses(model, tol)
    if not report.passed:
        raise HypothesisError("model fails hypotheses: " + ", ".join(report.tags))
    n = model.dim
    T, Ti = model.to_ortho, model.from_ortho
    A = _sym(T @ model.A @ Ti)
    Lq = _sym(T @ model.dQ_matrix() @ Ti)
    normA = np.linalg.norm(A, 2)
    thr = rank_tol * normA

    Y = sla.orth(T @ model.v_perp_basis.T)
    p = Y.shape[1]
    Z = sla.null_space(Y.T)
    mu, W = np.linalg.eigh(Y.T @ A @ Y)
    amb = (np.abs(mu) > thr / 10) & (np.abs(mu) < thr * 10)
    if amb.any():
        raise DecompositionError(f"ambiguous kernel of A11: eigenvalue {mu[amb][0]:.3e} near threshold {thr:.1e}")
    ker = np.abs(mu) <= thr / 10
    r = int(ker.sum())
    Kb, Ib = Y @ W[:, ker], Y @ W[:, ~ker]
    A11_im = np.diag(mu[~ker])

    A12 = np.concatenate([Kb, Ib], axis=1).T @ A @ Z
    T12 = A12[:r]
    _, sv, Vh = np.linalg.svd(T12) if r else (None, np.zeros(0), np.eye(Z.shape[1]))
    if r:
        if sv.min() <= 10 * thr:
            raise DecompositionError("T12* is not injective on ker A11")
        if len(sv) < r:
            raise DecompositionError("dim V is too small for the kernel of A11")
    V1b, Vtb = Z @ Vh[:r].T, Z @ Vh[r:].T
    U = np.concatenate([Kb, Ib, V1b, Vtb], axis=1)
    basis = Ti @ U
    basis_inv = U.T @ T

    A_c = _sym(U.T @ A @ U)
    E_c = _sym(U.T @ Lq @ U)[p:, p:]
    mt = n - p - r
    su1, sut, sv1, svt = slice(0, r), slice(r, p), slice(p, p + r), slice(p + r, n)
    iv1, ivt = slice(0, r), slice(r, n - p)  # within V coordinates

    At12 = A_c[sut, p:]
    A22 = A_c[p:, p:]
    schur_A = A22 - At12.T @ np.linalg.solve(A11_im, At12) if p > r else A22.copy()
    Gamma0 = _sym(schur_A[ivt, ivt])
    E0 = _sym(E_c[ivt, ivt])
    T12_v1 = A_c[su1, sv1]
    T12s_inv = np.linalg.inv(T12_v1.T) if r else np.zeros((0, 0))
    Gamma1 = -T12s_inv @ schur_A[iv1, :]
    E1 = T12s_inv @ E_c[iv1, :]
    E0_inv = np.linalg.inv(E0)
    Gamma_prime = Gamma1[:, ivt] + E1[:, ivt] @ E0_inv @ Gamma0
    slave = E0_inv @ E_c[ivt, iv1]
    center_slope = E1[:, iv1] - E1[:, ivt] @ slave
    ut_from_vt = -np.linalg.solve(A11_im, At12[:, ivt]) if p > r else np.zeros((0, mt))

    if np.linalg.svd(Gamma0, compute_uv=False)[-1] <= 1e-12 * normA:
        raise DecompositionError("Gamma0 is singular")
    if np.linalg.eigvalsh(E0)[-1] >= 0:
        raise DecompositionError("E0 is not negative definite")
    delta = float(-np.linalg.eigvalsh(E_c)[-1])

    m_eig, X = sla.eigh(Gamma0, -E0)
    rates = -1.0 / m_eig
    order = np.argsort(rates)
    rates, X = rates[order], X[:, order]
    nu = float(np.abs(rates).min())

    def embed(h):
        out = np.zeros((h.shape[0], n))
        out[:, su1] = h @ Gamma_prime.T
        out[:, sut] = h @ ut_from_vt.T
        out[:, svt] = h
        return out

    # center projection in coordinates (acts on column vectors)
    Pc_c = np.eye(n)
    hyp = np.zeros((mt, n))
    hyp[:, svt] = np.eye(mt)
    hyp[:, sv1] = slave
    Pc_c -= embed(np.eye(mt)).T @ hyp
    Ps_t = X[:, rates < 0] @ X[:, rates < 0].T @ (-E0)
    Pu_t = X[:, rates > 0] @ X[:, rates > 0].T @ (-E0)
    Ps_c = embed(np.eye(mt)).T @ Ps_t @ hyp
    Pu_c = embed(np.eye(mt)).T @ Pu_t @ hyp

    Hc_c = np.zeros((n, p + r))
    Hc_c[:p, :p] = np.eye(p)
    Hc_c[sv1, p:] = np.eye(r)
    Hc_c[svt, p:] = -slave
    Hs_c = embed(X[:, rates < 0].T).T
    Hu_c = embed(X[:, rates > 0].T).T

    G3_c = np.zeros((n, n))
    G3_c[su1, sv1] = T12s_inv
    G3_c[su1, svt] = -E1[:, ivt] @ E0_inv
    G4_c = np.zeros((n, n))
    G4_c[:, svt] = embed(np.eye(mt)).T
    slope_c = np.zeros((n, n))
    slope_c[su1, sv1] = center_slope

    def amb(M):
        return basis @ M @ basis_inv

    return Decomposition(
        model=model, basis=basis, basis_inv=basis_inv, r=r, p=p,
        A_c=A_c, E_c=E_c, A11_im=A11_im, T12_v1=T12_v1,
        Gamma0=Gamma0, E0=E0, Gamma1=Gamma1, E1=E1,
        Gamma_prime=Gamma_prime, slave=slave, center_slope=center_slope, ut_from_vt=ut_from_vt,
        rates=rates, modes=X, nu=nu, delta=delta,
        P_c=amb(Pc_c), P_s=amb(Ps_c), P_u=amb(Pu_c),
        H_c=basis @ Hc_c, H_s=basis @ Hs_c, H_u=basis @ Hu_c,
        Gamma3=amb(G3_c), Gamma4=amb(G4_c), slope=amb(slope_c),
    )


# ---------------------------------------------------------------- pointwise maps


def trichotomy_project(dec: Decomposition, w):
    """Split ``w`` into its center, stable and unstable components."""
    w = np.asarray(w, float)
    return w @ dec.P_c.T, w @ dec.P_s.T, w @ dec.P_u.T


def _check_center(dec: Decomposition, w0, tol=1e-9):
    w0 = np.asarray(w0, float)
    if w0.shape[-1] != dec.n:
        raise ModelError("state vector has wrong length")
    res = np.linalg.norm(w0 @ dec.P_c.T - w0)
    if res > tol * max(1.0, np.linalg.norm(w0)):
        raise ModelError(f"initial value is not in the center subspace (residual {res:.2e})")
    return w0


def linear_center_solution(dec: Decomposition, w0, x):
    """Solution through ``w0`` of the linear system restricted to ``H_c``; affine in ``x``."""
    w0 = _check_center(dec, w0)
    x = np.asarray(x, float)
    return w0 + np.multiply.outer(x, dec.slope @ w0)


def green_apply(dec: Decomposition, x: float, v):
    """Green kernel of ``Gamma0 v' = E0 v`` on V~ applied to an ambient vector."""
    c = np.asarray(v, float) @ dec.basis_inv[dec.sl_vt].T
    X = dec.modes
    a = X.T @ (-dec.E0) @ c
    if x >= 0:
        mask = dec.rates < 0
        factor = np.where(mask, np.exp(dec.rates * x), 0.0)
    else:
        mask = dec.rates > 0
        factor = np.where(mask, -np.exp(dec.rates * x), 0.0)
    return dec.basis[:, dec.sl_vt] @ (X @ (factor * a))


def resolvent_norm(dec: Decomposition, omega) -> np.ndarray:
    """Spectral norm of ``(2 pi i omega Gamma0 - E0)^{-1}`` at each sample."""
    out = []
    for w in np.atleast_1d(omega):
        M = 2j * np.pi * w * dec.Gamma0 - dec.E0
        out.append(1.0 / np.linalg.svd(M, compute_uv=False)[-1])
    return np.array(out)


# ---------------------------------------------------------------- grid operators


def apply_K0(dec: Decomposition, g: GridFunction) -> GridFunction:
    """Bounded solution of ``Gamma0 v' = E0 v + g`` on V~.

    Each eigenmode of ``S = Gamma0^{-1} E0`` is integrated against its
    exponential kernel from the upwind side; outside the grid ``g`` is taken
    constant.
    """
    gt = g.values @ dec.basis_inv[dec.sl_vt].T
    coef = (gt @ dec.modes) * (-dec.rates)
    sol = np.empty_like(coef)
    for j, lam in enumerate(dec.rates):
        sol[:, j] = decaying_convolution(coef[:, j], lam, g.h)
    return GridFunction(g.L, (sol @ dec.modes.T) @ dec.basis[:, dec.sl_vt].T)


def apply_volterra(g: GridFunction) -> GridFunction:
    """``x -> int_0^x g``."""
    return GridFunction(g.L, cumulative_from_center(g.values, g.h))


def apply_K(dec: Decomposition, f: GridFunction) -> GridFunction:
    volt = apply_volterra(f.map(dec.Gamma3))
    hyp = apply_K0(dec, f.map(dec.P_Vt)).map(dec.Gamma4)
    return volt + hyp


def solve_inhomogeneous(dec: Decomposition, w0, f: GridFunction) -> GridFunction:
    """Solution of ``A u' = Q'(u_bar) u + f`` with center component ``w0`` at 0."""
    w0 = _check_center(dec, w0)
    base = GridFunction(f.L, linear_center_solution(dec, w0, f.x))
    return base + apply_K(dec, f)


# ---------------------------------------------------------------- scalar identities


def exp_convolution_closed_form(alpha: float, nu: float, x) -> np.ndarray:
    """Closed form of ``exp(-2 alpha |.|) * exp(-(nu + alpha) |.|)``."""
    x = np.abs(np.asarray(x, float))
    s = nu + alpha
    d = s * s - 4 * alpha * alpha
    return (2 * s / d) * np.exp(-2 * alpha * x) - (4 * alpha / d) * np.exp(-s * x)


def exp_convolution_quadrature(alpha: float, nu: float, x) -> np.ndarray:
    out = []
    for xx in np.atleast_1d(np.asarray(x, float)):
        def f(y, xx=xx):
            return np.exp(-2 * alpha * abs(xx - y) - (nu + alpha) * abs(y))
        pts = sorted({0.0, xx})
        edges = [-np.inf, *pts, np.inf]
        out.append(sum(quad(f, a, b, epsabs=1e-14, epsrel=1e-13)[0] for a, b in zip(edges[:-1], edges[1:])))
    return np.array(out)
