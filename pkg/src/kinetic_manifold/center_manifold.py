"""Center manifold of ``A w' = Q'(u_bar) w + B(w, w)``: Taylor and fixed-point.

Two independent constructions are provided.

* :func:`taylor_expand` solves the invariance equation order by order in the
  canonical coordinates ``(w_c, w_h)`` where the linear center flow is the
  nilpotent matrix ``J`` and the hyperbolic block is ``Gamma0 w_h' = E0 w_h``.
* :func:`picard_solve` iterates the integral equation with a smooth cutoff of
  the nonlinearity on a grid and reads off the graph at ``x = 0``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ClassificationError, ContractionError, DecompositionError, ModelError
from .grid import GridFunction, uniform_grid
from .linear import Decomposition, apply_K, apply_volterra, linear_center_solution
from .model import KineticModel, apply_B
from .polynomial import MonomialTable
from .weighted import WeightParams, SmoothMap, default_weights, derivative, norm_h1w, norm_z

__all__ = [
    "CanonicalFrame",
    "build_canonical",
    "fiber_maps",
    "CenterManifoldExpansion",
    "taylor_expand",
    "reduced_field",
    "normal_form",
    "fiber_field_coefficients",
    "cutoff",
    "cutoff_derivative",
    "cutoff_nonlinearity",
    "PicardConfig",
    "PicardResult",
    "picard_solve",
    "graph_Jc",
    "shifted_initial_value",
    "operator_constant",
]


# ---------------------------------------------------------------- canonical frame


@dataclass(frozen=True, eq=False)
class CanonicalFrame:
    """Linear change of variables ``x -> (w_c, w_h)``.

    ``forward`` and ``inverse`` act on ambient vectors.  ``w_c`` is ordered
    ``(w_c1, w_c2, w_c3)`` with sizes ``(r, r, p - r)``; ``w_h`` lives in V~.
    """

    dec: Decomposition
    forward: np.ndarray
    inverse: np.ndarray
    J: np.ndarray
    Gc: np.ndarray  # ambient f -> g_c
    Gh: np.ndarray  # ambient f -> g_h

    @property
    def dim_c(self) -> int:
        return self.dec.dim_c

    @property
    def recon_c(self) -> np.ndarray:
        return self.inverse[:, : self.dim_c]

    @property
    def recon_h(self) -> np.ndarray:
        return self.inverse[:, self.dim_c:]

    def split(self, x):
        y = np.asarray(x, float) @ self.forward.T
        return y[..., : self.dim_c], y[..., self.dim_c:]

    def join(self, w_c, w_h):
        return np.asarray(w_c) @ self.recon_c.T + np.asarray(w_h) @ self.recon_h.T

    def fiber_constants(self, q_c: np.ndarray) -> np.ndarray:
        """``(w_c2, w_c3)`` on the fiber with flux ``q`` (V_perp coordinates).

        The flux ``A11 u + A12 v`` and the ``V1`` component are first
        integrals; both are linear in the state, and so is this map.
        """
        dec = self.dec
        r, p = dec.r, dec.p
        q_c = np.asarray(q_c, float)
        v1 = np.linalg.solve(dec.T12_v1, q_c[:r])
        w_c2 = dec.center_slope @ v1
        At12 = dec.A_c[r:p, p:]
        vt_part = -dec.slave @ v1  # the center representative has vt = -slave v1
        ut = np.linalg.solve(dec.A11_im, q_c[r:] - At12[:, :r] @ v1 - At12[:, r:] @ vt_part) if p > r else np.zeros(0)
        # w_c3 = ut - ut_from_vt (vt + slave v1) and vt + slave v1 = 0 there
        return np.concatenate([w_c2, ut])


def fiber_maps(frame: CanonicalFrame, exp: "CenterManifoldExpansion", q_c):
    """Maps ``u1 -> u~`` and ``u1 -> v`` along the manifold fiber with flux ``q_c``.

    ``u1`` is the ``ker A11`` coordinate of the state (first ``r`` adapted
    coordinates, ``r = 1``); the fiber parameter ``w_c1`` is recovered by a
    scalar root solve, which is well posed because ``u1 - w_c1`` is quadratic.
    """
    dec = frame.dec
    if dec.r != 1:
        raise ClassificationError("fiber maps are defined for a one-dimensional kernel")
    consts = frame.fiber_constants(q_c)

    def state_c(w1):
        w_c = np.concatenate([[w1], consts])
        return dec.to_coords(frame.join(w_c, exp.graph(w_c)))

    def locate(u1):
        w1 = u1
        for _ in range(50):
            c = state_c(w1)
            step = c[0] - u1
            w1 -= step
            if abs(step) <= 1e-15 * max(1.0, abs(u1)):
                return state_c(w1)
        raise ModelError("fiber parametrization did not converge")

    def psi(u1):
        return locate(u1)[dec.sl_ut]

    def phi(u1):
        return locate(u1)[dec.sl_v]

    return psi, phi


def build_canonical(dec: Decomposition) -> CanonicalFrame:
    n, r, p, mt = dec.n, dec.r, dec.p, dec.mt
    su1, sut, sv1, svt = dec.sl_u1, dec.sl_ut, dec.sl_v1, dec.sl_vt
    F = np.zeros((n, n))
    row = 0
    F[row:row + r, su1] = np.eye(r)
    F[row:row + r, svt] = -dec.Gamma_prime
    row += r
    F[row:row + r, sv1] = dec.center_slope
    row += r
    F[row:row + p - r, sut] = np.eye(p - r)
    F[row:row + p - r, svt] = -dec.ut_from_vt
    F[row:row + p - r, sv1] = -dec.ut_from_vt @ dec.slave
    row += p - r
    F[row:, svt] = np.eye(mt)
    F[row:, sv1] = dec.slave
    cond = np.linalg.cond(F)
    if not np.isfinite(cond) or cond > 1e10:
        raise DecompositionError(f"canonical coordinate change is ill-conditioned (cond {cond:.2e})")
    if r:
        E11 = dec.E_c[:r, :r]
        E12 = dec.E_c[:r, r:]
        schur = E11 - E12 @ np.linalg.solve(dec.E0, E12.T)
        if np.linalg.eigvalsh(0.5 * (schur + schur.T))[-1] >= 0:
            raise DecompositionError("Schur complement of E is not negative definite")
    Finv = np.linalg.inv(F)
    d_c = p + r
    J = np.zeros((d_c, d_c))
    J[:r, r:2 * r] = np.eye(r)
    Gc = np.zeros((d_c, n))
    Gc[:r] = (dec.basis_inv @ dec.Gamma3)[su1]
    Gh = dec.basis_inv[svt]
    return CanonicalFrame(dec, F @ dec.basis_inv, dec.basis @ Finv, J, Gc, Gh)


# ---------------------------------------------------------------- Taylor expansion


@dataclass(frozen=True, eq=False)
class CenterManifoldExpansion:
    """Polynomial graph ``w_h = Xi(w_c)`` and the reduced field, degrees up to ``order``."""

    order: int
    table: MonomialTable
    xi: np.ndarray  # (N, mt)
    field: np.ndarray  # (N, d_c): J w_c + g_c(w_c, Xi(w_c)), truncated
    residual: float  # largest coefficient of the invariance residual up to ``order``

    @property
    def dim_c(self) -> int:
        return self.table.d

    def graph(self, w_c) -> np.ndarray:
        return self.table.evaluate(self.xi, w_c)

    def terms(self):
        out = []
        for t in range(self.xi.shape[1]):
            for a, e in enumerate(self.table.exponents):
                if self.table.degree[a] >= 2:
                    out.append({"target_index": t, "multi_index": list(e), "coeff": float(self.xi[a, t])})
        return out

    def to_json(self) -> str:
        return json.dumps({"order": self.order, "dim_c": self.dim_c, "terms": self.terms()}, indent=1)


def _nonlinear_terms(frame: CanonicalFrame, table: MonomialTable, xi: np.ndarray):
    X = table.linear(frame.recon_c) + xi @ frame.recon_h.T
    f = table.bilinear(frame.dec.model.B, X, X)
    return f @ frame.Gc.T, f @ frame.Gh.T


def taylor_expand(dec: Decomposition, model: KineticModel | None = None, k: int = 3,
                  frame: CanonicalFrame | None = None, blowup: float = 1e12) -> CenterManifoldExpansion:
    if not 2 <= k <= 6:
        raise ModelError("expansion order must be between 2 and 6")
    frame = frame or build_canonical(dec)
    d_c, mt = dec.dim_c, dec.mt
    tab = MonomialTable(d_c, k)
    xi = tab.zeros(mt)
    Jfield = tab.linear(frame.J)
    E0inv = np.linalg.inv(dec.E0)
    G0 = dec.Gamma0
    for deg in range(2, k + 1):
        mask = tab.degree_mask(deg)
        gc, gh = _nonlinear_terms(frame, tab, xi)
        rhs = tab.directional(xi, gc) @ G0.T - gh
        rhs[~mask] = 0.0
        part = np.zeros_like(xi)
        for _ in range(deg + 2):
            shifted = tab.directional(part, Jfield) @ G0.T
            part = (shifted + rhs) @ E0inv.T
            part[~mask] = 0.0
        xi = xi + part
        if np.abs(xi).max(initial=0.0) > blowup:
            raise DecompositionError(f"Taylor coefficients blew up at degree {deg}")
    gc, gh = _nonlinear_terms(frame, tab, xi)
    field_poly = Jfield + gc
    res = tab.directional(xi, field_poly) @ G0.T - xi @ dec.E0.T - gh
    return CenterManifoldExpansion(k, tab, xi, field_poly, float(np.abs(res).max(initial=0.0)))


def invariance_residual(exp: CenterManifoldExpansion, frame: CanonicalFrame, w_c) -> np.ndarray:
    """Pointwise residual of ``Gamma0 Xi'(w_c) v_c - E0 Xi(w_c) - g_h`` with exact ``g``."""
    dec = frame.dec
    tab = exp.table
    w_c = np.atleast_2d(w_c)
    vel = reduced_field(exp, frame, w_c)
    xi = exp.graph(w_c)
    x = frame.join(w_c, xi)
    f = apply_B(dec.model, x, x)
    mono_d = [tab.monomials(w_c) @ tab.partial(exp.xi, i) for i in range(tab.d)]
    dxi = sum(mono_d[i] * vel[:, i:i + 1] for i in range(tab.d))
    return dxi @ dec.Gamma0.T - xi @ dec.E0.T - f @ frame.Gh.T


def reduced_field(exp: CenterManifoldExpansion, frame: CanonicalFrame, w_c) -> np.ndarray:
    """``J w_c + g_c(w_c, Xi(w_c))`` with the nonlinearity evaluated exactly."""
    w_c = np.asarray(w_c, float)
    x = frame.join(w_c, exp.graph(w_c))
    f = apply_B(frame.dec.model, x, x)
    return w_c @ frame.J.T + f @ frame.Gc.T


def fiber_field_coefficients(dec: Decomposition, model: KineticModel | None = None,
                             degrees=(2, 3)) -> float:
    """Largest reduced-field coefficient of pure ``w_c1`` monomials of the given degrees."""
    exp = taylor_expand(dec, model, k=max(degrees))
    tab = exp.table
    r = dec.r
    pure = np.array([all(v == 0 for v in e[r:]) for e in tab.exponents])
    sel = pure & tab.degree_mask(degrees)
    return float(np.abs(exp.field[sel, :r]).max(initial=0.0))


def normal_form(exp: CenterManifoldExpansion, frame: CanonicalFrame, cls) -> dict:
    """Quadratic coefficient ``chi`` of the fiber flow and the check against ``Lambda``."""
    if cls.case == "Noncharacteristic" or frame.dec.r == 0:
        raise ClassificationError("normal form needs a characteristic field")
    tab = exp.table
    r = frame.dec.r
    d = tab.d
    chi = np.zeros((r, r, r))
    for i in range(r):
        for j in range(i, r):
            e = [0] * d
            e[i] += 1
            e[j] += 1
            coeff = exp.field[tab.index[tuple(e)], :r]
            if i == j:
                chi[:, i, i] = coeff
            else:
                chi[:, i, j] = chi[:, j, i] = coeff / 2
    kappa = np.atleast_2d(cls.kappa)
    out = {"kappa": kappa.squeeze(), "chi": chi.squeeze()}
    if r == 1:
        k_, c_ = float(kappa[0, 0]), float(chi[0, 0, 0])
        half = cls.Lambda / 2
        out["kappa_chi"] = k_ * c_
        out["deviation"] = abs(k_ * c_ - half) / abs(half) if half != 0 else abs(k_ * c_)
    else:
        out["kappa_chi"] = np.einsum("ab,bij->aij", kappa, chi)
        out["deviation"] = float(np.abs(out["kappa_chi"]).max())
    return out


# ---------------------------------------------------------------- cutoff


def _sigma(t):
    t = np.asarray(t, float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _dsigma(t):
    t = np.asarray(t, float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos]) / t[pos] ** 2
    return out


def cutoff(s):
    """Smooth bump: 1 on ``[-1, 1]``, 0 outside ``[-2, 2]``."""
    s = np.abs(np.asarray(s, float))
    a, b = _sigma(2.0 - s), _sigma(s - 1.0)
    return a / (a + b)


def cutoff_derivative(s):
    s_arr = np.asarray(s, float)
    sg = np.sign(s_arr)
    s = np.abs(s_arr)
    a, b = _sigma(2.0 - s), _sigma(s - 1.0)
    da, db = -_dsigma(2.0 - s), _dsigma(s - 1.0)
    return sg * (da * b - a * db) / (a + b) ** 2


def cutoff_nonlinearity(model: KineticModel, eps: float) -> SmoothMap:
    """``h -> rho(|h|^2 / eps^2) B(h, h)`` and its derivative, nodewise."""
    G = model.gram

    def value(W):
        s = np.einsum("ij,jk,ik->i", W, G, W) / eps**2
        return cutoff(s)[:, None] * apply_B(model, W, W)

    def deriv(W, D):
        s = np.einsum("ij,jk,ik->i", W, G, W) / eps**2
        ip = np.einsum("ij,jk,ik->i", W, G, D)
        return ((2.0 / eps**2) * cutoff_derivative(s) * ip)[:, None] * apply_B(model, W, W) \
            + 2.0 * cutoff(s)[:, None] * apply_B(model, W, D)

    return SmoothMap(value, deriv)


# ---------------------------------------------------------------- Picard solver


@dataclass(frozen=True)
class PicardConfig:
    eps0: float
    eps1: float
    delta: float
    weights: WeightParams | None = None
    L: float | None = None
    m: int = 2049
    max_iter: int = 200
    tol_fixpoint: float = 1e-14
    enforce: bool = False

    def resolved(self, nu: float) -> "PicardConfig":
        w = self.weights or default_weights(nu)
        L = self.L or 20.0 / nu
        return PicardConfig(self.eps0, self.eps1, self.delta, w, L, self.m,
                            self.max_iter, self.tol_fixpoint, self.enforce)

    def smallness(self, c: float) -> dict:
        return {
            "c": c,
            "c_eps0": c * self.eps0,
            "c_eps1_over_delta": c * self.eps1 / self.delta,
            "c_delta": c * self.delta,
            "holds": bool(c * self.eps0 < 0.25 and c * self.eps1 < self.delta / 2 and c * self.delta < 0.25),
        }


@dataclass(frozen=True, eq=False)
class PicardResult:
    solution: GridFunction
    w0: np.ndarray
    iterations: int
    ratios: np.ndarray
    residual: float
    forcing: GridFunction  # N(w) at the fixed point
    config: PicardConfig
    diagnostics: dict = field(default_factory=dict)


def operator_constant(dec: Decomposition, cfg: PicardConfig, n_probe: int = 6, seed: int = 0) -> float:
    """Empirical bound ``c`` for ``|K N(w1) - K N(w2)|_Z <= c eps |w1 - w2|_Z``.

    ``|K|_Z`` is estimated from smooth random probes, the nonlinearity from the
    closed-form derivative bound of the cutoff.
    """
    cfg = cfg.resolved(dec.nu)
    rng = np.random.default_rng(seed)
    x = uniform_grid(cfg.L, cfg.m)
    G = dec.model.gram
    best = 0.0
    for _ in range(n_probe):
        freq = rng.uniform(0, 1.0, 3)
        amp = rng.standard_normal((3, dec.n))
        vals = sum(np.cos(freq[i] * x + i)[:, None] * amp[i] for i in range(3))
        f = GridFunction(cfg.L, vals).map(dec.P_V)
        ratio = norm_z(apply_K(dec, f), cfg.weights, G) / norm_z(f, cfg.weights, G)
        best = max(best, ratio)
    s = np.linspace(1.0, 2.0, 401)
    rho_p = np.abs(cutoff_derivative(s)).max()
    Bn = np.linalg.norm(dec.model.B.reshape(dec.n, -1), 2)
    lip = (2 * 2**1.5 * rho_p + 2 * np.sqrt(2)) * Bn
    return float(best * lip)


def picard_solve(dec: Decomposition, model: KineticModel | None, w0, cfg: PicardConfig) -> PicardResult:
    """Fixed point of ``w = w0 + f_c(., w0) + K[rho(|w|^2/eps0^2) B(w, w)]`` from ``w = 0``."""
    model = model or dec.model
    cfg = cfg.resolved(dec.nu)
    w0 = np.asarray(w0, float)
    if model.norm(w0) > cfg.eps1 * (1 + 1e-12):
        raise ModelError(f"|w0| = {model.norm(w0):.3g} exceeds eps1 = {cfg.eps1:.3g}")
    diag = {}
    if cfg.enforce:
        c = operator_constant(dec, cfg)
        diag["smallness"] = cfg.smallness(c)
        if not diag["smallness"]["holds"]:
            raise ContractionError(f"smallness conditions fail with measured constant c = {c:.3g}")
    x = uniform_grid(cfg.L, cfg.m)
    base = GridFunction(cfg.L, linear_center_solution(dec, w0, x))
    N = cutoff_nonlinearity(model, cfg.eps0)
    G = model.gram
    w = GridFunction.constant(cfg.L, cfg.m, np.zeros(dec.n))
    ratios = []
    prev = None
    it = 0
    for it in range(1, cfg.max_iter + 1):
        w_new = base + apply_K(dec, GridFunction(cfg.L, N.value(w.values)))
        diff = norm_z(w_new - w, cfg.weights, G)
        scale = norm_z(w_new, cfg.weights, G)
        if prev is not None and prev > 1e3 * np.finfo(float).eps * max(scale, 1e-300):
            ratios.append(diff / prev)
            if ratios[-1] > 0.9 and diff > 1e4 * np.finfo(float).eps * scale:
                raise ContractionError(f"observed contraction ratio {ratios[-1]:.3f} > 0.9")
        w = w_new
        if diff <= cfg.tol_fixpoint * max(scale, 1e-300) or diff == 0.0:
            break
        prev = diff
    forcing = GridFunction(cfg.L, N.value(w.values))
    dw = derivative(w)
    res = dw.values @ model.A.T - w.values @ model.dQ_matrix().T - forcing.values
    band = np.abs(x) <= cfg.L - 10 * w.h
    residual = float(np.abs(res[band]).max())
    diag["h1_alpha_norm"] = norm_h1w(w, cfg.weights.alpha, G)
    diag["sup_norm"] = float(model.norm(w.values).max())
    return PicardResult(w, w0, it, np.array(ratios), residual, forcing, cfg, diag)


def graph_Jc(dec: Decomposition, solution) -> np.ndarray:
    """Hyperbolic part ``(I - P_c) w(0)`` of a fixed-point solution."""
    sol = solution.solution if isinstance(solution, PicardResult) else solution
    w = sol.at_zero()
    return w - dec.P_c @ w


def shifted_initial_value(dec: Decomposition, result: PicardResult, shift_nodes: int) -> np.ndarray:
    """Center datum of the solution translated by ``shift_nodes`` grid steps."""
    sol = result.solution
    x0 = shift_nodes * sol.h
    vf = apply_volterra(result.forcing).values[sol.center + shift_nodes]
    return result.w0 + x0 * (dec.slope @ result.w0) + dec.Gamma3 @ vf
