"""Small-amplitude standing shocks: relaxation, viscous (second-order) and Burgers.

All ``u`` arrays are coordinates in the orthonormal basis of V_perp used by
:class:`~kinetic_manifold.linear.Decomposition`; the first coordinate is the
component along ``r_bar``.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_bvp, solve_ivp
from scipy.optimize import brentq

from .center_manifold import build_canonical, reduced_field, taylor_expand
from .chapman_enskog import ce_data, char_speed, classify, rankine_hugoniot
from .errors import ClassificationError, ConvergenceError, ProfileError
from .grid import GridFunction, uniform_grid
from .model import KineticModel
from .weighted import derivative, fit_slope

__all__ = [
    "ProfileConfig",
    "Profile",
    "burgers_exact",
    "relaxation_profile",
    "ce2_profile",
    "burgers_profile",
    "compare_profiles",
    "ldg_fiber_check",
    "epsilon_sweep",
    "profile_half_width",
]


@dataclass(frozen=True)
class ProfileConfig:
    order: int = 3
    m: int = 4001
    width: float = 16.0  # half-width in units of the Burgers length kappa / (|Lambda| eps)
    L: float | None = None
    rtol: float = 1e-10
    bvp_tol: float = 1e-9


@dataclass(frozen=True, eq=False)
class Profile:
    """A computed standing profile.

    ``grid`` holds the full ambient state (relaxation), the V_perp coordinates
    (CE2) or the scalar ``u1`` (Burgers).  ``u`` always holds V_perp
    coordinates, ``lam`` the characteristic speed along the profile.
    """

    kind: str
    grid: GridFunction
    eps: float
    q: np.ndarray
    u_minus: np.ndarray
    u_plus: np.ndarray
    u: np.ndarray
    lam: np.ndarray | None = None
    metrics: dict = field(default_factory=dict)

    @property
    def x(self):
        return self.grid.x

    @property
    def u1(self):
        return self.u[:, 0]

    def to_csv(self) -> str:
        lam = self.lam if self.lam is not None else np.full(self.grid.m, np.nan)
        cols = ["x", "u1", "lambda"] + [f"w_{i + 1}" for i in range(self.grid.n)]
        data = np.column_stack([self.x, self.u1, lam, self.grid.values])
        lines = [", ".join(cols)]
        lines += [", ".join(repr(float(v)) for v in row) for row in data]
        return "\n".join(lines) + "\n"


def burgers_exact(eps, Lambda, kappa, x):
    """Standing Burgers shock ``-eps tanh(Lambda eps x / (2 kappa))``."""
    if kappa <= 0:
        raise ProfileError("kappa must be positive")
    if Lambda == 0:
        raise ProfileError("Lambda must be nonzero")
    return -eps * np.tanh(Lambda * eps * np.asarray(x, float) / (2.0 * kappa))


def profile_half_width(cls, eps: float, cfg: ProfileConfig) -> float:
    if cfg.L is not None:
        return cfg.L
    return cfg.width * float(np.atleast_2d(cls.kappa)[0, 0]) / (abs(cls.Lambda) * eps)


def _gnl(model):
    cls = classify(model)
    if cls.case != "SimpleGNL":
        raise ClassificationError(f"profiles need a simple genuinely nonlinear model, got {cls.case}")
    return cls


def _rh_coords(model, eps, cls):
    dec = ce_data(model).dec
    um, up, q = rankine_hugoniot(model, eps, cls)
    to = lambda v: dec.to_coords(v)[: dec.p]  # noqa: E731
    return to(um), to(up), to(q)


def _bracket_zero(fn, a, b, target, n=128):
    """Zero of ``fn`` on ``[a, b]`` closest to ``target``."""
    s = np.linspace(a, b, n + 1)
    v = np.array([fn(t) for t in s])
    k = np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) <= 0)[0]
    if not len(k):
        raise ProfileError("reduced field has no zero near the expected endstate")
    i = k[np.argmin(np.abs(s[k] - target))]
    if v[i] == 0:
        return s[i]
    return brentq(fn, s[i], s[i + 1], xtol=1e-16, rtol=4 * np.finfo(float).eps)


def _integrate_from_center(rhs, y0, x, rtol):
    """Integrate ``y' = rhs(y)`` from ``x = 0`` to both ends of a symmetric grid."""
    c = len(x) // 2
    out = np.empty((len(x),) + np.shape(y0))
    out[c] = y0
    atol = 1e-15 * max(1.0, float(np.abs(y0).max()))
    for sl, end in ((slice(c, None), x[-1]), (slice(c, None, -1), x[0])):
        xs = x[sl]
        sol = solve_ivp(lambda t, y: rhs(y), (0.0, end), np.atleast_1d(y0), method="DOP853",
                        t_eval=xs, rtol=rtol, atol=atol)
        if not sol.success:
            raise ProfileError(f"profile integration failed: {sol.message}")
        out[sl] = sol.y.T.reshape((len(xs),) + np.shape(y0))
    return out


def relaxation_profile(model: KineticModel, eps: float, cfg: ProfileConfig | None = None) -> Profile:
    """Shock of the full system via the reduced flow on one fiber of the center manifold."""
    cfg = cfg or ProfileConfig()
    cls = _gnl(model)
    if eps <= 0:
        raise ProfileError("eps must be positive")
    d = ce_data(model)
    dec = d.dec
    frame = build_canonical(dec)
    exp = taylor_expand(dec, model, k=cfg.order, frame=frame)
    p = dec.p
    q = np.zeros(p)
    q[0] = cls.Lambda * eps**2 / 2
    consts = frame.fiber_constants(q)

    def wc(w1):
        w1 = np.atleast_1d(np.asarray(w1, float))
        return np.column_stack([w1, np.broadcast_to(consts, (len(w1), len(consts)))])

    def state(w1):
        c = wc(w1)
        return frame.join(c, exp.graph(c))

    def phi(w1):
        return reduced_field(exp, frame, wc(w1))[:, 0]

    def u1_of(w1):
        return dec.to_coords(state(w1))[:, 0]

    sg = np.sign(cls.Lambda)
    w_minus = _bracket_zero(lambda t: phi(t)[0], sg * 0.2 * eps, sg * 3.0 * eps, sg * eps)
    w_plus = _bracket_zero(lambda t: phi(t)[0], -sg * 0.2 * eps, -sg * 3.0 * eps, -sg * eps)
    mid_val = phi(0.5 * (w_minus + w_plus))[0]
    if np.sign(mid_val) != np.sign(w_plus - w_minus):
        raise ProfileError("reduced flow does not connect the endstates")
    mid = 0.5 * (u1_of(w_minus)[0] + u1_of(w_plus)[0])
    s0 = brentq(lambda t: u1_of(t)[0] - mid, w_minus, w_plus, xtol=1e-16, rtol=4 * np.finfo(float).eps)

    L = profile_half_width(cls, eps, cfg)
    x = uniform_grid(L, cfg.m)
    w1 = _integrate_from_center(phi, np.array([s0]), x, cfg.rtol)[:, 0]
    X = state(w1)
    coords = dec.to_coords(X)
    u = coords[:, :p]
    lam = char_speed(model, u)
    u_minus = dec.to_coords(state(w_minus))[0, :p]
    u_plus = dec.to_coords(state(w_plus))[0, :p]
    flux_drift = float(np.abs(coords @ dec.A_c[:p].T - q).max())
    dl = np.diff(lam)
    metrics = {
        "order": cfg.order,
        "L": L,
        "m": cfg.m,
        "lambda_monotone": bool(np.all(dl < 0)),
        "lambda_max_step": float(dl.max()),
        "lambda_center_slope": float(-derivative(GridFunction(L, lam[:, None])).values[len(x) // 2, 0]),
        "flux_drift": flux_drift,
        "expansion_residual": exp.residual,
    }
    return Profile("Relaxation", GridFunction(L, X), eps, q, u_minus, u_plus, u, lam, metrics)


def _ce_rhs(d, Dinv, q):
    def rhs(u):
        u = np.asarray(u, float)
        return (d.flux(u) - q) @ Dinv.T

    return rhs


def _eig_split(M):
    """Left eigenvectors of ``M`` grouped by the sign of the eigenvalue's real part."""
    lam, Vl = np.linalg.eig(M.T)
    return lam.real, Vl.real


def ce2_profile(model: KineticModel, eps: float, cfg: ProfileConfig | None = None) -> Profile:
    """Viscous profile of ``D* u' = f*(u) - q`` with the same phase as the relaxation profile."""
    cfg = cfg or ProfileConfig()
    cls = _gnl(model)
    if eps <= 0:
        raise ProfileError("eps must be positive")
    d = ce_data(model)
    dec = d.dec
    p = dec.p
    u_minus, u_plus, q = _rh_coords(model, eps, cls)
    Dinv = np.linalg.inv(d.viscosity())
    rhs = _ce_rhs(d, Dinv, q)
    mid = 0.5 * (u_minus[0] + u_plus[0])
    L = profile_half_width(cls, eps, cfg)
    x = uniform_grid(L, cfg.m)
    if p == 1:
        u = _integrate_from_center(lambda y: rhs(y[None, :])[0], np.array([mid]), x, cfg.rtol)
        info = {"method": "ivp"}
    else:
        u, info = _ce2_bvp(d, rhs, Dinv, u_minus, u_plus, mid, cls, eps, x, cfg)
    lam = char_speed(model, u)
    res = derivative(GridFunction(L, u)).values - rhs(u)
    band = slice(10, -10)
    metrics = {
        "L": L,
        "m": cfg.m,
        "ode_residual": float(np.abs(res[band]).max()),
        "lambda_monotone": bool(np.all(np.diff(lam) < 0)),
        **info,
    }
    return Profile("CE2", GridFunction(L, u), eps, q, u_minus, u_plus, u, lam, metrics)


def _ce2_bvp(d, rhs, Dinv, u_minus, u_plus, mid, cls, eps, x, cfg):
    """Two-sided collocation on ``[0, L]`` with ``y = (u(-s), u(s))``."""
    p = len(u_minus)
    L = x[-1]
    lm, Vm = _eig_split(Dinv @ d.flux_jacobian(u_minus))
    lp, Vp = _eig_split(Dinv @ d.flux_jacobian(u_plus))
    left = Vm[:, lm <= 0].T
    right = Vp[:, lp > 0].T
    if len(left) + len(right) != p - 1:
        raise ProfileError("endstates do not have the splitting of a Lax shock")

    def fun(s, y):
        return np.vstack([-rhs(y[:p].T).T, rhs(y[p:].T).T])

    def bc(ya, yb):
        return np.concatenate([
            ya[:p] - ya[p:],
            [ya[p] - mid],
            left @ (yb[:p] - u_minus),
            right @ (yb[p:] - u_plus),
        ])

    s = np.linspace(0.0, L, 1201)
    kappa = float(np.atleast_2d(cls.kappa)[0, 0])
    th = 0.5 * (1 + np.tanh(abs(cls.Lambda) * eps * s / (2 * kappa)))
    y_right = np.outer(u_minus, 1 - th) + np.outer(u_plus, th)
    y_left = np.outer(u_minus, th) + np.outer(u_plus, 1 - th)
    y0 = np.vstack([y_left, y_right])
    sol = solve_bvp(fun, bc, s, y0, tol=cfg.bvp_tol, max_nodes=200000)
    if not sol.success:
        raise ConvergenceError(f"viscous profile collocation failed: {sol.message}")
    c = len(x) // 2
    u = np.empty((len(x), p))
    u[c:] = sol.sol(x[c:])[p:].T
    u[: c + 1] = sol.sol(-x[: c + 1])[:p].T
    return u, {"method": "collocation", "nodes": int(sol.x.size), "max_rms_residual": float(sol.rms_residuals.max())}


def burgers_profile(model: KineticModel, eps: float, cfg: ProfileConfig | None = None) -> Profile:
    cfg = cfg or ProfileConfig()
    cls = _gnl(model)
    kappa = float(np.atleast_2d(cls.kappa)[0, 0])
    L = profile_half_width(cls, eps, cfg)
    x = uniform_grid(L, cfg.m)
    u1 = burgers_exact(eps, cls.Lambda, kappa, x)
    q = np.array([cls.Lambda * eps**2 / 2])
    return Profile("BurgersExact", GridFunction(L, u1[:, None]), eps, q,
                   np.array([eps * np.sign(cls.Lambda)]), np.array([-eps * np.sign(cls.Lambda)]),
                   u1[:, None], cls.Lambda * u1, {"kappa": kappa})


# ---------------------------------------------------------------- comparisons


def _tail_rate(x, dist, scale):
    """Exponential decay rate of ``dist`` on the tail where it lies well below ``scale``."""
    sel = (dist < 1e-2 * scale) & (dist > 1e-7 * scale) & (x > 0)
    if sel.sum() < 5:
        return float("nan")
    slope = np.polyfit(x[sel], np.log(dist[sel]), 1)[0]
    return float(-slope)


def compare_profiles(rel: Profile, ce: Profile, cls, model: KineticModel | None = None) -> dict:
    """Weighted distances between a relaxation profile and a viscous one on a shared grid."""
    if rel.grid.m != ce.grid.m or abs(rel.grid.L - ce.grid.L) > 1e-12 * rel.grid.L:
        raise ProfileError("profiles live on different grids")
    x = rel.x
    c = len(x) // 2
    eps = rel.eps
    phase = max(abs(pr.u1[c] - 0.5 * (pr.u_minus[0] + pr.u_plus[0])) for pr in (rel, ce))
    if phase > 1e-8 * eps:
        raise ProfileError(f"phase misalignment {phase:.2e}")
    scale = 2 * eps
    right = _tail_rate(x, np.linalg.norm(ce.u - ce.u_plus, axis=1), scale)
    left = _tail_rate(-x[::-1], np.linalg.norm(ce.u - ce.u_minus, axis=1)[::-1], scale)
    rates = [r for r in (left, right) if np.isfinite(r)]
    theta = min(rates) if rates else 0.0
    weight = np.exp(0.5 * theta * np.abs(x))
    diff = GridFunction(rel.grid.L, rel.u - ce.u)
    ddiff = derivative(diff)
    out = {
        "eps": eps,
        "decay_rate": theta,
        "weight_rate": 0.5 * theta,
        "sup_u": float(np.abs(diff.values).max()),
        "sup_du": float(np.abs(ddiff.values).max()),
        "weighted_sup_u": float((np.linalg.norm(diff.values, axis=1) * weight).max()),
        "weighted_sup_du": float((np.linalg.norm(ddiff.values, axis=1) * weight).max()),
    }
    tails = np.where(x[:, None] < 0, rel.u - rel.u_minus, rel.u - rel.u_plus)
    out["tail_amplitude"] = float((np.linalg.norm(tails, axis=1) * weight).max())
    if rel.kind == "Relaxation" and model is not None:
        dec = ce_data(model).dec
        v_rel = dec.to_coords(rel.grid.values)[:, dec.p:]
        v_ce = ce_data(model).graph(ce.u)
        out["sup_v"] = float(np.abs(v_rel - v_ce).max())
        out["weighted_sup_v"] = float((np.linalg.norm(v_rel - v_ce, axis=1) * weight).max())
    if rel is ce:
        return {k: (0.0 if k.startswith(("sup", "weighted")) else v) for k, v in out.items()}
    return out


def endstate_errors(model: KineticModel, eps: float, cls=None) -> float:
    """``max |u1^+- -/+ eps|`` of the Rankine-Hugoniot endstates."""
    cls = cls or classify(model)
    um, up, _ = _rh_coords(model, eps, cls)
    s = np.sign(cls.Lambda)
    return float(max(abs(um[0] - s * eps), abs(up[0] + s * eps)))


# ---------------------------------------------------------------- linearly degenerate fibers


def ldg_fiber_check(model: KineticModel, q1_values, radius: float = 0.05, order: int = 3,
                    n_samples: int = 201, x_max: float | None = None) -> dict:
    """Reduced-field verdicts on the fibers ``q1 = const`` of a linearly degenerate model."""
    cls = classify(model)
    if cls.case != "LinearlyDegenerate":
        raise ClassificationError("model is not linearly degenerate")
    dec = ce_data(model).dec
    frame = build_canonical(dec)
    exp = taylor_expand(dec, model, k=order, frame=frame)
    p, r = dec.p, dec.r
    grid1 = np.linspace(-radius, radius, n_samples)
    out = []
    for q1 in np.atleast_1d(q1_values):
        q = np.zeros(p)
        q[:r] = q1
        consts = frame.fiber_constants(q)
        rows = np.column_stack([grid1] + [np.zeros_like(grid1)] * (r - 1)) if r > 1 else grid1[:, None]
        wcs = np.column_stack([rows, np.broadcast_to(consts, (n_samples, len(consts)))])
        fld = reduced_field(exp, frame, wcs)[:, :r]
        mag = np.linalg.norm(fld, axis=1)
        entry = {"q1": float(q1), "max_field": float(mag.max()), "min_field": float(mag.min())}
        if q1 == 0:
            entry["verdict"] = "all-equilibria" if mag.max() <= 1e-10 else "not-trivial"
        else:
            def rhs(t, y):
                c = np.concatenate([y, consts])[None, :]
                return reduced_field(exp, frame, c)[0, :r]

            def leave(t, y):
                return np.linalg.norm(y) - radius

            leave.terminal = True
            T = x_max or 100.0 * radius / max(mag.min(), 1e-300)
            exits = []
            for sgn in (1.0, -1.0):
                sol = solve_ivp(rhs, (0.0, sgn * T), np.zeros(r), events=leave, rtol=1e-10, atol=1e-14)
                exits.append(bool(sol.t_events[0].size))
            entry["exit_forward"], entry["exit_backward"] = exits
            no_zero = mag.min() > 0 and np.all(np.sign(fld[:, 0]) == np.sign(fld[0, 0]))
            entry["zero_free"] = bool(no_zero)
            entry["verdict"] = "exit" if all(exits) and no_zero else "not-trivial"
        out.append(entry)
    return {"case": cls.case, "radius": radius, "order": order, "fibers": out}


# ---------------------------------------------------------------- sweeps


def _sweep_row(args):
    model, eps, cfg = args
    cls = classify(model)
    rel = relaxation_profile(model, eps, cfg)
    ce = ce2_profile(model, eps, cfg)
    row = compare_profiles(rel, ce, cls, model)
    row["endstate_error"] = endstate_errors(model, eps, cls)
    row["lambda_monotone"] = rel.metrics["lambda_monotone"]
    row["lambda_monotone_ce"] = ce.metrics["lambda_monotone"]
    return row


SWEEP_FITS = {
    "sup_u": "sup |u_REL - u_CE|",
    "endstate_error": "|u1+- -/+ eps|",
    "tail_amplitude": "weighted sup |u_REL - u+-|",
    "sup_v": "sup |v_REL - v*(u_CE)|",
}


def epsilon_sweep(model: KineticModel, eps_list, cfg: ProfileConfig | None = None, jobs: int = 1) -> dict:
    cfg = cfg or ProfileConfig()
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        return {"rows": [], "fits": {}}
    _gnl(model)
    tasks = [(model, e, cfg) for e in eps_list]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(t) for t in tasks]
    fits = {}
    if len(rows) >= 2:
        for key in SWEEP_FITS:
            ys = [row[key] for row in rows]
            if all(y > 0 for y in ys):
                slope, rms = fit_slope(eps_list, ys)
                fits[key] = {"slope": slope, "rms": rms}
    return {"rows": rows, "fits": fits}
