"""Relaxation models ``A w' = Q(w)`` with a quadratic collision operator.

A model is the tuple (metric, A, B, equilibrium, basis of the equilibrium
tangent space).  Everything downstream works with adjoints taken in the
model's Gram metric, which is why :class:`KineticModel` carries helpers for
moving between ambient coordinates and a metric-orthonormal frame.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import jsonschema
import numpy as np
import scipy.linalg as sla

from .errors import ModelError

__all__ = [
    "KineticModel",
    "Violation",
    "HypothesisReport",
    "load_model",
    "dump_model",
    "verify_hypotheses",
    "apply_Q",
    "apply_dQ",
    "apply_B",
    "generate_synthetic",
    "SYNTHETIC_KINDS",
]

MODEL_SCHEMA = {
    "type": "object",
    "required": ["name", "dim", "gram", "A", "B", "u_bar", "v_perp_basis"],
    "properties": {
        "name": {"type": "string"},
        "dim": {"type": "integer", "minimum": 0},
        "gram": {"type": "array", "items": {"type": "number"}},
        "A": {"type": "array", "items": {"type": "number"}},
        "B": {"type": "array", "items": {"type": "number"}},
        "u_bar": {"type": "array", "items": {"type": "number"}},
        "v_perp_basis": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "number"}},
        },
    },
}


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class KineticModel:
    """Finite-dimensional relaxation model.

    ``B[k, i, j]`` is the k-th ambient coordinate of ``B(e_i, e_j)``.
    Arrays are stored read-only; construct a new model to change one.
    """

    gram: np.ndarray
    A: np.ndarray
    B: np.ndarray
    u_bar: np.ndarray
    v_perp_basis: np.ndarray
    name: str = "model"

    def __post_init__(self):
        object.__setattr__(self, "gram", _frozen(self.gram))
        object.__setattr__(self, "A", _frozen(self.A))
        object.__setattr__(self, "B", _frozen(self.B))
        object.__setattr__(self, "u_bar", _frozen(self.u_bar))
        vp = np.array(self.v_perp_basis, dtype=float)
        if vp.ndim == 1:
            vp = vp[None, :]
        object.__setattr__(self, "v_perp_basis", _frozen(vp))
        n = self.u_bar.shape[0]
        if n == 0:
            raise ModelError("empty state space")
        if self.gram.shape != (n, n) or self.A.shape != (n, n):
            raise ModelError("gram and A must be n x n with n = len(u_bar)")
        if self.B.shape != (n, n, n):
            raise ModelError("B must have shape (n, n, n)")
        if self.v_perp_basis.shape[1:] != (n,):
            raise ModelError("v_perp_basis vectors must have length n")

    @property
    def dim(self) -> int:
        return self.u_bar.shape[0]

    # Metric-orthonormal frame.  With gram = L L^T, y = L^T x is an isometry
    # onto Euclidean space, so gram-adjoints become transposes in y.
    @cached_property
    def _chol(self) -> np.ndarray:
        return np.linalg.cholesky(self.gram)

    @property
    def to_ortho(self) -> np.ndarray:
        return self._chol.T

    @cached_property
    def from_ortho(self) -> np.ndarray:
        return sla.solve_triangular(self._chol.T, np.eye(self.dim), lower=False)

    def inner(self, a, b) -> np.ndarray:
        return np.einsum("...i,ij,...j->...", a, self.gram, b)

    def norm(self, a) -> np.ndarray:
        return np.sqrt(np.maximum(self.inner(a, a), 0.0))

    def dQ_matrix(self, w0=None) -> np.ndarray:
        """Matrix of ``h -> 2 B(w0, h)`` (defaults to ``w0 = u_bar``)."""
        w0 = self.u_bar if w0 is None else np.asarray(w0, float)
        return 2.0 * np.einsum("kij,i->kj", self.B, w0)


def apply_B(model: KineticModel, u, w) -> np.ndarray:
    """Bilinear form, broadcast over leading axes of ``u`` and ``w``."""
    return np.einsum("kij,...i,...j->...k", model.B, u, w)


def _check_vec(model: KineticModel, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape[-1] != model.dim:
        raise ModelError(f"expected vectors of length {model.dim}, got {w.shape}")
    return w


def apply_Q(model: KineticModel, w) -> np.ndarray:
    w = _check_vec(model, w)
    return apply_B(model, w, w)


def apply_dQ(model: KineticModel, w0, h) -> np.ndarray:
    w0 = _check_vec(model, w0)
    h = _check_vec(model, h)
    return 2.0 * apply_B(model, w0, h)


# ---------------------------------------------------------------- file format


def load_model(source) -> KineticModel:
    """Parse a model file (bytes, str or already-decoded dict)."""
    if isinstance(source, (bytes, bytearray)):
        source = source.decode("utf-8")
    if isinstance(source, str):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ModelError(f"invalid JSON: {exc}") from exc
    else:
        data = source
    try:
        jsonschema.validate(data, MODEL_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ModelError(f"schema violation: {exc.message}") from exc
    n = data["dim"]
    if n == 0:
        raise ModelError("empty state space")
    sizes = {"gram": n * n, "A": n * n, "B": n**3, "u_bar": n}
    for key, size in sizes.items():
        if len(data[key]) != size:
            raise ModelError(f"dimension mismatch: '{key}' has {len(data[key])} entries, expected {size}")
    if any(len(v) != n for v in data["v_perp_basis"]):
        raise ModelError("dimension mismatch in v_perp_basis")
    gram = np.array(data["gram"], float).reshape(n, n)
    if not np.allclose(gram, gram.T, rtol=0, atol=1e-12 * max(1.0, np.abs(gram).max())):
        raise ModelError("gram matrix is not symmetric")
    B = np.array(data["B"], float).reshape(n, n, n)
    B = 0.5 * (B + B.transpose(0, 2, 1))
    return KineticModel(
        gram=gram,
        A=np.array(data["A"], float).reshape(n, n),
        B=B,
        u_bar=np.array(data["u_bar"], float),
        v_perp_basis=np.array(data["v_perp_basis"], float).reshape(-1, n),
        name=data["name"],
    )


def dump_model(model: KineticModel) -> str:
    data = {
        "name": model.name,
        "dim": model.dim,
        "gram": model.gram.ravel().tolist(),
        "A": model.A.ravel().tolist(),
        "B": model.B.ravel().tolist(),
        "u_bar": model.u_bar.tolist(),
        "v_perp_basis": model.v_perp_basis.tolist(),
    }
    return json.dumps(data, indent=1)


# ---------------------------------------------------------------- hypotheses


@dataclass(frozen=True)
class Violation:
    tag: str
    witness: float
    message: str


@dataclass(frozen=True)
class HypothesisReport:
    passed: bool
    delta: float
    violations: tuple = field(default_factory=tuple)

    @property
    def tags(self) -> list[str]:
        return [v.tag for v in self.violations]

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "delta": self.delta,
            "violations": [
                {"tag": v.tag, "witness": v.witness, "message": v.message}
                for v in self.violations
            ],
        }


def verify_hypotheses(model: KineticModel, tol: float = 1e-8) -> HypothesisReport:
    """Check every structural hypothesis; failures become report entries."""
    found: list[Violation] = []
    n = model.dim
    G = model.gram

    eig_g = np.linalg.eigvalsh(0.5 * (G + G.T))
    if eig_g[0] <= 1e-10 * eig_g[-1] or np.abs(G - G.T).max() > tol * np.abs(G).max():
        found.append(Violation("metric-spd", float(eig_g[0]), "gram is not symmetric positive definite"))
        return HypothesisReport(False, 0.0, tuple(found))

    T, Ti = model.to_ortho, model.from_ortho
    A = T @ model.A @ Ti
    normA = np.linalg.norm(A, 2)
    asym = np.linalg.norm(A - A.T, 2)
    if asym > tol * normA:
        found.append(Violation("H1(i)-selfadjoint", float(asym), "A is not self-adjoint in the metric"))
    smin = np.linalg.svd(A, compute_uv=False)[-1]
    if smin <= 1e-10 * normA:
        found.append(Violation("H1(i)-injective", float(smin), "A has a nontrivial kernel"))

    B = np.einsum("ak,kij,ib,jc->abc", T, model.B, Ti, Ti)
    normB = max(np.abs(B).max(), 1e-300)
    basym = np.abs(B - B.transpose(0, 2, 1)).max()
    if basym > tol * normB:
        found.append(Violation("H1(ii)-symmetric", float(basym), "B is not symmetric in its arguments"))

    Y = sla.orth((T @ model.v_perp_basis.T))
    p = Y.shape[1]
    rng_leak = np.abs(np.einsum("ka,kij->aij", Y, B)).max() if p else 0.0
    if rng_leak > tol * normB:
        found.append(Violation("H1(ii)-range", float(rng_leak), "range of B is not orthogonal to the equilibrium tangent space"))

    ub = T @ model.u_bar
    q_ub = np.linalg.norm(np.einsum("kij,i,j->k", B, ub, ub))
    scale = normB * max(np.linalg.norm(ub), 1.0) ** 2
    if q_ub > tol * scale:
        found.append(Violation("H2-equilibrium", float(q_ub), "Q(u_bar) does not vanish"))

    L = 2.0 * np.einsum("kij,i->kj", B, ub)
    normL = max(np.linalg.norm(L, 2), 1e-300)
    lasym = np.linalg.norm(L - L.T, 2)
    if lasym > tol * normL:
        found.append(Violation("H2(i)-selfadjoint", float(lasym), "Q'(u_bar) is not self-adjoint"))
    kernel_leak = np.linalg.norm(L @ Y, 2) if p else 0.0
    rank = np.linalg.matrix_rank(0.5 * (L + L.T), tol=1e-9 * normL)
    if kernel_leak > tol * normL or rank != n - p:
        found.append(Violation(
            "H2(i)-kernel", float(max(kernel_leak, abs(rank - (n - p)))),
            f"ker Q'(u_bar) differs from span(v_perp_basis): rank {rank}, expected {n - p}",
        ))

    Z = sla.null_space(Y.T) if p else np.eye(n)
    E = Z.T @ (0.5 * (L + L.T)) @ Z
    delta = float(-np.linalg.eigvalsh(E)[-1]) if E.size else 0.0
    if not delta > 0:
        found.append(Violation("H2(ii)-definite", delta, "Q'(u_bar) is not negative definite on V"))

    ok = not found
    return HypothesisReport(ok, max(delta, 0.0) if ok else max(delta, 0.0), tuple(found))


# ---------------------------------------------------------------- synthetic models

SYNTHETIC_KINDS = ("GNL_MIN", "GNL_RICH", "LDG_MIN", "NONCHAR")
_PERP_DIM = {"GNL_MIN": 2, "GNL_RICH": 3, "LDG_MIN": 1, "NONCHAR": 2}


def _random_gram(rng, n):
    R = np.eye(n) + 0.25 * rng.standard_normal((n, n)) / np.sqrt(n)
    return R @ R.T


def _pencil_rates(A, L):
    """Nonzero generalized eigenvalues of the pencil (L, A)."""
    lam = sla.eigvals(L, A)
    lam = lam[np.abs(lam) > 1e-8 * np.abs(lam).max()]
    return np.abs(lam.real)


def _attempt(kind: str, rng, n: int):
    p = _PERP_DIM[kind]
    nv = n - p
    O = np.linalg.qr(rng.standard_normal((n, n)))[0]

    ev = rng.uniform(0.5, 2.0, nv)
    W = np.linalg.qr(rng.standard_normal((nv, nv)))[0]
    E = -(W * ev) @ W.T
    Lfull = np.zeros((n, n))
    Lfull[p:, p:] = E

    # B in the orthonormal frame; u_bar = e_0 so that B(e_0, .) = Q'/2.
    Bf = np.zeros((n, n, n))
    free = rng.standard_normal((nv, n, n))
    free = 0.5 * (free + free.transpose(0, 2, 1))
    free[:, 0, :] = 0.0
    free[:, :, 0] = 0.0
    Bf[p:] = free
    Bu = np.zeros((n, n, n))
    Bu[:, 0, :] += 0.5 * Lfull
    Bu[:, :, 0] += 0.5 * Lfull

    A11 = np.zeros((p, p))
    r_bar = None
    if kind in ("GNL_MIN", "GNL_RICH"):
        s = rng.standard_normal(p - 1)
        s /= np.linalg.norm(s)
        theta = rng.uniform(np.pi / 6, np.pi / 3)
        r_bar = np.concatenate([[np.cos(theta)], np.sin(theta) * s])
        comp = sla.null_space(r_bar[None, :])
        mu = rng.uniform(0.5, 2.0, p - 1) * rng.choice([-1.0, 1.0], p - 1)
        A11 = (comp * mu) @ comp.T
    elif kind == "NONCHAR":
        Wp = np.linalg.qr(rng.standard_normal((p, p)))[0]
        mu = rng.uniform(0.5, 2.0, p) * rng.choice([-1.0, 1.0], p)
        A11 = (Wp * mu) @ Wp.T
    A12 = rng.standard_normal((p, nv))
    A22 = rng.standard_normal((nv, nv))
    A22 = 0.5 * (A22 + A22.T)
    A = np.block([[A11, A12], [A12.T, A22]])

    if np.linalg.svd(A, compute_uv=False)[-1] < 0.05 * np.linalg.norm(A, 2):
        return None
    if kind in ("GNL_MIN", "GNL_RICH") and np.linalg.svd(A12, compute_uv=False)[-1] < 0.2:
        return None

    if r_bar is not None:
        rb = np.zeros(n)
        rb[:p] = r_bar
        b = np.einsum("kij,i,j->k", Bf, rb, rb)[p:]
        lam_raw = -2.0 * rb[:p] @ A12 @ np.linalg.solve(E, b)
        if abs(lam_raw) < 1e-2:
            return None
        Bf *= 1.0 / abs(lam_raw)
        if np.abs(Bf).max() > 4.0:
            return None

    rates = _pencil_rates(A, Lfull)
    if rates.size and (rates.min() < 0.2 or rates.max() / rates.min() > 25.0):
        return None

    B = Bf + Bu
    ub = np.zeros(n)
    ub[0] = 1.0
    # rotate the frame
    A = O @ A @ O.T
    B = np.einsum("ak,kij,bi,cj->abc", O, B, O, O)
    ub = O @ ub
    perp = O[:, :p].T

    G = _random_gram(rng, n)
    Lc = np.linalg.cholesky(G)
    Ti = sla.solve_triangular(Lc.T, np.eye(n), lower=False)  # x = Ti y
    T = Lc.T
    A_x = Ti @ A @ T
    B_x = np.einsum("ak,kij,ib,jc->abc", Ti, B, T, T)
    return G, A_x, B_x, Ti @ ub, (Ti @ perp.T).T


def generate_synthetic(kind: str, seed: int, n: int, max_tries: int = 500) -> KineticModel:
    """Seeded random model in one of the characteristic cases.

    ``GNL_MIN`` uses a two-dimensional equilibrium tangent space: the base
    equilibrium always lies in that space, so a one-dimensional choice could
    only produce linear fluxes along it.
    """
    kind = kind.upper()
    if kind not in SYNTHETIC_KINDS:
        raise ModelError(f"unknown synthetic kind {kind!r}")
    p = _PERP_DIM[kind]
    r = 0 if kind == "NONCHAR" else 1
    if n < p + 2 or n - p < r + 1:
        raise ModelError(f"n={n} too small for {kind}")
    for attempt in range(max_tries):
        rng = np.random.default_rng([seed, n, SYNTHETIC_KINDS.index(kind), attempt])
        out = _attempt(kind, rng, n)
        if out is not None:
            G, A, B, ub, perp = out
            return KineticModel(G, A, B, ub, perp, name=f"{kind.lower().replace('_', '-')}-s{seed}-n{n}")
    raise ModelError(f"recipe {kind} failed after {max_tries} retries; choose another seed")
