import numpy as np
import pytest
import scipy.linalg as sla

from kinetic_manifold import (GridFunction, ModelError, apply_K, apply_K0, apply_volterra, build_decomposition,
                              generate_synthetic, green_apply, linear_center_solution, solve_inhomogeneous,
                              trichotomy_project, uniform_grid)
from kinetic_manifold.errors import DecompositionError
from kinetic_manifold.linear import (exp_convolution_closed_form, exp_convolution_quadrature,
                                     resolvent_norm)
from kinetic_manifold.oracles import fourier_K0, pencil_trichotomy
from kinetic_manifold.quadrature import cell_integrals, decaying_convolution
from kinetic_manifold.weighted import derivative, norm_l2w


def _gram_symmetric(M, tol=1e-12):
    return np.abs(M - M.T).max() <= tol * max(1.0, np.abs(M).max())


@pytest.mark.parametrize("name", ["gnl-min", "gnl-rich", "ldg-min", "nonchar"])
def test_decomposition_invariants(decs, name):
    d = decs[name]
    n = d.n
    assert _gram_symmetric(d.Gamma0) and _gram_symmetric(d.E0)
    assert np.linalg.svd(d.Gamma0, compute_uv=False)[-1] > 1e-8
    assert np.linalg.eigvalsh(d.E0)[-1] <= -d.delta * (1 - 1e-12)
    assert np.all(d.rates != 0)
    assert d.dim_c == d.p + d.r
    np.testing.assert_allclose(d.P_c @ d.P_c, d.P_c, atol=1e-12)
    np.testing.assert_allclose(d.P_c + d.P_s + d.P_u, np.eye(n), atol=1e-10)
    np.testing.assert_allclose(d.P_c @ d.H_c, d.H_c, atol=1e-12)
    np.testing.assert_allclose(d.P_c @ np.hstack([d.H_s, d.H_u]), 0, atol=1e-12)


def test_gnl_min_dims(decs):
    d = decs["gnl-min"]
    assert (d.r, d.dim_c) == (1, 3)


def test_nonchar_center_is_equilibrium_tangent(decs, models):
    d = decs["nonchar"]
    assert d.r == 0 and d.dim_c == d.p
    np.testing.assert_allclose(d.slope, 0, atol=1e-15)
    # H_c spans V_perp
    proj = d.P_perp @ d.H_c
    np.testing.assert_allclose(proj, d.H_c, atol=1e-12)


def test_coupling_block_structure(decs):
    d = decs["gnl-min"]
    # T12* injective on ker A11 and T12 onto ker A11
    assert np.linalg.svd(d.T12_v1, compute_uv=False)[-1] > 1e-6
    A = d.A_c
    np.testing.assert_allclose(A[: d.r, d.p + d.r:], 0, atol=1e-12)


def test_ambiguous_rank_rejected(models, decs):
    from kinetic_manifold.model import KineticModel

    m, d = models["gnl-min"], decs["gnl-min"]
    r_bar = d.basis[:, 0]
    eta = 1e-9 * np.linalg.norm(m.to_ortho @ m.A @ m.from_ortho, 2)
    A = m.A + eta * np.outer(r_bar, r_bar) @ m.gram
    bad = KineticModel(m.gram, A, m.B, m.u_bar, m.v_perp_basis, "near-kernel")
    with pytest.raises(DecompositionError, match="ambiguous"):
        build_decomposition(bad)


def test_trichotomy_project(decs, rng):
    d = decs["gnl-rich"]
    for i in range(d.dim_c):
        c, s, u = trichotomy_project(d, d.H_c[:, i])
        np.testing.assert_allclose(c, d.H_c[:, i], atol=1e-12)
        assert np.abs(s).max() < 1e-12 and np.abs(u).max() < 1e-12
    z = trichotomy_project(d, np.zeros(d.n))
    assert all(np.all(v == 0) for v in z)
    w = rng.standard_normal(d.n)
    c, s, u = trichotomy_project(d, w)
    np.testing.assert_allclose(c + s + u, w, atol=1e-12)
    o = pencil_trichotomy(d.model)
    for mine, ref in ((c, o.P_c @ w), (s, o.P_s @ w), (u, o.P_u @ w)):
        np.testing.assert_allclose(mine, ref, atol=1e-9)


def test_linear_center_solution(decs, rng):
    d = decs["gnl-min"]
    m = d.model
    w0 = d.H_c @ rng.standard_normal(d.dim_c)
    x = np.linspace(-3, 3, 7)
    sol = linear_center_solution(d, w0, x)
    np.testing.assert_allclose(sol[3], w0, atol=1e-15)
    slope = d.slope @ w0
    L = m.dQ_matrix()
    for row in sol:
        np.testing.assert_allclose(m.A @ slope, L @ row, atol=1e-12)
    # no v1 component: constant
    w_eq = d.H_c @ np.r_[rng.standard_normal(d.p), 0.0]
    np.testing.assert_allclose(linear_center_solution(d, w_eq, x) - w_eq, 0, atol=1e-15)
    with pytest.raises(ModelError):
        linear_center_solution(d, d.H_s[:, 0], x)


def test_green_apply(decs):
    d = decs["gnl-rich"]
    X = d.modes
    Vt = d.basis[:, d.sl_vt]
    vs = Vt @ X[:, d.stable][:, 0]
    np.testing.assert_allclose(green_apply(d, 0.0, vs), vs, atol=1e-12)
    np.testing.assert_allclose(green_apply(d, -1e-300, vs), 0, atol=1e-12)
    # dense exponential oracle
    S = np.linalg.solve(d.Gamma0, d.E0)
    lam, R = sla.eig(S)
    lam, R = lam.real, R.real
    Rinv = np.linalg.inv(R)
    Ps = R @ np.diag(lam < 0) @ Rinv
    Pu = R @ np.diag(lam > 0) @ Rinv
    rng = np.random.default_rng(3)
    for x in (3.0 / d.nu, 0.4, -0.4, -3.0 / d.nu):
        c = rng.standard_normal(d.mt)
        ref = sla.expm(x * S) @ (Ps if x >= 0 else -Pu) @ c
        got = d.basis_inv[d.sl_vt] @ green_apply(d, x, Vt @ c)
        np.testing.assert_allclose(got, ref, atol=1e-10)
    x = 3.0 / d.nu
    C = np.linalg.cond(R)
    c = rng.standard_normal(d.mt)
    assert np.linalg.norm(d.basis_inv[d.sl_vt] @ green_apply(d, x, Vt @ c)) <= np.exp(-3) * C * np.linalg.norm(c)


def test_K0_constant_and_zero(decs):
    d = decs["gnl-min"]
    L = 20 / d.nu
    z = d.P_Vt @ np.array([0.3, -1.0, 2.0, 0.5, 1.0])
    out = apply_K0(d, GridFunction.constant(L, 2049, z))
    zc = d.basis_inv[d.sl_vt] @ z
    ref = d.basis[:, d.sl_vt] @ (-np.linalg.solve(d.E0, zc))
    assert np.abs(out.values - ref).max() < 1e-9
    assert np.all(apply_K0(d, GridFunction.constant(L, 2049, np.zeros(5))).values == 0)


def _bump(d, L, m, shift=0.0, width=3.0):
    vec = d.P_Vt @ np.arange(1.0, d.n + 1)
    return GridFunction.from_callable(L, m, lambda x: np.exp(-((x - shift) / width) ** 2)[:, None] * vec)


@pytest.mark.parametrize("name", ["gnl-min", "gnl-rich", "ldg-min"])
def test_K0_fourier_agreement(decs, name):
    d = decs[name]
    g = _bump(d, 20 / d.nu, 2049)
    a, b = apply_K0(d, g).values, fourier_K0(d, g).values
    assert np.linalg.norm(a - b) / np.linalg.norm(b) <= 1e-6


def test_K0_shift_equivariance(decs):
    d = decs["gnl-rich"]
    L, m = 20 / d.nu, 2049
    g0 = apply_K0(d, _bump(d, L, m)).values
    k = 40
    g1 = apply_K0(d, _bump(d, L, m, shift=k * 2 * L / (m - 1))).values
    band = slice(200, m - 200 - k)
    np.testing.assert_allclose(g1[band.start + k: band.stop + k], g0[band], atol=1e-10)


def test_K0_satisfies_ode(decs):
    d = decs["gnl-rich"]
    g = _bump(d, 20 / d.nu, 4097)
    v = apply_K0(d, g)
    dv = derivative(v)
    c = lambda f: f @ d.basis_inv[d.sl_vt].T  # noqa: E731
    res = c(dv.values) @ d.Gamma0.T - c(v.values) @ d.E0.T - c(g.values)
    assert np.abs(res[10:-10]).max() < 1e-6


def test_volterra():
    L, m = 10.0, 2001
    g = GridFunction.constant(L, m, np.array([2.0, -1.0]))
    Vg = apply_volterra(g)
    np.testing.assert_allclose(Vg.values, np.outer(g.x, [2.0, -1.0]), atol=1e-12)
    odd = GridFunction.from_callable(L, m, lambda x: (x * np.exp(-x**2))[:, None])
    v = apply_volterra(odd).values[:, 0]
    np.testing.assert_allclose(v, v[::-1], atol=1e-12)
    assert apply_volterra(odd).at_zero()[0] == 0.0


def test_volterra_weighted_bound():
    rng = np.random.default_rng(7)
    alpha = 0.3
    L, m = 8 / alpha * 2, 2001
    for _ in range(100):
        freq, amp, ph = rng.uniform(0, 3, 4), rng.standard_normal((4, 2)), rng.uniform(0, 6, 4)
        g = GridFunction.from_callable(L, m, lambda x: sum(np.cos(f * x + p)[:, None] * a
                                                           for f, a, p in zip(freq, amp, ph)))
        assert norm_l2w(apply_volterra(g), alpha) <= norm_l2w(g, alpha) / alpha


def test_apply_K(decs):
    d = decs["gnl-min"]
    L = 20 / d.nu
    zero = GridFunction.constant(L, 1025, np.zeros(d.n))
    assert np.all(apply_K(d, zero).values == 0)
    f = _bump(d, L, 1025).map(np.eye(d.n)) + GridFunction.constant(L, 1025, d.P_V @ np.ones(d.n)) * 0.0
    f = GridFunction(L, f.values + np.exp(-f.x**2)[:, None] * (d.P_V @ np.ones(d.n)))
    Kf = apply_K(d, f)
    assert np.abs(d.P_c @ Kf.at_zero()).max() < 1e-12


def test_solve_inhomogeneous(decs, rng):
    d = decs["gnl-rich"]
    m = d.model
    L = 20 / d.nu
    w0 = d.H_c @ rng.standard_normal(d.dim_c)
    zero = GridFunction.constant(L, 2049, np.zeros(d.n))
    np.testing.assert_allclose(solve_inhomogeneous(d, w0, zero).values,
                               linear_center_solution(d, w0, zero.x), atol=1e-14)
    vec = d.P_V @ rng.standard_normal(d.n)
    f = GridFunction.from_callable(L, 2049, lambda x: (np.exp(-x**2 / 16) * np.cos(x / 2))[:, None] * vec)
    u = solve_inhomogeneous(d, w0, f)
    res = derivative(u).values @ m.A.T - u.values @ m.dQ_matrix().T - f.values
    band = np.abs(u.x) <= L - 1
    assert np.abs(res[band]).max() <= 1e-6
    np.testing.assert_allclose(d.P_c @ u.at_zero(), w0, atol=1e-12)


def test_resolvent_bound(decs):
    for d in decs.values():
        omega = np.concatenate([np.linspace(-1e3, 1e3, 401), np.linspace(-2, 2, 401)])
        assert resolvent_norm(d, omega).max() <= 1 / d.delta * (1 + 1e-12)


def test_convolution_identity():
    x = np.linspace(-6, 6, 13)
    np.testing.assert_allclose(exp_convolution_quadrature(0.3, 1.0, x),
                               exp_convolution_closed_form(0.3, 1.0, x), atol=1e-8, rtol=0)


def test_quadrature_exact_for_cubics():
    h = 0.1
    x = np.arange(40) * h
    for lam in (-2.0, -0.3, -1e-3, 0.0):
        for deg in range(4):
            c = x**deg
            got = cell_integrals(c, lam * h, h)
            from scipy.integrate import quad
            ref = [quad(lambda y: np.exp(lam * (x[j + 1] - y)) * y**deg, x[j], x[j + 1], epsabs=1e-15)[0]
                   for j in range(len(x) - 1)]
            np.testing.assert_allclose(got, ref, atol=1e-13)


def test_decaying_convolution_constant():
    c = np.full(101, 3.0)
    out = decaying_convolution(c, -0.7, 0.05)
    np.testing.assert_allclose(out, 3.0 / 0.7, rtol=1e-13)


def test_pencil_equivalence_random_models():
    kinds = ["GNL_MIN", "GNL_RICH", "LDG_MIN", "NONCHAR"]
    for i in range(20):
        kind = kinds[i % 4]
        n = 5 + (i % 8)
        m = generate_synthetic(kind, 100 + i, n)
        d = build_decomposition(m)
        o = pencil_trichotomy(m)
        assert np.abs(d.P_c - o.P_c).max() <= 1e-9
        assert o.dims[0] == d.p + d.r
        # chain heights: kernel of M has dim p, generalized kernel p + r
        assert o.kernel_dims[0] == d.p and o.kernel_dims[1] == d.p + d.r
