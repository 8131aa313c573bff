import numpy as np
import pytest

from kinetic_manifold import GridFunction, ModelError, WeightParams, norm_h1w, norm_l2w, norm_z
from kinetic_manifold.center_manifold import cutoff_nonlinearity
from kinetic_manifold.weighted import (SmoothMap, derivative, fit_slope, sobolev_embedding_check,
                                       substitution_frechet_check)

P = WeightParams(0.05, 0.1, 0.25)


def smooth(L, m, rng, n=2):
    freq, amp, ph = rng.uniform(0, 1.5, 3), rng.standard_normal((3, n)), rng.uniform(0, 6, 3)
    return GridFunction.from_callable(L, m, lambda x: sum(np.cos(f * x + p)[:, None] * a
                                                          for f, a, p in zip(freq, amp, ph)))


def test_weight_invariants():
    with pytest.raises(ModelError):
        WeightParams(0.2, 0.1, 0.3)
    with pytest.raises(ModelError):
        WeightParams(0.1, 0.2, 0.3)  # 2 alpha = beta - gamma
    with pytest.raises(ModelError):
        P.check_rate(0.4)
    P.check_rate(0.6)


def test_derivative_examples():
    x = GridFunction.from_callable(2.0, 41, lambda x: x[:, None])
    np.testing.assert_allclose(derivative(x).values, 1.0, atol=1e-12)
    s = GridFunction.from_callable(np.pi, 201, lambda x: np.sin(x)[:, None])
    assert np.abs(derivative(s).values[:, 0] - np.cos(s.x)).max() <= 1e-7
    c = GridFunction.constant(1.0, 9, np.array([3.0]))
    assert np.abs(derivative(c).values).max() < 1e-13


def test_norm_of_constant():
    w = 0.5
    L = 10 / w
    f = GridFunction.constant(L, 4001, np.array([2.0]))
    assert norm_l2w(f, w) ** 2 == pytest.approx(4.0 / w, rel=0.01)
    assert norm_l2w(GridFunction.constant(L, 11, np.zeros(2)), w) == 0.0


def test_norm_properties(rng):
    f = smooth(30.0, 1001, rng)
    for s in (-1.0, 0.5, 4.0):
        assert norm_l2w(f * s, 0.1) == pytest.approx(abs(s) * norm_l2w(f, 0.1), rel=1e-13)
        assert norm_z(f * s, P) == pytest.approx(abs(s) * norm_z(f, P), rel=1e-13)
    assert norm_l2w(f, 0.05) >= norm_l2w(f, 0.2)
    assert norm_l2w(f, P.gamma) <= norm_z(f, P)
    h1 = norm_h1w(f, 0.1)
    assert h1**2 == pytest.approx(norm_l2w(f, 0.1) ** 2 + norm_l2w(derivative(f), 0.1) ** 2, rel=1e-14)
    # the mixed norm dominates the H1 norm at the stronger weight
    assert norm_z(f, WeightParams(0.02, 0.1, 0.2)) >= norm_h1w(f, 0.2) * (1 - 1e-14)


def test_norm_with_gram(rng):
    G = np.array([[2.0, 0.3], [0.3, 1.0]])
    f = smooth(10.0, 201, rng)
    Lc = np.linalg.cholesky(G)
    g = GridFunction(10.0, f.values @ Lc)
    assert norm_l2w(f, 0.1, G) == pytest.approx(norm_l2w(g, 0.1), rel=1e-13)


def test_sobolev_embedding(rng):
    zero = GridFunction.constant(20.0, 401, np.zeros(2))
    assert sobolev_embedding_check(zero, P)["constant"] == 0.0
    bound = 2.0 * max(2 * P.beta + 1, 2.0)
    for _ in range(200):
        f = smooth(40.0, 801, rng)
        assert sobolev_embedding_check(f, P)["constant"] <= bound


def test_sobolev_spike_refinement():
    vals = []
    for m in (801, 1601, 3201):
        f = GridFunction.from_callable(20.0, m, lambda x: np.exp(-(x / 0.3) ** 2)[:, None])
        vals.append(sobolev_embedding_check(f, P)["constant"])
    assert np.isfinite(vals).all()
    assert abs(vals[-1] - vals[-2]) <= 1e-3 * vals[-1]


def test_frechet_linear_map(rng):
    M = rng.standard_normal((2, 2))
    N = SmoothMap(lambda V: V @ M.T, lambda V, D: D @ M.T)
    f0, f = smooth(20.0, 401, rng), smooth(20.0, 401, rng)
    out = substitution_frechet_check(N, f0, f, P)
    assert out["residuals"].max() <= 1e-13 * out["steps"].max()
    same = substitution_frechet_check(N, f0, f0, P)
    assert same["residuals"].max() == 0.0


def test_frechet_exponent_cutoff(models):
    m = models["gnl-min"]
    N = cutoff_nonlinearity(m, 0.1)
    L = 40.0
    f0 = GridFunction.from_callable(L, 1601, lambda x: (0.08 * np.tanh(x / 5))[:, None] * m.u_bar / m.norm(m.u_bar))
    dirv = np.arange(1.0, 6.0)
    f = GridFunction(L, f0.values + np.exp(-(f0.x / 10) ** 2)[:, None] * 0.05 * dirv / m.norm(dirv))
    out = substitution_frechet_check(N, f0, f, P, gram=m.gram)
    assert out["exponent"] >= 1.5


def test_fit_slope():
    xs = np.array([1.0, 2.0, 4.0])
    s, r = fit_slope(xs, 3 * xs**2)
    assert s == pytest.approx(2.0) and r < 1e-12


def test_mixed_norm_equal_weights(rng):
    from types import SimpleNamespace

    f = smooth(30.0, 1001, rng)
    same = SimpleNamespace(alpha=0.05, gamma=0.2, beta=0.2)
    assert norm_z(f, same) <= norm_h1w(f, 0.2) * (1 + 1e-14)
