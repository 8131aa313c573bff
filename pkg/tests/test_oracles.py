import numpy as np

from kinetic_manifold import rankine_hugoniot, registry_model
from kinetic_manifold.oracles import bvp_full_shoot, fd_jacobian, pencil_trichotomy


def test_pencil_dims(models, decs):
    assert pencil_trichotomy(models["gnl-min"]).dims[0] == 3
    o = pencil_trichotomy(models["gnl-min"])
    assert sum(o.dims) == models["gnl-min"].dim
    o = pencil_trichotomy(models["nonchar"])
    assert o.dims[0] == decs["nonchar"].p


def test_pencil_projections_partition(models):
    o = pencil_trichotomy(models["gnl-rich"])
    n = models["gnl-rich"].dim
    np.testing.assert_allclose(o.P_c + o.P_s + o.P_u, np.eye(n), atol=1e-10)
    for P in (o.P_c, o.P_s, o.P_u):
        np.testing.assert_allclose(P @ P, P, atol=1e-9)


def test_bvp_zero_amplitude(models):
    g = bvp_full_shoot(models["gnl-min"], 0.0, 50.0, 101)
    assert np.all(g.values == 0)


def test_bvp_conserves_flux_and_connects_endstates(models, decs):
    m, d = models["gnl-min"], decs["gnl-min"]
    um, up, _ = rankine_hugoniot(m, 0.05)
    g = bvp_full_shoot(m, 0.05, 350.0, 2001)
    C = d.to_coords(g.values)
    fl = C @ d.A_c[: d.p].T
    assert np.ptp(fl, axis=0).max() <= 1e-9
    u = C[:, : d.p]
    np.testing.assert_allclose(u[0], d.to_coords(um)[: d.p], atol=1e-6)
    np.testing.assert_allclose(u[-1], d.to_coords(up)[: d.p], atol=1e-6)


def test_fd_jacobian_exact_for_cubics(rng):
    M = rng.standard_normal((3, 4))
    np.testing.assert_allclose(fd_jacobian(lambda x: M @ x, np.ones(4)), M, atol=1e-12)
    f = lambda x: np.array([x[0] ** 3, x[0] * x[1]])  # noqa: E731
    J = fd_jacobian(f, np.array([0.5, 2.0]))
    np.testing.assert_allclose(J, [[0.75, 0.0], [2.0, 0.5]], atol=1e-12)
