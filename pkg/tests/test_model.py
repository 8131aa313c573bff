import json

import numpy as np
import pytest

from kinetic_manifold import (KineticModel, ModelError, apply_dQ, apply_Q, classify, dump_model,
                              generate_synthetic, load_model, verify_hypotheses)
from kinetic_manifold.model import apply_B
from kinetic_manifold.oracles import fd_jacobian
from kinetic_manifold.registry import REGISTRY, golden_report, write_registry


def mutate(model, **kw):
    fields = dict(gram=model.gram, A=model.A, B=model.B, u_bar=model.u_bar,
                  v_perp_basis=model.v_perp_basis, name=model.name)
    fields.update(kw)
    return KineticModel(**fields)


def test_registry_gnl_min_shape(models, decs):
    m = models["gnl-min"]
    assert m.dim == 5
    assert decs["gnl-min"].p == 2  # two conserved directions, see README


def test_load_empty_state_space():
    data = {"name": "e", "dim": 0, "gram": [], "A": [], "B": [], "u_bar": [], "v_perp_basis": []}
    with pytest.raises(ModelError, match="empty state space"):
        load_model(json.dumps(data))


def test_load_asymmetric_gram(models):
    data = json.loads(dump_model(models["gnl-min"]))
    data["gram"][1] += 0.5
    with pytest.raises(ModelError, match="not symmetric"):
        load_model(json.dumps(data))


def test_load_dimension_mismatch(models):
    data = json.loads(dump_model(models["gnl-min"]))
    data["A"] = data["A"][:-1]
    with pytest.raises(ModelError, match="dimension mismatch"):
        load_model(json.dumps(data))


def test_load_schema_violation():
    with pytest.raises(ModelError, match="schema"):
        load_model(b'{"name": "x"}')


def test_load_symmetrizes_B(models):
    m = models["gnl-min"]
    data = json.loads(dump_model(m))
    B = np.array(data["B"]).reshape(5, 5, 5)
    skew = np.random.default_rng(0).standard_normal((5, 5, 5))
    data["B"] = (B + skew - skew.transpose(0, 2, 1)).ravel().tolist()
    m2 = load_model(json.dumps(data).encode())
    np.testing.assert_allclose(m2.B, m.B, atol=1e-14)


def test_dump_roundtrip(models):
    for m in models.values():
        m2 = load_model(dump_model(m))
        assert np.array_equal(m2.B, m.B) and np.array_equal(m2.A, m.A)


@pytest.mark.parametrize("name", list(REGISTRY))
def test_registry_passes_and_matches_golden(models, name):
    rep = verify_hypotheses(models[name])
    assert rep.passed and rep.delta > 0 and not rep.violations
    gold = golden_report(name)
    assert gold["pass"]
    assert rep.delta == pytest.approx(gold["delta"], rel=1e-10)


def test_registry_files_regenerate_identically(tmp_path):
    from importlib import resources

    write_registry(tmp_path)
    for name in REGISTRY:
        shipped = resources.files("kinetic_manifold").joinpath("data", f"{name}.json").read_text()
        assert (tmp_path / f"{name}.json").read_text() == shipped


def test_injectivity_violation(models):
    m = models["gnl-min"]
    bad = mutate(m, A=m.A @ np.diag([1, 1, 1, 1, 0.0]))
    rep = verify_hypotheses(bad)
    assert not rep.passed
    v = [v for v in rep.violations if v.tag == "H1(i)-injective"]
    assert v and v[0].witness < 1e-12


def test_equilibrium_violation(models):
    m = models["gnl-min"]
    u = m.u_bar + 0.1 * np.arange(5)
    rep = verify_hypotheses(mutate(m, u_bar=u))
    v = [v for v in rep.violations if v.tag == "H2-equilibrium"]
    assert v
    assert v[0].witness == pytest.approx(float(m.norm(apply_Q(m, u))), rel=1e-12)


def test_asymmetric_B_violation(models):
    m = models["gnl-min"]
    B = np.array(m.B)
    B[2, 0, 1] += 0.3
    rep = verify_hypotheses(mutate(m, B=B))
    assert "H1(ii)-symmetric" in rep.tags


def test_report_pure_and_serializable(models):
    m = models["ldg-min"]
    a, b = verify_hypotheses(m), verify_hypotheses(m)
    assert a == b
    assert a.to_dict()["pass"] is True


def test_apply_Q_basics(models, rng):
    m = models["gnl-min"]
    assert np.abs(apply_Q(m, m.u_bar)).max() < 1e-12
    w = rng.standard_normal(5)
    assert np.abs(apply_dQ(m, w, np.zeros(5))).max() == 0.0
    for s in (-2.0, 0.5, 3.0):
        np.testing.assert_allclose(apply_Q(m, s * w), s * s * apply_Q(m, w), rtol=1e-13, atol=1e-14)


def test_apply_Q_quadratic_exactness(models, rng):
    m = models["gnl-rich"]
    w = rng.standard_normal(m.dim)
    t = 0.7
    second = (apply_Q(m, m.u_bar + t * w) - 2 * apply_Q(m, m.u_bar) + apply_Q(m, m.u_bar - t * w)) / t**2
    np.testing.assert_allclose(second, 2 * apply_Q(m, w), atol=1e-12)
    J = fd_jacobian(lambda x: apply_Q(m, x), m.u_bar)
    np.testing.assert_allclose(J, m.dQ_matrix(), atol=1e-10)


def test_dimension_mismatch_on_apply(models):
    with pytest.raises(ModelError):
        apply_Q(models["gnl-min"], np.zeros(3))


def test_dQ_selfadjoint(models, rng):
    for m in models.values():
        for _ in range(10):
            w, h = rng.standard_normal((2, m.dim))
            lhs = m.inner(apply_dQ(m, m.u_bar, w), h)
            rhs = m.inner(w, apply_dQ(m, m.u_bar, h))
            assert abs(lhs - rhs) < 1e-12 * np.linalg.cond(m.gram) * 10


def test_range_orthogonal_to_v_perp(models, rng):
    for m in models.values():
        W = rng.standard_normal((100, m.dim))
        proj = apply_B(m, W, W) @ m.gram @ m.v_perp_basis.T
        assert np.abs(proj).max() < 1e-11


@pytest.mark.parametrize("kind,seed,n,case", [
    ("GNL_MIN", 7, 5, "SimpleGNL"),
    ("GNL_RICH", 11, 8, "SimpleGNL"),
    ("LDG_MIN", 3, 6, "LinearlyDegenerate"),
    ("NONCHAR", 1, 6, "Noncharacteristic"),
    ("GNL_MIN", 21, 7, "SimpleGNL"),
    ("NONCHAR", 5, 4, "Noncharacteristic"),
])
def test_generate_synthetic_cases(kind, seed, n, case):
    m = generate_synthetic(kind, seed, n)
    assert verify_hypotheses(m).passed
    assert classify(m).case == case


def test_generate_synthetic_rejects_small_n():
    with pytest.raises(ModelError):
        generate_synthetic("GNL_RICH", 0, 4)


def test_generate_synthetic_deterministic():
    a, b = generate_synthetic("GNL_MIN", 7, 5), generate_synthetic("GNL_MIN", 7, 5)
    assert dump_model(a) == dump_model(b)
