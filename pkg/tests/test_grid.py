import numpy as np
import pytest

from kinetic_manifold import GridFunction, ModelError, uniform_grid


def test_uniform_grid_requires_odd():
    with pytest.raises(ModelError):
        uniform_grid(1.0, 10)
    with pytest.raises(ModelError):
        uniform_grid(1.0, 3)
    x = uniform_grid(2.0, 9)
    assert x[4] == 0.0 and x[0] == -2.0 and x[-1] == 2.0


def test_csv_roundtrip():
    g = GridFunction.from_callable(1.5, 11, lambda x: np.column_stack([np.sin(x), x**2]))
    text = g.to_csv()
    assert text.splitlines()[0] == "x, w_1, w_2"
    h = GridFunction.from_csv(text)
    assert h.L == g.L and np.array_equal(h.values, g.values)


def test_binary_roundtrip():
    g = GridFunction.from_callable(3.0, 21, lambda x: np.column_stack([np.cos(x), x, -x]))
    blob = g.to_bytes()
    assert blob[:4] == b"KMGF"
    h = GridFunction.from_bytes(blob)
    assert h.L == g.L and np.array_equal(h.values, g.values)


def test_binary_rejects_bad_magic():
    g = GridFunction.constant(1.0, 5, np.ones(2))
    with pytest.raises(ModelError):
        GridFunction.from_bytes(b"XXXX" + g.to_bytes()[4:])


def test_arithmetic_and_center():
    g = GridFunction.constant(1.0, 7, np.array([1.0, 2.0]))
    h = (g + g) * 0.5 - g
    assert np.all(h.values == 0)
    assert np.array_equal(g.at_zero(), [1.0, 2.0])


def test_rejects_nonfinite():
    with pytest.raises(ModelError):
        GridFunction(1.0, np.full((5, 1), np.nan))
