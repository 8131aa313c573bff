"""Uniformly sampled functions on a symmetric interval, with file IO."""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ModelError

__all__ = ["GridFunction", "uniform_grid"]

_MAGIC = b"KMGF"
_VERSION = 1


def uniform_grid(L: float, m: int) -> np.ndarray:
    if m < 5 or m % 2 == 0:
        raise ModelError("grid node count must be odd and at least 5")
    if not L > 0:
        raise ModelError("grid half-width must be positive")
    return np.linspace(-L, L, m)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a vector-valued function on ``m`` uniform nodes of ``[-L, L]``.

    ``values`` has shape ``(m, n)``.  ``m`` is odd so ``x = 0`` is the middle
    node.
    """

    L: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        uniform_grid(self.L, v.shape[0])
        if not np.all(np.isfinite(v)):
            raise ModelError("grid function has non-finite values")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "L", float(self.L))

    @classmethod
    def from_callable(cls, L: float, m: int, fn) -> "GridFunction":
        x = uniform_grid(L, m)
        return cls(L, np.asarray(fn(x), float).reshape(m, -1))

    @classmethod
    def constant(cls, L: float, m: int, vec) -> "GridFunction":
        vec = np.atleast_1d(np.asarray(vec, float))
        return cls(L, np.tile(vec, (m, 1)))

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def h(self) -> float:
        return 2.0 * self.L / (self.m - 1)

    @property
    def x(self) -> np.ndarray:
        return uniform_grid(self.L, self.m)

    @property
    def center(self) -> int:
        return self.m // 2

    def at_zero(self) -> np.ndarray:
        return self.values[self.center].copy()

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.L, values)

    def map(self, matrix) -> "GridFunction":
        """Apply a linear map nodewise: ``values @ matrix.T``."""
        return GridFunction(self.L, self.values @ np.asarray(matrix).T)

    def __add__(self, other):
        if isinstance(other, GridFunction):
            self._check_compatible(other)
            return GridFunction(self.L, self.values + other.values)
        return GridFunction(self.L, self.values + other)

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            self._check_compatible(other)
            return GridFunction(self.L, self.values - other.values)
        return GridFunction(self.L, self.values - other)

    def __mul__(self, s):
        return GridFunction(self.L, self.values * s)

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.L, -self.values)

    def _check_compatible(self, other):
        if other.m != self.m or abs(other.L - self.L) > 1e-14 * self.L:
            raise ModelError("grid functions live on different grids")

    # ------------------------------------------------------------ IO

    def to_csv(self, columns=None) -> str:
        cols = columns or [f"w_{i + 1}" for i in range(self.n)]
        buf = io.StringIO()
        buf.write(", ".join(["x", *cols]) + "\n")
        data = np.column_stack([self.x, self.values])
        np.savetxt(buf, data, delimiter=", ", fmt="%.17g")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GridFunction":
        data = np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1, ndmin=2)
        x = data[:, 0]
        return cls(float(x[-1]), data[:, 1:])

    def to_bytes(self) -> bytes:
        head = _MAGIC + struct.pack("<IdII", _VERSION, self.L, self.m, self.n)
        return head + np.ascontiguousarray(self.values, dtype="<f8").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "GridFunction":
        if blob[:4] != _MAGIC:
            raise ModelError("not a KMGF grid file")
        version, L, m, n = struct.unpack("<IdII", blob[4:24])
        if version != _VERSION:
            raise ModelError(f"unsupported KMGF version {version}")
        vals = np.frombuffer(blob[24:], dtype="<f8")
        if vals.size != m * n:
            raise ModelError("truncated KMGF payload")
        return cls(L, vals.reshape(m, n).copy())
