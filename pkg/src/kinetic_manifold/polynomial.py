"""Dense truncated multivariate polynomial maps.

A vector-valued polynomial in ``d`` variables of total degree at most ``k``
is stored as a coefficient array of shape ``(N, out)``, one row per monomial,
in graded-lexicographic order (by degree, then lexicographically descending
exponents within a degree).
"""

from __future__ import annotations

from itertools import combinations_with_replacement

import numpy as np

__all__ = ["MonomialTable"]


def _exponents(d: int, deg: int):
    out = set()
    for combo in combinations_with_replacement(range(d), deg):
        e = [0] * d
        for i in combo:
            e[i] += 1
        out.add(tuple(e))
    return sorted(out, reverse=True)


class MonomialTable:
    def __init__(self, d: int, k: int):
        self.d, self.k = d, k
        self.exponents = [e for deg in range(k + 1) for e in _exponents(d, deg)]
        self.index = {e: i for i, e in enumerate(self.exponents)}
        self.N = len(self.exponents)
        E = np.array(self.exponents, dtype=int).reshape(self.N, d)
        self.E = E
        self.degree = E.sum(axis=1)
        prod = -np.ones((self.N, self.N), dtype=int)
        for a, ea in enumerate(self.exponents):
            for b, eb in enumerate(self.exponents):
                if self.degree[a] + self.degree[b] <= k:
                    prod[a, b] = self.index[tuple(x + y for x, y in zip(ea, eb))]
        self.prod = prod
        self._valid = prod >= 0
        # derivative maps: d/dw_i sends monomial a to (a_i, a - e_i)
        self.dsrc, self.ddst, self.dfac = [], [], []
        for i in range(d):
            src, dst, fac = [], [], []
            for a, ea in enumerate(self.exponents):
                if ea[i] > 0:
                    eb = list(ea)
                    eb[i] -= 1
                    src.append(a)
                    dst.append(self.index[tuple(eb)])
                    fac.append(ea[i])
            self.dsrc.append(np.array(src, int))
            self.ddst.append(np.array(dst, int))
            self.dfac.append(np.array(fac, float))

    # ---------------------------------------------------------- constructors

    def zeros(self, out: int) -> np.ndarray:
        return np.zeros((self.N, out))

    def linear(self, M: np.ndarray) -> np.ndarray:
        """Polynomial ``w -> M w``."""
        M = np.atleast_2d(M)
        P = self.zeros(M.shape[0])
        for i in range(self.d):
            e = [0] * self.d
            e[i] = 1
            P[self.index[tuple(e)]] = M[:, i]
        return P

    def degree_mask(self, degs) -> np.ndarray:
        return np.isin(self.degree, np.atleast_1d(degs))

    # ---------------------------------------------------------- algebra

    def _scatter(self, T: np.ndarray) -> np.ndarray:
        """Sum ``T[a, b]`` into monomial ``a + b`` (dropping degree overflow)."""
        out = np.zeros((self.N,) + T.shape[2:])
        np.add.at(out, self.prod[self._valid], T[self._valid])
        return out

    def bilinear(self, B: np.ndarray, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
        """``B(P(w), Q(w))`` for a tensor ``B[k, i, j]``."""
        T = np.einsum("kij,ai,bj->abk", B, P, Q)
        return self._scatter(T)

    def times_scalar(self, P: np.ndarray, s: np.ndarray) -> np.ndarray:
        """Product of a vector polynomial ``P`` with a scalar polynomial ``s``."""
        T = P[:, None, :] * s[None, :, None]
        return self._scatter(T)

    def partial(self, P: np.ndarray, i: int) -> np.ndarray:
        out = np.zeros_like(P)
        np.add.at(out, self.ddst[i], P[self.dsrc[i]] * self.dfac[i][:, None])
        return out

    def directional(self, P: np.ndarray, V: np.ndarray) -> np.ndarray:
        """``P'(w) V(w)`` for a polynomial vector field ``V`` with ``d`` components."""
        out = np.zeros_like(P)
        for i in range(self.d):
            out += self.times_scalar(self.partial(P, i), V[:, i])
        return out

    # ---------------------------------------------------------- evaluation

    def monomials(self, W: np.ndarray) -> np.ndarray:
        W = np.atleast_2d(np.asarray(W, float))
        return np.prod(W[:, None, :] ** self.E[None, :, :], axis=2)

    def evaluate(self, P: np.ndarray, W) -> np.ndarray:
        W = np.asarray(W, float)
        single = W.ndim == 1
        out = self.monomials(W) @ P
        return out[0] if single else out
