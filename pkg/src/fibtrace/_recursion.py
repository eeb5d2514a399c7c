"""Vectorised trace-polynomial recursion and the golden circle potential.

Everything here evaluates x_k(E) by the three-term recursion
x_{k+1} = 2 x_k x_{k-1} - x_{k-2} with seeds x_{-1} = 1, x_0 = E/2,
x_1 = (E - lam)/2; polynomial coefficients are never formed.
"""

from __future__ import annotations

import math

import numpy as np

# Inverse golden ratio, the circle frequency of the potential.
ALPHA = (math.sqrt(5.0) - 1.0) / 2.0

_FIB_CACHE = [1, 1]


def fibonacci(k: int) -> int:
    """F_k with the degree convention F_0 = F_1 = 1, F_2 = 2 (deg x_k = F_k)."""
    if k < 0:
        raise ValueError("fibonacci index must be >= 0")
    while len(_FIB_CACHE) <= k:
        _FIB_CACHE.append(_FIB_CACHE[-1] + _FIB_CACHE[-2])
    return _FIB_CACHE[k]


def potential_values(lam: float, omega: float, sites) -> np.ndarray:
    """lam * chi_[1-alpha, 1)(n alpha + omega mod 1) on an array of sites."""
    n = np.asarray(sites, dtype=float)
    frac = (n * ALPHA + omega) % 1.0
    return np.where(frac >= 1.0 - ALPHA, lam, 0.0)


def seed_triple(lam, energy):
    """(x_1, x_0, x_-1) at the given energy; energy may be an array or complex."""
    e = np.asarray(energy)
    if not np.issubdtype(e.dtype, np.complexfloating):
        e = e.astype(float)
    return (e - lam) / 2.0, e / 2.0, np.ones_like(e)


def xk_value(lam: float, energy, k: int):
    """x_k(E), vectorised over E (real or complex)."""
    x1, x0, xm1 = seed_triple(lam, energy)
    if k == -1:
        return xm1
    if k == 0:
        return x0
    a, b, c = x1, x0, xm1          # x_j, x_{j-1}, x_{j-2} with j = 1
    for _ in range(k - 1):
        a, b, c = 2.0 * a * b - c, a, b
    return a


def xk_and_derivative(lam: float, energy, k: int):
    """(x_k(E), x_k'(E)) with the derivative carried through the recursion."""
    x1, x0, xm1 = seed_triple(lam, energy)
    d1 = np.full_like(np.asarray(x1), 0.5)
    d0 = np.full_like(np.asarray(x0), 0.5)
    dm1 = np.zeros_like(np.asarray(xm1))
    if k == -1:
        return xm1, dm1
    if k == 0:
        return x0, d0
    a, b, c = x1, x0, xm1
    da, db, dc = d1, d0, dm1
    for _ in range(k - 1):
        a, b, c, da, db, dc = (
            2.0 * a * b - c,
            a,
            b,
            2.0 * (da * b + a * db) - dc,
            da,
            db,
        )
    return a, da


def xk_table(lam: float, energy, k: int) -> np.ndarray:
    """All of x_{-1}, ..., x_k stacked as rows; row j holds x_{j-1}."""
    e = np.atleast_1d(np.asarray(energy))
    x1, x0, xm1 = seed_triple(lam, e)
    out = np.empty((k + 2,) + e.shape, dtype=x0.dtype)
    out[0] = xm1
    out[1] = x0
    if k >= 1:
        out[2] = x1
    for j in range(3, k + 2):
        out[j] = 2.0 * out[j - 1] * out[j - 2] - out[j - 3]
    return out
