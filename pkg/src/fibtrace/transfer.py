"""Transfer-matrix cocycles at complex energy and their power-law growth.

M(n; omega, z) is the ordered product of one-step matrices
[[z - V(l), -1], [1, 0]] over sites l = 1..n (inverses for n <= -1) with
the golden circle potential V.  On the level-k band sets the norms obey
||M(n)|| <= C n^xi; the module fits the empirical exponent and evaluates
the explicit sufficient threshold built from the largest root of
x^3 - (2 + lambda) x - 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from fibtrace._recursion import ALPHA, fibonacci, potential_values, xk_value
from fibtrace.serialize import csv_text
from fibtrace.trace_map import LOG_PHI

GOLDEN_FREQUENCY = ALPHA


@dataclass
class PowerLawFit:
    """Least-squares power-law exponent of log||M(n)|| against log n."""

    lam: float
    omega: float
    z: complex
    n_max: int
    samples: np.ndarray = field(repr=False)   # columns (n, log||M(n)||)
    xi_hat: float = 0.0
    xi_bound: float = 0.0
    residual: float = 0.0


def potential(omega: float, n, lam: float):
    """lam * chi_[1-alpha,1)(n alpha + omega mod 1); vectorised over n."""
    v = potential_values(lam, omega, n)
    return float(v) if np.ndim(n) == 0 else v


def fibonacci_word(length: int) -> np.ndarray:
    """0/1 prefix of the substitution word a -> ab, b -> a (a mapped to 1).

    Matches the zero-phase potential: entry j is 1 exactly when site j+1
    carries the coupling.
    """
    word = [1]
    while len(word) < length:
        word = [c for s in word for c in ((1, 0) if s == 1 else (1,))]
    return np.array(word[:length])


def transfer_matrix(lam: float, omega: float, z: complex, site: int) -> np.ndarray:
    """Single factor [[z - V(site), -1], [1, 0]]."""
    v = float(potential_values(lam, omega, site))
    return np.array([[z - v, -1.0], [1.0, 0.0]], dtype=complex)


def _inverse_factor(lam, omega, z, site):
    v = float(potential_values(lam, omega, site))
    return np.array([[0.0, 1.0], [-1.0, z - v]], dtype=complex)


def transfer_product(lam: float, omega: float, z: complex, n: int,
                     dtype=complex) -> np.ndarray:
    """M(n; omega, z): T(n)...T(1) for n >= 1, T(n)^-1...T(-1)^-1 for n <= -1."""
    if n == 0:
        raise ValueError("transfer_product needs n != 0")
    m = np.eye(2, dtype=dtype)
    if n >= 1:
        for site in range(1, n + 1):
            m = np.asarray(transfer_matrix(lam, omega, z, site), dtype=dtype) @ m
    else:
        for site in range(-1, n - 1, -1):
            m = np.asarray(_inverse_factor(lam, omega, z, site), dtype=dtype) @ m
    return m


def matrix_norm_2x2(m: np.ndarray) -> float:
    """Operator 2-norm of a 2x2 matrix from its singular values in closed form."""
    f = float(np.abs(m[0, 0]) ** 2 + np.abs(m[0, 1]) ** 2
              + np.abs(m[1, 0]) ** 2 + np.abs(m[1, 1]) ** 2)
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    disc = max(f * f - 4.0 * float(np.abs(det)) ** 2, 0.0)
    return math.sqrt((f + math.sqrt(disc)) / 2.0)


def transfer_norms(lam: float, omega: float, z: complex, n_max: int) -> np.ndarray:
    """||M(n)|| for n = 1..n_max, accumulated incrementally."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    sites = np.arange(1, n_max + 1)
    v = potential_values(lam, omega, sites)
    norms = np.empty(n_max)
    m = np.eye(2, dtype=complex)
    for i in range(n_max):
        m = np.array([[z - v[i], -1.0], [1.0, 0.0]], dtype=complex) @ m
        norms[i] = matrix_norm_2x2(m)
    return norms


def half_trace_check(lam: float, z: complex, k: int) -> float:
    """|(1/2) tr M(F_k; 0, z) - x_k(z)|, the two sides computed independently.

    The matrix product accumulates in 80-bit precision so that the
    comparison is limited by the recursion side.
    """
    n = fibonacci(k)
    v = potential_values(lam, 0.0, np.arange(1, n + 1))
    m = np.eye(2, dtype=np.clongdouble)
    zl = np.clongdouble(z)
    for i in range(n):
        m = np.array([[zl - v[i], -1.0], [1.0, 0.0]], dtype=np.clongdouble) @ m
    half_trace = complex((m[0, 0] + m[1, 1]) / 2.0)
    xk = complex(xk_value(lam, complex(z), k))
    return abs(half_trace - xk)


def largest_cubic_root(lam: float) -> float:
    """Largest real root of x^3 - (2 + lambda) x - 1, by the trigonometric solve."""
    p = -(2.0 + lam)
    q = -1.0
    # three real roots guaranteed: 4p^3 + 27q^2 < 0 for lam >= 0
    m = 2.0 * math.sqrt(-p / 3.0)
    theta = math.acos(3.0 * q / (2.0 * p) * math.sqrt(-3.0 / p))
    return m * math.cos(theta / 3.0)


def xi_threshold(lam: float) -> float:
    """Sufficient power-law exponent 2 log[(5+2 lam)^(1/2) (3+lam) a_lam] / log phi."""
    a = largest_cubic_root(lam)
    return 2.0 * math.log(math.sqrt(5.0 + 2.0 * lam) * (3.0 + lam) * a) / LOG_PHI


def empirical_xi(lam: float, omega: float, z: complex, n_max: int) -> PowerLawFit:
    """Fit log||M(n)|| against log n over the window [n_max/10, n_max].

    The fitted slope is an empirical growth exponent for z inside a band
    set; the companion threshold is recorded for comparison but no
    tightness is implied.
    """
    norms = transfer_norms(lam, omega, z, n_max)
    n = np.arange(1, n_max + 1)
    lo = max(2, n_max // 10)
    sel = n >= lo
    x = np.log(n[sel])
    y = np.log(norms[sel])
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    samples = np.column_stack((n[sel], y))
    return PowerLawFit(lam=lam, omega=omega, z=complex(z), n_max=n_max,
                       samples=samples, xi_hat=float(slope),
                       xi_bound=xi_threshold(lam), residual=resid)


def fits_to_csv(fits) -> str:
    """CSV rows (lambda, omega, re z, im z, n_max, xi_hat, xi_bound, residual)."""
    rows = [(f.lam, f.omega, f.z.real, f.z.imag, f.n_max, f.xi_hat,
             f.xi_bound, f.residual) for f in fits]
    return csv_text(("lambda", "omega", "re_z", "im_z", "n_max",
                     "xi_hat", "xi_bound", "residual"), rows)
