"""Trace polynomials x_k(E): orbits, zeros, derivative growth, real bands.

x_k is the half-trace of the transfer matrix over the first F_k sites at
zero phase; it satisfies x_{k+1} = 2 x_k x_{k-1} - x_{k-2} and has exactly
F_k real simple zeros.  The zero with the longest terminal shadow of the
period-6 orbit carries the derivative growth rate d(lambda); the real
interval of |x_k| <= 1 + delta around it is its spectral band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from fibtrace._recursion import (
    fibonacci,
    potential_values,
    xk_and_derivative,
    xk_table,
    xk_value,
)
from fibtrace.serialize import csv_text
from fibtrace.trace_map import growth_rate, six_cycle

OVERFLOW_CAP = 1e100


class ZeroCountError(ArithmeticError):
    """Raised when the zero set of x_k fails its structural certificate."""


@dataclass
class TraceSequence:
    """Values x_k(E) and derivatives x_k'(E) along the orbit of one energy.

    ``ks`` runs from -1 upward; ``escaped_at`` is the first index at which
    the escape rule fired (two consecutive traces above 1 in modulus), or
    None for a bounded run.  If the recursion was continued past the
    floating-point range (escape detection disabled), the overflowed tail
    is stored as (k, sign, log|x_k|) triples in ``log_tail``.
    """

    lam: float
    energy: float
    ks: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray
    escaped_at: int | None = None
    log_tail: list = field(default_factory=list)

    def value(self, k: int) -> float:
        return float(self.values[k + 1])

    def derivative(self, k: int) -> float:
        return float(self.derivatives[k + 1])


@dataclass
class KeyZero:
    """A zero of x_k selected by its terminal shadowing of the 6-cycle."""

    k: int
    energy_k: float
    derivative: float
    rate: float
    shadow_length: int


@dataclass
class Band:
    """Maximal real interval [lo, hi] on which |x_k| <= 1 + delta."""

    k: int
    delta: float
    lo: float
    hi: float
    zeros_inside: int
    lam: float = 0.0
    clipped: bool = False

    @property
    def length(self) -> float:
        return self.hi - self.lo


def iterate_traces(lam: float, energy: float, k_max: int,
                   escape_threshold: float = 1.0 + 1e-9,
                   precision: str = "double") -> TraceSequence:
    """Run the trace recursion with its derivative up to k_max.

    The run stops early when two consecutive traces satisfy
    |x_{k-1}| > 1 and |x_k| > escape_threshold, after which growth is
    monotone super-exponential; the index is recorded in ``escaped_at``.
    With escape detection disabled (threshold = inf) the recursion switches
    to sign/log tracking once |x_k| exceeds 1e100.

    precision: "double" for 64-bit floats, "extended" for 40-digit
    arithmetic (recommended for deep derivative recursions); stored values
    are rounded back to floats either way.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if not escape_threshold > 1.0:
        raise ValueError("escape_threshold must exceed 1")
    if precision == "extended":
        from mpmath import mp, mpf
        with mp.workdps(40):
            one, half = mpf(1), mpf("0.5")
            xs = [one, mpf(energy) / 2, (mpf(energy) - mpf(lam)) / 2]
            ds = [mpf(0), half, half]
            to_float = float
            return _run_recursion(lam, energy, k_max, escape_threshold,
                                  xs, ds, to_float)
    elif precision == "double":
        xs = [1.0, energy / 2.0, (energy - lam) / 2.0]
        ds = [0.0, 0.5, 0.5]
        return _run_recursion(lam, energy, k_max, escape_threshold,
                              xs, ds, float)
    raise ValueError(f"unknown precision {precision!r}")


def _run_recursion(lam, energy, k_max, escape_threshold, xs, ds, to_float):
    values = [to_float(x) for x in xs[:min(k_max, 1) + 2]]
    derivs = [to_float(d) for d in ds[:min(k_max, 1) + 2]]
    escaped_at = None
    log_tail = []
    k = 1
    # check the escape rule on the seeds as well
    for j in (0, 1):
        if j > k_max:
            break
        if abs(values[j]) > 1.0 and abs(values[j + 1]) > escape_threshold:
            escaped_at = j
            break
    while escaped_at is None and k < k_max and not log_tail:
        x = 2.0 * xs[2] * xs[1] - xs[0]
        d = 2.0 * (ds[2] * xs[1] + xs[2] * ds[1]) - ds[0]
        k += 1
        if abs(x) > OVERFLOW_CAP:
            # switch to sign/log tracking; derivatives are dropped from here
            cur = _sign_log(to_float(x))
            prev = _sign_log(to_float(xs[2]))
            older = _sign_log(to_float(xs[1]))
            log_tail.append((k, cur[0], cur[1]))
            for kk in range(k + 1, k_max + 1):
                cur, prev, older = _log_step(cur, prev, older), cur, prev
                log_tail.append((kk, cur[0], cur[1]))
            break
        xs = [xs[1], xs[2], x]
        ds = [ds[1], ds[2], d]
        values.append(to_float(x))
        derivs.append(to_float(d))
        if abs(values[-2]) > 1.0 and abs(values[-1]) > escape_threshold:
            escaped_at = k
            break
    ks = np.arange(-1, len(values) - 1)
    return TraceSequence(lam=lam, energy=energy, ks=ks,
                         values=np.array(values), derivatives=np.array(derivs),
                         escaped_at=escaped_at, log_tail=log_tail)


def _sign(x) -> int:
    return -1 if x < 0 else 1


def _sign_log(x: float) -> tuple[int, float]:
    if x == 0.0:
        return 1, -math.inf
    return _sign(x), math.log(abs(x))


def _log_step(cur, prev, older):
    """One recursion step on (sign, log|x|) representations."""
    s1, l1 = cur
    s0, l0 = prev
    sm, lm = older
    lp = math.log(2.0) + l1 + l0
    sp = s1 * s0
    if lm == -math.inf or lp - lm > 60.0:
        return sp, lp
    # 2 x_k x_{k-1} - x_{k-2} with both terms on comparable scales
    val = sp * math.exp(lp - lm) - sm
    if val == 0.0:
        return 1, -math.inf
    return _sign(val), lm + math.log(abs(val))


def trace_values(lam: float, energy, k: int):
    """x_k at one or many (real or complex) energies."""
    return xk_value(lam, energy, k)


def trace_and_derivative(lam: float, energy, k: int):
    """(x_k, x_k') at one or many (real or complex) energies."""
    return xk_and_derivative(lam, energy, k)


def _bloch_matrix(lam: float, k: int) -> np.ndarray:
    """Hermitian F_k-site operator whose spectrum is the zero set of x_k.

    Periodising the first F_k sites of the zero-phase potential with Bloch
    phase pi/2 turns the half-trace condition x_k(E) = cos(pi/2) = 0 into a
    Hermitian eigenvalue problem, so all F_k zeros come out of one
    eigensolve with certified count.
    """
    p = fibonacci(k)
    h = np.zeros((p, p), dtype=complex)
    np.fill_diagonal(h, potential_values(lam, 0.0, np.arange(1, p + 1)))
    idx = np.arange(p - 1)
    h[idx, idx + 1] += 1.0
    h[idx + 1, idx] += 1.0
    h[0, p - 1] += -1.0j
    h[p - 1, 0] += 1.0j
    return h


def zeros_of_xk(lam: float, k: int, root_tol: float = 1e-12) -> np.ndarray:
    """All F_k zeros of x_k, sorted increasing.

    Eigenvalues of the Bloch periodisation provide the complete zero set;
    each is then polished with two Newton steps of the trace recursion and
    certified by a sign change of x_k across a bracket that separates it
    from its neighbours.  A failed certificate raises ZeroCountError.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    zeros = np.linalg.eigvalsh(_bloch_matrix(lam, k))
    for _ in range(2):
        val, der = xk_and_derivative(lam, zeros, k)
        with np.errstate(divide="ignore", invalid="ignore"):
            delta = np.where(der != 0.0, val / der, 0.0)
        zeros = zeros - np.clip(delta, -1e-8, 1e-8)
    zeros = np.sort(zeros)
    _certify_zeros(lam, k, zeros, root_tol)
    return zeros


def _certify_zeros(lam, k, zeros, root_tol):
    count = fibonacci(k)
    if len(zeros) != count:
        raise ZeroCountError(
            f"x_k zero count mismatch at k={k}, lam={lam}: "
            f"{len(zeros)} found, {count} expected")
    lo, hi = -2.0 - lam - 1e-6, 2.0 + lam + 1e-6
    if zeros[0] < lo or zeros[-1] > hi:
        raise ZeroCountError(
            f"zero outside [{lo}, {hi}] at k={k}, lam={lam}")
    if count > 1:
        gaps = np.diff(zeros)
        if gaps.min() <= root_tol:
            raise ZeroCountError(
                f"coincident zeros at k={k}, lam={lam}: min gap {gaps.min():.3e}")
        neighbor_gap = np.minimum(np.concatenate(([gaps[0]], gaps)),
                                  np.concatenate((gaps, [gaps[-1]])))
        offs = np.minimum(neighbor_gap / 4.0, 0.05)
    else:
        offs = np.array([0.05])
    left = xk_value(lam, zeros - offs, k)
    right = xk_value(lam, zeros + offs, k)
    if np.any(np.sign(left) == np.sign(right)):
        bad = int(np.argmax(np.sign(left) == np.sign(right)))
        raise ZeroCountError(
            f"no sign change around zero #{bad} at k={k}, lam={lam}")


def zero_rates(lam: float, k: int, zeros: np.ndarray):
    """(x_k'(zeros), per-level growth rates log|x_k'|/k)."""
    _, der = xk_and_derivative(lam, zeros, k)
    rates = np.log(np.abs(der)) / k
    return der, rates


def shadow_lengths(lam: float, k: int, energies, eta: float = 0.05) -> np.ndarray:
    """Length of the terminal orbit stretch within eta of the 6-cycle.

    The orbit of an energy E is the sequence (x_{j+1}, x_j, x_{j-1}),
    j = 0..k-1; returned is, per energy, the number of consecutive final
    orbit points within Euclidean distance eta of the period-6 point set.
    """
    e = np.atleast_1d(np.asarray(energies, dtype=float))
    tab = xk_table(lam, e, k)                       # rows x_{-1} .. x_k
    orbit = np.stack([tab[2:k + 2], tab[1:k + 1], tab[0:k]], axis=-1)  # (k, N, 3)
    a = math.sqrt(1.0 + lam * lam / 4.0)
    cyc = np.array(six_cycle(a))                    # (6, 3)
    diff = orbit[:, :, None, :] - cyc[None, None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=-1)).min(axis=2)   # (k, N)
    near = dist <= eta
    return np.cumprod(near[::-1], axis=0).sum(axis=0).astype(int)


def key_zero(lam: float, k: int, eta: float = 0.05, k_min: int = 8,
             lambda_small: float = 1.0, zeros: np.ndarray | None = None) -> KeyZero:
    """The zero of x_k that best shadows the period-6 orbit.

    Among all zeros, picks the one maximising the terminal shadow length;
    ties are broken by the smallest |rate - d(lambda)| and then by the
    smallest energy.
    """
    if not 0.0 < lam < lambda_small:
        raise ValueError(f"key_zero needs 0 < lam < {lambda_small}, got {lam}")
    if k < k_min:
        raise ValueError(f"key_zero needs k >= {k_min}, got {k}")
    if zeros is None:
        zeros = zeros_of_xk(lam, k)
    der, rates = zero_rates(lam, k, zeros)
    shadows = shadow_lengths(lam, k, zeros, eta=eta)
    d = growth_rate(lam)
    order = np.lexsort((zeros, np.abs(rates - d), -shadows))
    i = order[0]
    return KeyZero(k=k, energy_k=float(zeros[i]), derivative=float(der[i]),
                   rate=float(rates[i]), shadow_length=int(shadows[i]))


def _vector_bisect(f, lo, hi, tol):
    """Bisection on every bracket [lo_i, hi_i]; f vectorised, opposite signs assumed."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        flo = f(lo)
        steps = max(1, int(math.ceil(math.log2(max(np.abs(hi - lo).max() / tol, 1.0)))) + 2)
        for _ in range(steps):
            mid = 0.5 * (lo + hi)
            fm = f(mid)
            take_left = np.sign(fm) == np.sign(flo)
            lo = np.where(take_left, mid, lo)
            flo = np.where(take_left, fm, flo)
            hi = np.where(take_left, hi, mid)
    return 0.5 * (lo + hi)


def _expand_outward(lam, k, start, direction, level, max_doublings=200):
    """First point beyond start (in +-direction) with |x_k| > level."""
    t = 0.05 * (1.0 + lam)
    for _ in range(max_doublings):
        e = start + direction * t
        with np.errstate(over="ignore", invalid="ignore"):
            val = abs(float(xk_value(lam, e, k)))
        if val > level or math.isnan(val) or math.isinf(val):
            return e, False
        t *= 2.0
    return start + direction * t, True


def band_components(lam: float, k: int, delta: float,
                    root_tol: float = 1e-12, merge_tol: float = 1e-9,
                    zeros: np.ndarray | None = None) -> list[Band]:
    """Maximal disjoint intervals where |x_k| <= 1 + delta, with zero counts.

    Between consecutive zeros x_k has exactly one critical point; two
    neighbouring zeros share a band exactly when |x_k| at that critical
    point stays within the threshold.  Band edges are then bisected on the
    monotone stretches outside the extreme zeros of each group.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if zeros is None:
        zeros = zeros_of_xk(lam, k, root_tol=root_tol)
    level = 1.0 + delta
    n = len(zeros)
    if n > 1:
        crits = _vector_bisect(lambda e: xk_and_derivative(lam, e, k)[1],
                               zeros[:-1], zeros[1:], root_tol)
        crit_vals = np.asarray(xk_value(lam, crits, k))
        connected = np.abs(crit_vals) <= level + merge_tol
    else:
        crits = np.empty(0)
        crit_vals = np.empty(0)
        connected = np.empty(0, dtype=bool)

    # group consecutive zeros sharing a band
    groups = []
    start = 0
    for i in range(n - 1):
        if not connected[i]:
            groups.append((start, i))
            start = i + 1
    groups.append((start, n - 1))

    bands = []
    for gi, (i0, i1) in enumerate(groups):
        clipped = False
        # left bracket: previous separating critical point, or expand outward
        if i0 == 0:
            bl, clip_l = _expand_outward(lam, k, zeros[0], -1.0, level)
            clipped |= clip_l
        else:
            bl = crits[i0 - 1]
        if i1 == n - 1:
            br, clip_r = _expand_outward(lam, k, zeros[-1], +1.0, level)
            clipped |= clip_r
        else:
            br = crits[i1]
        s_l = 1.0 if float(xk_value(lam, bl, k)) > 0 else -1.0
        s_r = 1.0 if float(xk_value(lam, br, k)) > 0 else -1.0
        lo = _vector_bisect(lambda e: s_l * xk_value(lam, e, k) - level,
                            [bl], [zeros[i0]], root_tol)[0]
        hi = _vector_bisect(lambda e: s_r * xk_value(lam, e, k) - level,
                            [br], [zeros[i1]], root_tol)[0]
        bands.append(Band(k=k, delta=delta, lo=float(min(lo, hi)),
                          hi=float(max(lo, hi)), zeros_inside=i1 - i0 + 1,
                          lam=lam, clipped=clipped))
    return bands


def band_containing(lam: float, k: int, delta: float, energy: float,
                    zeros: np.ndarray | None = None, **kw) -> Band:
    """The band of |x_k| <= 1 + delta that contains the given energy."""
    for band in band_components(lam, k, delta, zeros=zeros, **kw):
        if band.lo - 1e-12 <= energy <= band.hi + 1e-12:
            return band
    raise ValueError(f"energy {energy} lies in no band at k={k}, delta={delta}")


def zeros_to_csv(lam: float, k: int, zeros: np.ndarray) -> str:
    """CSV rows (lambda, k, index, energy, derivative, rate)."""
    der, rates = zero_rates(lam, k, zeros)
    rows = [(lam, k, i, float(z), float(d), float(r))
            for i, (z, d, r) in enumerate(zip(zeros, der, rates))]
    return csv_text(("lambda", "k", "index", "energy", "derivative", "rate"), rows)


def bands_to_csv(bands: list[Band]) -> str:
    """CSV rows (lambda, k, delta, lo, hi, zeros_inside)."""
    rows = [(b.lam, b.k, b.delta, b.lo, b.hi, b.zeros_inside) for b in bands]
    return csv_text(("lambda", "k", "delta", "lo", "hi", "zeros_inside"), rows)
