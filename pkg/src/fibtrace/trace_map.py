"""The trace map, its conserved quantity, and the period-6 growth law.

The map T(x,y,z) = (2xy-z, x, y) preserves G(x,y,z) = x^2+y^2+z^2-2xyz-1,
so it acts on the one-parameter family of cubic surfaces G = lambda^2/4.
The point (0, 0, a) with a = sqrt(1 + lambda^2/4) lies on a period-6 orbit
whose unstable multiplier, averaged over the orbit, gives the growth rate
d(lambda) that controls derivative growth of the trace polynomials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

LOG_PHI = math.log((1.0 + math.sqrt(5.0)) / 2.0)


class TracePoint(NamedTuple):
    """A point (x, y, z) in trace coordinates."""

    x: float
    y: float
    z: float


@dataclass(frozen=True)
class Coupling:
    """Coupling constant lambda >= 0 and the invariant level it selects."""

    lam: float

    def __post_init__(self):
        if not (self.lam >= 0.0):
            raise ValueError(f"coupling must be >= 0, got {self.lam}")

    @property
    def surface_level(self) -> float:
        return 1.0 + self.lam ** 2 / 4.0

    @property
    def cycle_apex(self) -> float:
        """The a with (0, 0, a) on the invariant surface, a = sqrt(1 + lam^2/4)."""
        return math.sqrt(self.surface_level)


@dataclass
class MultiplierReport:
    """Growth rate of the period-6 orbit, by two independent routes."""

    lam: float
    closed_form_log_mu: float
    numerical_log_mu: float
    dt6_eigenvalues: np.ndarray = field(repr=False)
    d_lambda: float = 0.0


def step(p) -> TracePoint:
    """One application of the trace map: (x, y, z) -> (2xy - z, x, y)."""
    x, y, z = p
    return TracePoint(2.0 * x * y - z, x, y)


def inverse_step(p) -> TracePoint:
    """Inverse of :func:`step`: (x, y, z) -> (y, z, 2yz - x)."""
    x, y, z = p
    return TracePoint(y, z, 2.0 * y * z - x)


def invariant(p) -> float:
    """Conserved quantity G(x,y,z) = x^2 + y^2 + z^2 - 2xyz - 1."""
    x, y, z = p
    return x * x + y * y + z * z - 2.0 * x * y * z - 1.0


def surface_residual(p, lam: float) -> float:
    """|G(p) - lam^2/4|, distance from the invariant level of the coupling."""
    return abs(invariant(p) - lam * lam / 4.0)


def spectrum_line_point(lam: float, energy: float) -> TracePoint:
    """The point ((E-lam)/2, E/2, 1) whose orbit decides spectrum membership."""
    return TracePoint((energy - lam) / 2.0, energy / 2.0, 1.0)


def jacobian(p) -> np.ndarray:
    """Differential of the trace map at p."""
    x, y, _ = p
    return np.array([[2.0 * y, 2.0 * x, -1.0],
                     [1.0, 0.0, 0.0],
                     [0.0, 1.0, 0.0]])


def six_cycle(a: float) -> list[TracePoint]:
    """The period-6 orbit through (0, 0, a), as the list T^j(0,0,a), j=0..5."""
    points = [TracePoint(0.0, 0.0, a)]
    for _ in range(5):
        points.append(step(points[-1]))
    return points


def six_cycle_jacobian(a: float) -> np.ndarray:
    """Product of the one-step Jacobians along the period-6 orbit at (0,0,a)."""
    prod = np.eye(3)
    p = TracePoint(0.0, 0.0, a)
    for _ in range(6):
        prod = jacobian(p) @ prod
        p = step(p)
    return prod


def growth_rate(lam: float) -> float:
    """Closed-form growth rate d(lambda) of the period-6 orbit.

    d(lambda) = (1/6) log( (lam^4/2 + 4 lam^2 + 9)
                           + (4 + lam^2) sqrt(lam^4/4 + 2 lam^2 + 5) ).

    This is (1/6) log of the largest eigenvalue of the six-step Jacobian
    at (0, 0, sqrt(1 + lam^2/4)); the eigenvalue set is
    {1, 8a^4 + 1 +- 4a^2 sqrt(4a^4 + 1)}.  d(0) = log(phi) exactly.
    """
    if lam < 0:
        raise ValueError("coupling must be >= 0")
    s = lam * lam
    inner = s * s / 4.0 + 2.0 * s + 5.0
    mu = (s * s / 2.0 + 4.0 * s + 9.0) + (4.0 + s) * math.sqrt(inner)
    return math.log(mu) / 6.0


# Leading coefficient of d(lambda) - log(phi) ~ c * lambda^2 as lambda -> 0:
# c = (4 + 9/sqrt(5)) / (6 (9 + 4 sqrt(5))).
GROWTH_RATE_QUADRATIC_COEFF = (4.0 + 9.0 / math.sqrt(5.0)) / (6.0 * (9.0 + 4.0 * math.sqrt(5.0)))


def multiplier_report(lam: float) -> MultiplierReport:
    """Compare closed-form d(lambda) against the composed-Jacobian route.

    The numerical route composes the six one-step Jacobians along the orbit
    of (0, 0, a) and takes eigenvalues of the upper 2x2 block (the third
    row and column decouple, carrying the eigenvalue 1), so no general
    eigensolver is involved.
    """
    coupling = Coupling(lam)
    a = coupling.cycle_apex
    dt6 = six_cycle_jacobian(a)
    off = max(abs(dt6[0, 2]), abs(dt6[1, 2]), abs(dt6[2, 0]), abs(dt6[2, 1]),
              abs(dt6[2, 2] - 1.0))
    if off > 1e-9:
        raise ArithmeticError(
            f"six-step Jacobian at lam={lam} did not decouple (residual {off:.3e})")
    tr = dt6[0, 0] + dt6[1, 1]
    det = dt6[0, 0] * dt6[1, 1] - dt6[0, 1] * dt6[1, 0]
    disc = tr * tr - 4.0 * det
    if disc < 0.0:
        raise ArithmeticError(f"six-step Jacobian at lam={lam} has complex multipliers")
    root = math.sqrt(disc)
    mu_big = (tr + root) / 2.0
    mu_small = (tr - root) / 2.0
    d = growth_rate(lam)
    return MultiplierReport(
        lam=lam,
        closed_form_log_mu=d,
        numerical_log_mu=math.log(mu_big) / 6.0,
        dt6_eigenvalues=np.sort(np.array([1.0, mu_small, mu_big])),
        d_lambda=d,
    )


def torus_semiconjugacy(theta: float, phi: float) -> TracePoint:
    """Factor map of the torus automorphism onto the lambda=0 surface.

    (theta, phi) -> (cos 2pi(theta+phi), cos 2pi theta, cos 2pi phi);
    intertwines :func:`torus_shift` with :func:`step`.
    """
    two_pi = 2.0 * math.pi
    return TracePoint(math.cos(two_pi * (theta + phi)),
                      math.cos(two_pi * theta),
                      math.cos(two_pi * phi))


def torus_shift(theta: float, phi: float) -> tuple[float, float]:
    """The hyperbolic torus automorphism (theta, phi) -> (theta+phi, theta) mod 1."""
    return (theta + phi) % 1.0, theta % 1.0
