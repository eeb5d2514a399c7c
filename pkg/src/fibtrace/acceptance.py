"""The acceptance sweep: every desk-scale contract, one callable per criterion.

Each criterion function returns a CriterionResult whose ``checks`` list
records every clause separately; ``passed`` is their conjunction.  The
pytest acceptance module asserts on these, and the command-line ``report``
command prints one line per criterion and exits nonzero on any failure.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from fibtrace import components as cp
from fibtrace import dynamics as dy
from fibtrace import spectrum as sp
from fibtrace import trace_map as tm
from fibtrace import traces as tr
from fibtrace import transfer as tf
from fibtrace import transport as tp


@dataclass
class CriterionResult:
    index: int
    name: str
    passed: bool
    seconds: float
    checks: list = field(default_factory=list)   # (label, ok, detail)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = ""
        if not self.passed:
            bad = [f"{label}: {detail}" for label, ok, detail in self.checks if not ok]
            extra = "  [" + "; ".join(bad) + "]"
        return f"criterion {self.index:2d} {status}  {self.name} ({self.seconds:.1f}s){extra}"


def _result(index, name, t0, checks) -> CriterionResult:
    return CriterionResult(index=index, name=name,
                           passed=all(ok for _, ok, _ in checks),
                           seconds=time.time() - t0, checks=checks)


def criterion_1() -> CriterionResult:
    """Multiplier law: closed-form growth rate against the composed Jacobian."""
    t0 = time.time()
    checks = []
    r0 = tm.multiplier_report(0.0)
    err0 = abs(r0.d_lambda - tm.LOG_PHI)
    checks.append(("d(0)=log(phi) within 1e-12", err0 <= 1e-12, f"err={err0:.2e}"))
    for lam in (0.1, 0.5, 1.0, 2.0):
        r = tm.multiplier_report(lam)
        err = abs(r.closed_form_log_mu - r.numerical_log_mu)
        checks.append((f"closed vs eigen route at lam={lam} within 1e-10",
                       err <= 1e-10, f"err={err:.2e}"))
    return _result(1, "multiplier law d(lambda)", t0, checks)


def criterion_2() -> CriterionResult:
    """Quadratic gap: (d(lambda) - log phi)/lambda^2 constant near 0.0745."""
    t0 = time.time()
    lams = np.linspace(0.02, 0.2, 10)
    ratios = np.array([tp.quadratic_gap_ratio(l) for l in lams])
    spread = float((ratios.max() - ratios.min()) / ratios.mean())
    mean = float(ratios.mean())
    checks = [
        ("relative spread <= 10%", spread <= 0.10, f"spread={spread:.3%}"),
        ("value 0.0745 +/- 0.002", abs(mean - 0.0745) <= 0.002, f"mean={mean:.5f}"),
    ]
    return _result(2, "quadratic growth-rate gap", t0, checks)


def criterion_3() -> CriterionResult:
    """Torus conjugacy on a grid; invariant drift along a bounded orbit."""
    t0 = time.time()
    thetas = np.arange(100) / 100.0
    worst = 0.0
    for th in thetas:
        for ph in thetas:
            fa = tm.torus_semiconjugacy(*tm.torus_shift(th, ph))
            tf_ = tm.step(tm.torus_semiconjugacy(th, ph))
            worst = max(worst, math.dist(fa, tf_))
    checks = [("F(A) = T(F) on 100x100 grid within 1e-12", worst <= 1e-12,
               f"max={worst:.2e}")]
    p = tm.torus_semiconjugacy(math.sqrt(2.0) - 1.0, math.sqrt(3.0) - 1.0)
    g0 = tm.invariant(p)
    drift = 0.0
    q = p
    for _ in range(1000):
        q = tm.step(q)
        drift = max(drift, abs(tm.invariant(q) - g0))
    checks.append(("invariant drift <= 1e-9 over 1000 bounded iterates",
                   drift <= 1e-9, f"drift={drift:.2e}"))
    return _result(3, "conjugacy and conserved quantity", t0, checks)


def _half_trace_samples(lam, k, zeros, n_samples=5):
    """Real and complex probe energies inside the bounded band scale."""
    idx = np.linspace(0, len(zeros) - 1, min(n_samples, len(zeros))).astype(int)
    der, _ = tr.zero_rates(lam, k, zeros[idx])
    offs = 0.5 / np.abs(der)
    pts = list(zeros[idx].astype(complex))
    pts += list(zeros[idx] + offs)
    pts += list(zeros[idx] + 1j * offs)
    return pts


def criterion_4() -> CriterionResult:
    """Zero counts F_k for k <= 16 and the half-trace identity."""
    t0 = time.time()
    checks = []
    zero_sets = {}
    for lam in (0.0, 0.1, 0.5, 1.0):
        ok = True
        detail = ""
        for k in range(1, 17):
            try:
                z = tr.zeros_of_xk(lam, k)
            except tr.ZeroCountError as exc:
                ok = False
                detail = str(exc)
                break
            zero_sets[(lam, k)] = z
        checks.append((f"exactly F_k simple zeros for k<=16 at lam={lam}", ok, detail))
    worst = 0.0
    for lam in (0.0, 0.5, 1.0):
        for k in (4, 8, 12, 16):
            z = zero_sets.get((lam, k))
            if z is None:
                z = tr.zeros_of_xk(lam, k)
            for pt in _half_trace_samples(lam, k, z):
                worst = max(worst, tf.half_trace_check(lam, pt, k))
    checks.append(("half-trace identity <= 1e-8 on sampled real and complex z",
                   worst <= 1e-8, f"max diff={worst:.2e}"))
    return _result(4, "trace-polynomial structure", t0, checks)


def criterion_5() -> CriterionResult:
    """Derivative growth at zeros: rate window and key-zero gap trend."""
    t0 = time.time()
    checks = []
    for lam in (0.1, 0.2):
        d = tm.growth_rate(lam)
        gaps = []
        min_ok = True
        detail = ""
        for k in range(12, 19):
            zeros = tr.zeros_of_xk(lam, k)
            _, rates = tr.zero_rates(lam, k, zeros)
            best = float(np.abs(rates - d).min())
            if best > 0.05:
                min_ok = False
                detail += f" k={k}: min gap {best:.4f};"
            kz = tr.key_zero(lam, k, zeros=zeros)
            gaps.append(abs(kz.rate - d))
        checks.append((f"some zero within 0.05 of d for each k in [12,18], lam={lam}",
                       min_ok, detail.strip()))
        arr = np.array(gaps)
        violations = int(np.sum(arr[1:] > arr[:-1] + 1e-12))
        checks.append((f"key-zero gap non-increasing (<=1 violation), lam={lam}",
                       violations <= 1,
                       f"violations={violations}, gaps=" +
                       "/".join(f"{g:.4f}" for g in gaps)))
    return _result(5, "derivative growth at trace zeros (part a)", t0, checks)


def criterion_6() -> CriterionResult:
    """Single zero in the band around the key zero at delta = lambda^2/8."""
    t0 = time.time()
    checks = []
    for lam in (0.1, 0.2):
        delta = lam * lam / 8.0
        ok = True
        detail = ""
        for k in range(8, 17):
            zeros = tr.zeros_of_xk(lam, k)
            kz = tr.key_zero(lam, k, zeros=zeros)
            band = tr.band_containing(lam, k, delta, kz.energy_k, zeros=zeros)
            if band.zeros_inside != 1:
                ok = False
                detail += f" k={k}: {band.zeros_inside} zeros;"
        checks.append((f"key band holds exactly one zero for k<=16, lam={lam}",
                       ok, detail.strip()))
    return _result(6, "single zero in the key band (part b)", t0, checks)


def criterion_7() -> CriterionResult:
    """Distortion-ball inclusions for the traced complex components."""
    t0 = time.time()
    lam = 0.3
    delta = lam * lam / 16.0
    d = tm.growth_rate(lam)
    checks = []
    for k in (8, 10, 12):
        zeros = tr.zeros_of_xk(lam, k)
        kz = tr.key_zero(lam, k, zeros=zeros)
        contour = cp.trace_component(lam, k, delta, kz.energy_k)
        r_in, r_out = cp.distortion_ball_radii(k, delta, d, eps=0.05)
        ok_in = contour.inscribed_radius >= r_in * (1.0 - 1e-6)
        ok_out = contour.circumscribed_radius <= r_out * (1.0 + 1e-6)
        checks.append((f"inner ball inside component, k={k}", ok_in,
                       f"inscribed={contour.inscribed_radius:.3e} r_in={r_in:.3e}"))
        checks.append((f"component inside outer ball, k={k}", ok_out,
                       f"circumscribed={contour.circumscribed_radius:.3e} r_out={r_out:.3e}"))
    return _result(7, "distortion-ball inclusions", t0, checks)


def _two_site_toy() -> dy.Hamiltonian:
    return dy.Hamiltonian(lam=0.0, omega=0.0, L=1, diagonal=np.zeros(2))


def criterion_8() -> CriterionResult:
    """Two-sided Abel/resolvent identity at L = 200 plus the 2-site toy."""
    t0 = time.time()
    checks = []
    worst = 0.0
    for lam in (0.5, 1.0):
        for omega in (0.0, 0.3):
            h = dy.build(lam, omega, 200)
            for n in (0, 7, 40):
                for T in (5.0, 25.0):
                    worst = max(worst, dy.parseval_residual(h, n, T))
    checks.append(("relative residual <= 1e-8 on the (lam, omega, n, T) grid",
                   worst <= 1e-8, f"max residual={worst:.2e}"))
    toy = _two_site_toy()
    res_q = dy.parseval_residual(toy, 0, 1.0, route="quadrature")
    res_r = dy.parseval_residual(toy, 0, 1.0, route="residue")
    checks.append(("2-site toy residual <= 1e-12 (both routes)",
                   max(res_q, res_r) <= 1e-12,
                   f"quadrature={res_q:.2e}, residue={res_r:.2e}"))
    return _result(8, "Abel/resolvent identity", t0, checks)


def criterion_9() -> CriterionResult:
    """Free-case ballistics: 2t^2 law and the fitted exponent."""
    t0 = time.time()
    h = dy.build(0.0, 0.0, 1000)
    worst = 0.0
    for t in (1.0, 10.0, 50.0, 100.0, 250.0):
        m2 = dy.position_moment(h, 2.0, t)
        worst = max(worst, abs(m2 - 2.0 * t * t) / (2.0 * t * t))
    checks = [("<|X|^2>(t) = 2 t^2 within 0.1% for t <= L/4", worst <= 1e-3,
               f"max rel err={worst:.2e}")]
    result = dy.compute_dynamics(0.0, 0.0, 1000, np.geomspace(3.0, 120.0, 10),
                                 p_list=(2.0,))
    fit = tp.fit_beta(result, 2.0)
    ok = 0.95 <= fit.beta_minus_hat and fit.beta_plus_hat <= 1.0 + 1e-6
    checks.append(("fitted beta(2) in [0.95, 1.0]", ok,
                   f"beta-={fit.beta_minus_hat:.4f} beta+={fit.beta_plus_hat:.4f}"))
    return _result(9, "free-case ballistic transport", t0, checks)


def criterion_10() -> CriterionResult:
    """Empirical power-law exponents stay below the explicit threshold."""
    t0 = time.time()
    lam = 0.5
    zeros = tr.zeros_of_xk(lam, 12)
    picks = zeros[np.linspace(0, len(zeros) - 1, 10).astype(int)]
    rng = np.random.default_rng(20240817)
    omegas = rng.random(20)
    bound = tf.xi_threshold(lam)
    worst = -math.inf
    for z in picks:
        for omega in omegas:
            fit = tf.empirical_xi(lam, float(omega), complex(z), tr.fibonacci(12))
            worst = max(worst, fit.xi_hat)
    checks = [("xi_hat <= threshold for 10 zeros of x_12 and 20 omegas",
               worst <= bound, f"max xi_hat={worst:.3f} vs bound={bound:.3f}")]
    return _result(10, "transfer-matrix power law", t0, checks)


def criterion_11() -> CriterionResult:
    """Quadratic transport bound against the spectrum-dimension estimate."""
    t0 = time.time()
    exponent, r2 = tp.alpha_power_fit(np.linspace(0.02, 0.2, 12))
    checks = [("1 - alpha_lower follows lambda^2 (exponent 2.0 +/- 0.1)",
               abs(exponent - 2.0) <= 0.1, f"exponent={exponent:.4f} r2={r2:.6f}")]
    gaps = {}
    for lam in (0.05, 0.1):
        est = sp.box_dimension(lam, 6, 16)
        alpha = tp.theoretical_bounds(lam, 2.0).alpha_lower
        gaps[lam] = alpha - est.dim_hat
        checks.append((f"alpha_lower > dim_hat at lam={lam}", gaps[lam] > 0.0,
                       f"alpha={alpha:.5f} dim_hat={est.dim_hat:.5f} gap={gaps[lam]:.5f}"))
    checks.append(("gap grows as lambda shrinks", gaps[0.05] > gaps[0.1],
                   f"gap(0.05)={gaps[0.05]:.5f} vs gap(0.1)={gaps[0.1]:.5f}"))
    return _result(11, "transport bound vs spectrum dimension", t0, checks)


def criterion_12() -> CriterionResult:
    """Fitted beta(2) non-increasing in the coupling, small at lam = 8."""
    t0 = time.time()
    betas = []
    for lam in (0.0, 0.5, 2.0, 8.0):
        result = dy.compute_dynamics(lam, 0.0, 800, np.geomspace(2.5, 100.0, 10),
                                     p_list=(2.0,))
        betas.append(tp.fit_beta(result, 2.0).beta_plus_hat)
    arr = np.array(betas)
    mono = bool(np.all(arr[1:] <= arr[:-1] + 0.02))
    checks = [
        ("beta(2) non-increasing over lam in {0, 0.5, 2, 8} (0.02 slack)", mono,
         "betas=" + "/".join(f"{b:.4f}" for b in betas)),
        ("beta(2) <= 0.8 at lam=8", betas[-1] <= 0.8, f"beta={betas[-1]:.4f}"),
    ]
    return _result(12, "coupling trend of the transport exponent", t0, checks)


CRITERIA = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4,
    5: criterion_5, 6: criterion_6, 7: criterion_7, 8: criterion_8,
    9: criterion_9, 10: criterion_10, 11: criterion_11, 12: criterion_12,
}


def run_all(indices=None, echo=None) -> list[CriterionResult]:
    """Run the acceptance criteria in order, printing one line per criterion."""
    results = []
    for i in sorted(CRITERIA if indices is None else indices):
        res = CRITERIA[i]()
        results.append(res)
        if echo is not None:
            echo(res.line())
    return results
