"""Command-line front end: deterministic sweeps, CSV/JSON/SVG artifacts.

Every flag has a config-file equivalent (flat ``key = value`` lines,
repeated keys for lists); command-line flags override file values.  All
outputs land under the output directory together with a manifest recording
the canonical configuration, its hash, the seed and the precision mode.
Re-running an identical configuration reproduces every artifact byte for
byte.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 acceptance-suite failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

import fibtrace
from fibtrace import acceptance
from fibtrace import components as cp
from fibtrace import dynamics as dy
from fibtrace import spectrum as sp
from fibtrace import trace_map as tm
from fibtrace import traces as tr
from fibtrace import transfer as tf
from fibtrace import transport as tp
from fibtrace.serialize import csv_text, write_csv, write_json

DEFAULT_SEED = 20240817


class ConfigError(ValueError):
    pass


def _parse_floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        out = []
        for item in text:
            out.extend(_parse_floats(item))
        return out
    try:
        return [float(v) for v in str(text).split(",") if v != ""]
    except ValueError as exc:
        raise ConfigError(f"cannot parse number list from {text!r}") from exc


def _parse_ks(text) -> list[int]:
    """k ranges: '12', '10..18', or comma lists of either."""
    if isinstance(text, (list, tuple)):
        out = []
        for item in text:
            out.extend(_parse_ks(item))
        return out
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            a, b = part.split("..")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    if not out:
        raise ConfigError(f"empty k range {text!r}")
    return out


def read_config_file(path) -> dict:
    """Flat key = value lines; repeated keys accumulate into lists."""
    values: dict = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key = value")
                key, val = (s.strip() for s in line.split("=", 1))
                key = key.replace("-", "_")
                if key in values:
                    prev = values[key]
                    values[key] = (prev if isinstance(prev, list) else [prev]) + [val]
                else:
                    values[key] = val
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return values


def _resolve(args, file_cfg, key, default=None):
    """Command-line value wins; then config file; then default."""
    cli_val = getattr(args, key, None)
    if cli_val is not None:
        return cli_val
    if key in file_cfg:
        return file_cfg[key]
    return default


def _omegas(args, file_cfg) -> tuple[list[float], int]:
    seed = int(_resolve(args, file_cfg, "seed", DEFAULT_SEED))
    omega = _resolve(args, file_cfg, "omega")
    if omega is not None:
        return _parse_floats(omega), seed
    count = _resolve(args, file_cfg, "omega_samples")
    if count is not None:
        rng = np.random.default_rng(seed)
        return [float(v) for v in rng.random(int(count))], seed
    return [0.0], seed


def _pmap(fn, items, jobs):
    """Order-preserving map, optionally across a process pool."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _join_csv(parts) -> str:
    """Concatenate CSV texts sharing one header."""
    header = parts[0].split("\n", 1)[0]
    return header + "\n" + "".join(p.split("\n", 1)[1] for p in parts)


class Runner:
    """Shared context: resolved config, output directory, manifest."""

    def __init__(self, args, file_cfg):
        self.args = args
        self.file_cfg = file_cfg
        out = _resolve(args, file_cfg, "out", None)
        out = os.environ.get("FIBTRACE_OUT", out) if out is None else out
        self.outdir = out or "out"
        self.jobs = int(_resolve(args, file_cfg, "jobs", 1))
        self.seed = int(_resolve(args, file_cfg, "seed", DEFAULT_SEED))
        self.precision = str(_resolve(args, file_cfg, "precision", "double"))
        if self.precision not in ("double", "extended"):
            raise ConfigError(f"precision must be double or extended, "
                              f"got {self.precision!r}")
        self.artifacts: list[str] = []
        os.makedirs(self.outdir, exist_ok=True)

    def get(self, key, default=None):
        return _resolve(self.args, self.file_cfg, key, default)

    def need(self, key):
        val = self.get(key)
        if val is None:
            raise ConfigError(f"missing required option --{key.replace('_', '-')}")
        return val

    def path(self, name) -> str:
        self.artifacts.append(name)
        return os.path.join(self.outdir, name)

    def write_manifest(self, command):
        config = {k: v for k, v in sorted(vars(self.args).items())
                  if v is not None and k not in ("func", "config")}
        config.update({f"file:{k}": v for k, v in sorted(self.file_cfg.items())})
        canon = json.dumps(config, sort_keys=True, default=str)
        manifest = {
            "command": command,
            "config": config,
            "config_hash": hashlib.sha256(canon.encode()).hexdigest(),
            "seed": self.seed,
            "precision": self.precision,
            "version": fibtrace.__version__,
            "artifacts": sorted(self.artifacts),
        }
        write_json(os.path.join(self.outdir, "manifest.json"), manifest)


def cmd_multiplier(run: Runner) -> int:
    lams = _parse_floats(run.need("lam"))
    rows = []
    for lam in lams:
        rep = tm.multiplier_report(lam)
        e1, e2, e3 = (float(v) for v in rep.dt6_eigenvalues)
        rows.append((lam, rep.d_lambda, rep.closed_form_log_mu,
                     rep.numerical_log_mu, e1, e2, e3))
        print(f"lam={lam}: d(lambda)={rep.d_lambda:.12f} "
              f"(eigen route {rep.numerical_log_mu:.12f}), "
              f"DT6 eigenvalues = {e1:.12g}, {e2:.12g}, {e3:.12g}")
    write_csv(run.path("multiplier.csv"),
              ("lambda", "d_lambda", "closed_form_log_mu", "numerical_log_mu",
               "eig_1", "eig_2", "eig_3"), rows)
    return 0


def cmd_traces(run: Runner) -> int:
    lams = _parse_floats(run.need("lam"))
    energies = _parse_floats(run.need("energy"))
    k_max = int(run.get("k_max", 30))
    rows = []
    for lam in lams:
        for energy in energies:
            seq = tr.iterate_traces(lam, energy, k_max, precision=run.precision)
            for k, x, dx in zip(seq.ks, seq.values, seq.derivatives):
                rows.append((lam, energy, int(k), float(x), float(dx),
                             -1 if seq.escaped_at is None else seq.escaped_at))
    write_csv(run.path("traces.csv"),
              ("lambda", "energy", "k", "x_k", "dx_k", "escaped_at"), rows)
    print(f"wrote {len(rows)} trace rows")
    return 0


def cmd_zeros(run: Runner) -> int:
    lams = _parse_floats(run.need("lam"))
    ks = _parse_ks(run.need("k"))
    parts = []
    for lam in lams:
        for k in ks:
            zeros = tr.zeros_of_xk(lam, k)
            parts.append(tr.zeros_to_csv(lam, k, zeros))
            print(f"lam={lam} k={k}: {len(zeros)} zeros")
    with open(run.path("zeros.csv"), "w", encoding="utf-8") as fh:
        fh.write(_join_csv(parts))
    return 0


def cmd_keylemma(run: Runner) -> int:
    lams = _parse_floats(run.need("lam"))
    ks = _parse_ks(run.need("k"))
    eta = float(run.get("eta", 0.05))
    rows = []
    for lam in lams:
        d = tm.growth_rate(lam)
        for k in ks:
            kz = tr.key_zero(lam, k, eta=eta)
            rows.append((lam, k, kz.energy_k, kz.rate, d, abs(kz.rate - d),
                         kz.shadow_length))
            print(f"lam={lam} k={k}: E_k={kz.energy_k:+.9f} rate={kz.rate:.6f} "
                  f"d={d:.6f} gap={abs(kz.rate - d):.6f} shadow={kz.shadow_length}")
    write_csv(run.path("keylemma.csv"),
              ("lambda", "k", "energy_k", "rate", "d_lambda", "gap", "shadow_length"),
              rows)
    return 0


def _delta_for(run, lam) -> float:
    delta = run.get("delta")
    if delta is not None:
        return float(delta)
    frac = run.get("delta_frac")
    if frac is not None:
        return float(frac) * lam * lam
    raise ConfigError("need --delta or --delta-frac (fraction of lambda^2)")


def cmd_bands(run: Runner) -> int:
    lams = _parse_floats(run.need("lam"))
    ks = _parse_ks(run.need("k"))
    bands = []
    for lam in lams:
        delta = _delta_for(run, lam)
        for k in ks:
            got = tr.band_components(lam, k, delta)
            bands.extend(got)
            print(f"lam={lam} k={k} delta={delta:.6g}: {len(got)} bands, "
                  f"{sum(b.zeros_inside for b in got)} zeros")
    with open(run.path("bands.csv"), "w", encoding="utf-8") as fh:
        fh.write(tr.bands_to_csv(bands))
    return 0


def cmd_component(run: Runner) -> int:
    lam = _parse_floats(run.need("lam"))[0]
    k = _parse_ks(run.need("k"))[0]
    delta = _delta_for(run, lam)
    center = run.get("center")
    zeros = tr.zeros_of_xk(lam, k)
    if center is None:
        kz = tr.key_zero(lam, k, zeros=zeros)
        center = kz.energy_k
        derivative = kz.derivative
    else:
        center = float(center)
        i = int(np.argmin(np.abs(zeros - center)))
        center = float(zeros[i])
        derivative = float(tr.zero_rates(lam, k, zeros[i:i + 1])[0][0])
    contour = cp.trace_component(lam, k, delta, center)
    r_in, r_out = cp.koebe_bounds(k, delta, derivative)
    with open(run.path("component.csv"), "w", encoding="utf-8") as fh:
        fh.write(cp.contour_to_csv(contour))
    cp.contour_to_svg(contour, run.path("component.svg"), r_in, r_out)
    print(f"component at E_k={center:+.9f}: inscribed={contour.inscribed_radius:.6e} "
          f"circumscribed={contour.circumscribed_radius:.6e} "
          f"(distortion bounds {r_in:.6e}, {r_out:.6e})")
    return 0


def cmd_xi(run: Runner) -> int:
    lams = _parse_floats(run.need("lam"))
    k = _parse_ks(run.get("k", "12"))[0]
    n_zeros = int(run.get("zeros", 10))
    omegas, _ = _omegas(run.args, run.file_cfg)
    fits = []
    for lam in lams:
        zeros = tr.zeros_of_xk(lam, k)
        picks = zeros[np.linspace(0, len(zeros) - 1, n_zeros).astype(int)]
        n_max = int(run.get("n_max", tr.fibonacci(k)))
        jobs_args = [(lam, float(om), complex(z), n_max)
                     for z in picks for om in omegas]
        fits.extend(_pmap(_xi_job, jobs_args, run.jobs))
        worst = max(f.xi_hat for f in fits if f.lam == lam)
        print(f"lam={lam}: max xi_hat={worst:.4f} vs bound={tf.xi_threshold(lam):.4f}")
    with open(run.path("xi.csv"), "w", encoding="utf-8") as fh:
        fh.write(tf.fits_to_csv(fits))
    return 0


def _xi_job(job):
    lam, omega, z, n_max = job
    return tf.empirical_xi(lam, omega, z, n_max)


def cmd_dynamics(run: Runner) -> int:
    lams = _parse_floats(run.need("lam"))
    omegas, _ = _omegas(run.args, run.file_cfg)
    L = int(run.get("L", 400))
    T_grid = _parse_floats(run.get("T", "3,6,12,25,50"))
    ps = _parse_floats(run.get("p", "2"))
    ns = [int(v) for v in _parse_floats(run.get("N", ""))]
    parts = []
    for lam in lams:
        for omega in omegas:
            res = dy.compute_dynamics(lam, omega, L, T_grid, p_list=tuple(ps),
                                      N_list=tuple(ns))
            parts.append(dy.dynamics_to_csv(res))
            print(f"lam={lam} omega={omega:.6f}: moments for p={ps} on {len(T_grid)} T values")
    with open(run.path("dynamics.csv"), "w", encoding="utf-8") as fh:
        fh.write(_join_csv(parts))
    return 0


def cmd_parseval(run: Runner) -> int:
    lam = _parse_floats(run.need("lam"))[0]
    L = int(run.get("L", 200))
    T = float(run.get("T", 25))
    ns = [int(v) for v in _parse_floats(run.get("n", "7"))]
    omegas, _ = _omegas(run.args, run.file_cfg)
    rows = []
    worst = 0.0
    for omega in omegas:
        h = dy.build(lam, omega, L)
        for n in ns:
            resid = dy.parseval_residual(h, n, T)
            worst = max(worst, resid)
            rows.append((lam, omega, L, n, T, resid))
            print(f"lam={lam} omega={omega:.6f} n={n} T={T}: residual={resid:.3e}")
    write_csv(run.path("parseval.csv"),
              ("lambda", "omega", "L", "n", "T", "residual"), rows)
    return 0 if worst <= 1e-8 else 3


def cmd_transport(run: Runner) -> int:
    lams = _parse_floats(run.need("lam"))
    ps = _parse_floats(run.get("p", "2"))
    L = int(run.get("L", 800))
    T_grid = _parse_floats(run.get("T", "")) or list(np.geomspace(2.5, L / 8.0, 10))
    rows = []
    for lam in lams:
        res = dy.compute_dynamics(lam, 0.0, L, T_grid, p_list=tuple(ps))
        for p in ps:
            fit = tp.fit_beta(res, p)
            if lam > 0:
                bounds = tp.theoretical_bounds(lam, p)
                alpha, beta_low = bounds.alpha_lower, bounds.beta_lower_at_p
            else:
                alpha, beta_low = 1.0, float("nan")
            rows.append((lam, p, fit.beta_minus_hat, fit.beta_plus_hat,
                         alpha, beta_low))
            print(f"lam={lam} p={p}: beta-={fit.beta_minus_hat:.4f} "
                  f"beta+={fit.beta_plus_hat:.4f} alpha_lower={alpha:.6f}")
    write_csv(run.path("transport.csv"),
              ("lambda", "p", "beta_minus_hat", "beta_plus_hat",
               "alpha_lower", "beta_lower_p"), rows)
    return 0


def cmd_dimension(run: Runner) -> int:
    lams = _parse_floats(run.need("lam"))
    k_min = int(run.get("k_min", 6))
    k_max = int(run.get("k_max", 14))
    rows = []
    summary = {}
    for lam in lams:
        est = sp.box_dimension(lam, k_min, k_max)
        for k, count, total in zip(est.k_levels, est.band_counts, est.total_lengths):
            rows.append((lam, k, count, total, total / count))
        summary[str(lam)] = {
            "dim_hat": est.dim_hat,
            "confidence_width": est.confidence_width,
            "degenerate": est.degenerate,
            "k_min": k_min,
            "k_max": k_max,
        }
        print(f"lam={lam}: dim_hat={est.dim_hat:.5f} +/- {est.confidence_width:.5f}"
              f"{' (degenerate)' if est.degenerate else ''}")
    write_csv(run.path("dimension.csv"),
              ("lambda", "k", "band_count", "total_length", "mean_length"), rows)
    write_json(run.path("dimension.json"), summary)
    return 0


def cmd_report(run: Runner) -> int:
    indices = run.get("criteria")
    indices = [int(v) for v in _parse_floats(indices)] if indices else None
    results = acceptance.run_all(indices, echo=print)
    payload = {
        "results": [
            {"index": r.index, "name": r.name, "passed": r.passed,
             "seconds": round(r.seconds, 3),
             "checks": [{"label": l, "ok": ok, "detail": d}
                        for l, ok, d in r.checks]}
            for r in results
        ],
        "all_passed": all(r.passed for r in results),
    }
    write_json(run.path("report.json"), payload)
    rows = []
    for lam in _parse_floats(run.get("lam", "0.05,0.1,0.2")):
        est = sp.box_dimension(lam, 6, 14)
        bounds = tp.theoretical_bounds(lam, 2.0)
        rows.append((lam, bounds.alpha_lower, est.dim_hat,
                     bounds.alpha_lower - est.dim_hat))
    write_csv(run.path("summary.csv"),
              ("lambda", "alpha_lower", "dim_hat", "gap"), rows)
    return 0 if payload["all_passed"] else 4


COMMANDS = {
    "multiplier": cmd_multiplier,
    "traces": cmd_traces,
    "zeros": cmd_zeros,
    "keylemma": cmd_keylemma,
    "bands": cmd_bands,
    "component": cmd_component,
    "xi": cmd_xi,
    "dynamics": cmd_dynamics,
    "parseval": cmd_parseval,
    "transport": cmd_transport,
    "dimension": cmd_dimension,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fibtrace",
        description="Trace-map and transport laboratory for the Fibonacci Hamiltonian")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--out", help="output directory (env FIBTRACE_OUT)")
    common.add_argument("--jobs", type=int, help="worker pool size (default 1)")
    common.add_argument("--seed", type=int, help="seed for omega sampling")
    common.add_argument("--precision", choices=("double", "extended"))
    common.add_argument("--lam", "--lambda", dest="lam",
                        help="coupling constant(s), comma separated")

    specs = {
        "multiplier": [],
        "traces": [("--energy", {}), ("--k-max", dict(type=int, dest="k_max")),],
        "zeros": [("--k", {})],
        "keylemma": [("--k", {}), ("--eta", dict(type=float))],
        "bands": [("--k", {}), ("--delta", dict(type=float)),
                  ("--delta-frac", dict(type=float, dest="delta_frac"))],
        "component": [("--k", {}), ("--delta", dict(type=float)),
                      ("--delta-frac", dict(type=float, dest="delta_frac")),
                      ("--center", dict(type=float))],
        "xi": [("--k", {}), ("--zeros", dict(type=int)),
               ("--n-max", dict(type=int, dest="n_max")),
               ("--omega", {}), ("--omega-samples", dict(type=int, dest="omega_samples"))],
        "dynamics": [("--omega", {}), ("--omega-samples", dict(type=int, dest="omega_samples")),
                     ("--L", dict(type=int)), ("--T", {}), ("--p", {}), ("--N", {})],
        "parseval": [("--L", dict(type=int)), ("--T", dict(type=float)),
                     ("--n", {}), ("--omega", {})],
        "transport": [("--p", {}), ("--L", dict(type=int)), ("--T", {})],
        "dimension": [("--k-min", dict(type=int, dest="k_min")),
                      ("--k-max", dict(type=int, dest="k_max"))],
        "report": [("--criteria", {})],
    }
    for name, extra in specs.items():
        p = sub.add_parser(name, parents=[common])
        for flag, kwargs in extra:
            p.add_argument(flag, **kwargs)
        p.set_defaults(func=COMMANDS[name])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        file_cfg = read_config_file(args.config) if args.config else {}
        run = Runner(args, file_cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        status = args.func(run)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (tr.ZeroCountError, cp.ContourError, ArithmeticError) as exc:
        print(f"numerical failure [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"numerical failure [ValueError]: {exc}", file=sys.stderr)
        return 3
    run.write_manifest(args.command)
    return status


if __name__ == "__main__":
    sys.exit(main())
