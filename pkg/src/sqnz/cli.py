"""Batch command-line surface: sweeps, regime tables, validation reports.

Verbs: ``dispersion``, ``rmap``, ``regimes``, ``energy``, ``simulate``,
``fdr``.  Shared flags: ``--config``, ``--out``, ``--threads`` (falls back
to the SQNZ_THREADS environment variable), ``--validate``.  Output format
follows the ``--out`` extension (.csv/.json), else the config's ``output``
setting; JSON results embed their config and can be re-ingested via
``--config``.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import asymptotics, dispersion, kernels, montecarlo
from .config import (
    RunConfig,
    format_float,
    load_config,
    render_csv,
    resolve_threads,
    write_csv_atomic,
    write_json_atomic,
)
from .errors import ConfigError, RegimeMismatchError

__all__ = ["main"]


def _emit(cfg: RunConfig | None, out: str | None, command: str, columns, rows, comments):
    if out is None:
        sys.stdout.write(render_csv(list(columns), rows, list(comments)).decode())
        return
    fmt = "json" if str(out).endswith(".json") else "csv" if str(out).endswith(".csv") else None
    if fmt is None:
        fmt = cfg.output if cfg is not None else "csv"
    if fmt == "json":
        payload = {
            "command": command,
            "config": cfg.raw if cfg is not None else {},
            "comments": list(comments),
            "columns": list(columns),
            "rows": rows,
        }
        write_json_atomic(out, payload)
    else:
        write_csv_atomic(out, columns, rows, comments)


def _asymptotic_point(t: float, band, osc) -> tuple[float, float]:
    regime = asymptotics.regime_classify(t, band, osc)
    table = {
        asymptotics.Regime.VERY_EARLY: asymptotics.very_early,
        asymptotics.Regime.EARLY_PLATEAU: asymptotics.early_plateau,
        asymptotics.Regime.ONRES_QUADRATIC: asymptotics.onres_quadratic,
        asymptotics.Regime.ONRES_LATE: asymptotics.onres_late,
        asymptotics.Regime.OFFRES_EARLY: asymptotics.offres_early,
        asymptotics.Regime.OFFRES_LATE: asymptotics.offres_late,
    }
    if regime is asymptotics.Regime.CROSSOVER:
        return math.nan, math.nan
    # the classifier places t between boundaries; the op itself still insists
    # on the x10 margins and may refuse (narrow configs) -> report NaN
    try:
        if regime is asymptotics.Regime.ONRES_LINEAR:
            st = asymptotics.onres_linear_st(t, band, osc).st
            ns = asymptotics.onres_ns_flat(t, band, osc).ns
            return st, ns
        est = table[regime](t, band, osc)
    except RegimeMismatchError:
        return math.nan, math.nan
    return (
        est.st if est.st is not None else math.nan,
        est.ns if est.ns is not None else math.nan,
    )


def cmd_dispersion(cfg: RunConfig, out, threads: int) -> int:
    times = cfg.grid.times()
    osc = cfg.oscillator
    if cfg.method in ("closed_form", "quadrature"):
        series = dispersion.evaluate_series(
            times, list(cfg.bands), osc, method=cfg.method, threads=threads
        )
        st, ns, vac = series.st, series.ns, series.vac
    elif cfg.method == "asymptotic":
        vac = np.array(
            [sum(dispersion.vacuum_reference(t, b, osc) for b in cfg.bands) for t in times]
        )
        pts = [
            tuple(map(sum, zip(*(_asymptotic_point(t, b, osc) for b in cfg.bands))))
            for t in times
        ]
        st = np.array([p[0] for p in pts])
        ns = np.array([p[1] for p in pts])
    else:  # monte_carlo: st column carries the (inseparable) total delta estimate
        if len(cfg.bands) != 1:
            raise ConfigError("[run] method monte_carlo supports exactly one band")
        mc = cfg.montecarlo
        result = montecarlo.ensemble_dispersion(
            cfg.bands[0], osc, mc.duration, mc.dt, mc.n_modes, mc.n_samples, cfg.seed,
            n_output=mc.n_output, threads=threads,
        )
        times = result.times
        st = result.delta
        ns = np.zeros_like(st)
        vac = result.vac_expected
    rows = [
        [float(t), float(a), float(b), float(c), float(a + b + c), cfg.method]
        for t, a, b, c in zip(times, st, ns, vac)
    ]
    comments = [f"method={cfg.method} seed={cfg.seed}"]
    _emit(cfg, out, "dispersion", ["t", "st", "ns", "vac", "total", "method"], rows, comments)
    return 0


def cmd_rmap(r_max: float, n_r: int, n_theta: int, cfg, out) -> int:
    rs = np.linspace(0.0, r_max, n_r)
    ths = np.linspace(0.0, 2.0 * math.pi, n_theta, endpoint=False)
    r_star, th_star, r_min = dispersion.find_min_R()
    comments = [
        f"minimum: R={format_float(r_min)} at r={format_float(r_star)} theta={format_float(th_star)}"
    ]
    rows = []
    for r in rs:
        sq = kernels.squeeze_derive(float(r), 0.0)
        vals = 2.0 * sq.eta**2 - sq.mu * sq.eta * np.cos(ths)
        neg = vals < 0.0
        crossings = int(np.sum(np.diff(np.sign(vals)) != 0.0))
        width = float(np.sum(neg)) * (2.0 * math.pi / n_theta)
        comments.append(
            f"slice r={format_float(float(r))}: zero_crossings={crossings} "
            f"neg_width={format_float(width)}"
        )
        for th, v in zip(ths, vals):
            rows.append([float(r), float(th), float(v)])
    _emit(cfg, out, "rmap", ["r", "theta", "R"], rows, comments)
    return 0


_REGIME_OPS = {
    asymptotics.Regime.VERY_EARLY: asymptotics.very_early,
    asymptotics.Regime.EARLY_PLATEAU: asymptotics.early_plateau,
    asymptotics.Regime.ONRES_QUADRATIC: asymptotics.onres_quadratic,
    asymptotics.Regime.ONRES_LINEAR: asymptotics.onres_linear_st,
    asymptotics.Regime.ONRES_NS_FLAT: asymptotics.onres_ns_flat,
    asymptotics.Regime.ONRES_LATE: asymptotics.onres_late,
    asymptotics.Regime.OFFRES_EARLY: asymptotics.offres_early,
    asymptotics.Regime.OFFRES_LATE: asymptotics.offres_late,
}


def _rel_dev(asym, exact):
    if asym is None:
        return math.nan
    return (asym - exact) / abs(exact) if exact != 0.0 else math.inf


def cmd_regimes(cfg: RunConfig, out) -> int:
    osc = cfg.oscillator
    rows = []
    for bi, band in enumerate(cfg.bands):
        for regime, op in _REGIME_OPS.items():
            try:
                lo, hi = asymptotics.regime_window(regime, band, osc)
            except RegimeMismatchError:
                continue
            t_eval = math.sqrt(lo * hi) if math.isfinite(hi) else 10.0 * lo
            est = op(t_eval, band, osc)
            st_cf, ns_cf = dispersion.dispersion_closed_form(t_eval, band, osc)
            rows.append([
                bi,
                est.regime.value,
                float(lo),
                float(hi) if math.isfinite(hi) else math.inf,
                float(t_eval),
                float(est.st) if est.st is not None else math.nan,
                float(est.ns) if est.ns is not None else math.nan,
                float(st_cf),
                float(ns_cf),
                float(_rel_dev(est.st, st_cf)),
                float(_rel_dev(est.ns, ns_cf)),
            ])
    cols = [
        "band", "regime", "t_lo", "t_hi", "t_eval",
        "st_asym", "ns_asym", "st_closed_form", "ns_closed_form",
        "rel_dev_st", "rel_dev_ns",
    ]
    _emit(cfg, out, "regimes", cols, rows, [])
    return 0


def cmd_energy(cfg: RunConfig, out) -> int:
    band = cfg.bands[0]
    spec = cfg.energy
    omega_bar = spec.omega_bar if spec.omega_bar is not None else band.Xi
    sq = band.squeeze
    period = 2.0 * math.pi / omega_bar
    ts = np.linspace(0.0, 2.0 * period, 2 * spec.points_per_period, endpoint=False)
    rho = kernels.energy_density(spec.x_phase, ts, omega_bar, sq, spec.volume)
    rho = np.atleast_1d(rho)
    one_period = rho[: spec.points_per_period]
    comments = [
        f"omega_bar={format_float(omega_bar)} x_phase={format_float(spec.x_phase)} "
        f"volume={format_float(spec.volume)}",
        f"min={format_float(float(np.min(one_period)))} "
        f"max={format_float(float(np.max(one_period)))} "
        f"negative_fraction={format_float(float(np.mean(one_period < 0.0)))}",
    ]
    rows = [[float(t), float(v)] for t, v in zip(ts, rho)]
    _emit(cfg, out, "energy", ["t", "rho"], rows, comments)
    return 0


def cmd_simulate(cfg: RunConfig, out, threads: int, validate: bool) -> int:
    if cfg.montecarlo is None:
        raise ConfigError("[montecarlo] block is required for 'simulate'")
    if len(cfg.bands) != 1:
        raise ConfigError("simulate supports exactly one band")
    mc = cfg.montecarlo
    band, osc = cfg.bands[0], cfg.oscillator
    result = montecarlo.ensemble_dispersion(
        band, osc, mc.duration, mc.dt, mc.n_modes, mc.n_samples, cfg.seed,
        n_output=mc.n_output, threads=threads,
    )
    rows = [
        [float(t), float(m), float(s), result.n_samples]
        for t, m, s in zip(result.times, result.mean_v2, result.stderr)
    ]
    comments = [f"seed={cfg.seed} n_modes={mc.n_modes} dt={format_float(mc.dt)}"]
    _emit(cfg, out, "simulate", ["t", "mean_v2", "stderr", "n_samples"], rows, comments)
    if validate:
        worst = 0.0
        for k, t in enumerate(result.times):
            st_q, ns_q = dispersion.dispersion_quadrature(float(t), band, osc)
            z = abs(result.delta[k] - (st_q + ns_q)) / result.stderr[k]
            worst = max(worst, z)
        sys.stderr.write(f"validate: worst |z| = {worst:.2f} (limit 3)\n")
        if worst > 3.0:
            return 1
    return 0


def cmd_fdr(cfg: RunConfig, out) -> int:
    osc = cfg.oscillator
    rows = []
    ok = True
    for bi, band in enumerate(cfg.bands):
        sq = band.squeeze
        expected_in = 2.0 * sq.eta**2 + 1.0
        omegas = list(np.linspace(band.lo, band.hi, 7)) + [0.5 * band.lo, 1.5 * band.hi]
        for w in omegas:
            ratio = kernels.fdr_check(float(w), band, osc)
            inside = band.contains(w)
            expected = expected_in if inside else 1.0
            tol = 1e-9 if inside else 1e-12
            passed = abs(ratio - expected) <= tol * expected
            ok = ok and passed
            rows.append([
                bi, float(w), float(ratio), float(expected), "pass" if passed else "FAIL",
            ])
    cols = ["band", "omega", "ratio", "expected", "status"]
    _emit(cfg, out, "fdr", cols, rows, [])
    if out is not None:
        sys.stdout.write("fdr: all ratios pass\n" if ok else "fdr: FAIL\n")
    return 0 if ok else 1


def main(argv=None) -> int:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="TOML config, JSON config, or JSON result file")
    shared.add_argument("--out", help="output path (.csv or .json)")
    shared.add_argument("--threads", type=int, default=None)
    shared.add_argument("--validate", action="store_true")

    parser = argparse.ArgumentParser(prog="sqnz", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for verb in ("dispersion", "regimes", "energy", "simulate", "fdr"):
        sub.add_parser(verb, parents=[shared])
    rmap = sub.add_parser("rmap", parents=[shared])
    rmap.add_argument("--r-max", type=float, default=3.0)
    rmap.add_argument("--n-r", type=int, default=61)
    rmap.add_argument("--n-theta", type=int, default=121)

    args = parser.parse_args(argv)
    try:
        cfg = None
        if args.command != "rmap" or args.config:
            if args.config is None:
                raise ConfigError(f"'{args.command}' requires --config")
            cfg = load_config(args.config)
        threads = resolve_threads(args.threads, cfg)
        if args.command == "dispersion":
            return cmd_dispersion(cfg, args.out, threads)
        if args.command == "rmap":
            return cmd_rmap(args.r_max, args.n_r, args.n_theta, cfg, args.out)
        if args.command == "regimes":
            return cmd_regimes(cfg, args.out)
        if args.command == "energy":
            return cmd_energy(cfg, args.out)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.out, threads, args.validate)
        if args.command == "fdr":
            return cmd_fdr(cfg, args.out)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except (ValueError, RuntimeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
