"""Command-line entry points for experiments, reports and diagnostics.

Output directory resolution: --outdir flag, else $SFFCC_OUTDIR, else the
current directory.  Sweep commands write `<name>.csv` plus `<name>.json`
(the manifest records plan, seed and config hash; timestamps live only in
the manifest so repeated runs produce byte-identical CSV).
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
import time

import numpy as np

from . import chronology, dephasing, montecarlo, oracle
from .config import ConfigError, load_config, parse_grid
from .lattice import build_lattice, build_syndrome_graph, lattice_to_json


def _outdir(args) -> str:
    out = args.outdir or os.environ.get("SFFCC_OUTDIR") or "."
    os.makedirs(out, exist_ok=True)
    return out


def _common(parser):
    parser.add_argument("--config", help="key=value configuration file")
    parser.add_argument("--outdir", help="output directory (default $SFFCC_OUTDIR or .)")
    parser.add_argument("--workers", type=int, default=None,
                        help="trial worker processes (default: available parallelism)")
    parser.add_argument("--name", help="output file stem")


def _overrides(args, keys):
    out = {}
    for key in keys:
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            out[key] = val if isinstance(val, str) else str(val)
    return out


def _write_sweep(args, sweep, cfg, stem):
    out = _outdir(args)
    csv_path = os.path.join(out, stem + ".csv")
    json_path = os.path.join(out, stem + ".json")
    with open(csv_path, "w") as fh:
        fh.write(montecarlo.sweep_to_csv(sweep))
    manifest = montecarlo.sweep_manifest(
        sweep, config_hash=cfg.config_hash(),
        timestamp=datetime.datetime.now(datetime.timezone.utc).isoformat())
    with open(json_path, "w") as fh:
        fh.write(manifest)
    return csv_path, json_path


def cmd_threshold(args) -> int:
    cfg = load_config(args.config, _overrides(args, (
        "channel", "grid", "lattice_sizes", "n_attempts", "trials", "master_seed",
        "bias_after_loss", "reinit_after_zz_only", "buffer_noise", "matcher",
        "p_loss", "p_b", "p_dep", "p_Z_spin", "p_X_photon", "p_Z_photon",
        "p_blink", "blink_rate", "kappa_bar")))
    plan = cfg.plan()
    t0 = time.time()
    sweep = montecarlo.run_sweep(plan, workers=args.workers)
    stem = args.name or f"threshold_{cfg.channel}_N{cfg.n_attempts}"
    csv_path, json_path = _write_sweep(args, sweep, cfg, stem)
    print(f"wrote {csv_path} and {json_path} ({time.time() - t0:.1f}s)")
    try:
        th, sigma = montecarlo.find_threshold(sweep)
        print(f"threshold ({cfg.channel}, N={cfg.n_attempts}): "
              f"{100 * th:.3f}% +- {100 * sigma:.3f} pp")
    except montecarlo.NoThresholdInRange as exc:
        print(f"no threshold in range: {exc}")
        return 1
    return 0


def cmd_sweep_n(args) -> int:
    cfg = load_config(args.config, _overrides(args, (
        "channel", "grid", "lattice_sizes", "trials", "master_seed",
        "bias_after_loss", "reinit_after_zz_only", "buffer_noise", "matcher")))
    n_values = [int(x) for x in args.N.split(",")]
    rows, peak = montecarlo.sweep_n(
        cfg.channel, n_values, cfg.grid, lattice_sizes=cfg.lattice_sizes,
        trials=cfg.trials, master_seed=cfg.master_seed,
        bias_after_loss=cfg.bias_after_loss,
        reinit_after_zz_only=cfg.reinit_after_zz_only,
        buffer_noise=cfg.buffer_noise, matcher=cfg.matcher,
        workers=args.workers)
    out = _outdir(args)
    stem = args.name or f"sweep_n_{cfg.channel}"
    path = os.path.join(out, stem + ".csv")
    with open(path, "w") as fh:
        fh.write("n_attempts,threshold,sigma\n")
        for n, th, sigma in rows:
            fh.write(f"{n},{'' if th is None else f'{th:.8g}'},"
                     f"{'' if sigma is None else f'{sigma:.8g}'}\n")
    print(f"wrote {path}")
    for n, th, sigma in rows:
        shown = "none-in-grid" if th is None else f"{100 * th:.3f}%"
        print(f"  N={n}: threshold {shown}")
    if peak is not None:
        print(f"peak at N={peak}")
    return 0


def cmd_clock(args) -> int:
    cfg = load_config(args.config, _overrides(args, (
        "n_attempts", "trials", "master_seed", "p_loss",
        "bias_after_loss", "reinit_after_zz_only")))
    L = args.L
    plan_grid = (cfg.noise.get("p_loss", 0.0) or 1e-12,)
    cfg.grid = plan_grid
    cfg.channel = "loss"
    cfg.lattice_sizes = (L,)
    plan = cfg.plan()
    sweep = montecarlo.run_sweep(plan, workers=args.workers)
    point = sweep.points[0]
    mean_units = point.mean_tau
    lo, hi = chronology.tau_logical_bounds(L, cfg.n_attempts)
    print(f"L={L} N={cfg.n_attempts} loss={cfg.noise.get('p_loss', 0.0):.4f}: "
          f"mean tau_logical = {mean_units:.2f} tau_echo "
          f"(bounds {lo}..{hi} tau_echo)")
    if args.tau_echo_ns:
        print(f"  = {mean_units * args.tau_echo_ns / 1000.0:.3f} us "
              f"at tau_echo = {args.tau_echo_ns} ns")
    return 0


def cmd_count_resources(args) -> int:
    rc = chronology.count_resources(args.L, ebf=args.ebf)
    text = json.dumps(rc.as_dict(), indent=2, sort_keys=True)
    if args.outdir or os.environ.get("SFFCC_OUTDIR"):
        path = os.path.join(_outdir(args), args.name or f"resources_L{args.L}.json")
        with open(path, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote {path}")
    print(text)
    return 0


def cmd_check_timing(args) -> int:
    if args.preset == "reference":
        params = chronology.REFERENCE_TIMINGS
    elif args.preset == "consistent":
        params = chronology.CONSISTENT_TIMINGS
    else:
        required = dict(tau_rep=args.tau_rep, tau_echo=args.tau_echo,
                        tau_int=args.tau_int, tau_d=args.tau_d, tau_p=args.tau_p,
                        tau_pi=args.tau_pi, tau_tb=args.tau_tb,
                        tau_ebf=args.tau_ebf, tau_ps=args.tau_ps)
        missing = [k for k, v in required.items() if v is None]
        if missing:
            print(f"missing timing values: {', '.join(missing)}", file=sys.stderr)
            return 2
        params = chronology.TimingParams(**required)
    checks = chronology.check_timing(params)
    ok = True
    for c in checks:
        status = "ok " if c.satisfied else "FAIL"
        ok = ok and c.satisfied
        print(f"[{status}] {c.constraint:15s} {c.description:40s} margin {c.margin:+.3f} ns")
    print("consistent" if ok else "inconsistent")
    return 0 if ok else 1


def cmd_benchmarks(args) -> int:
    thresholds = {}
    for key in ("loss", "branching", "spin_depol", "photon_x", "photon_z", "blinking"):
        val = getattr(args, key)
        if val is not None:
            thresholds[key] = val
    if args.gs_dephasing is not None:
        thresholds["ground_state_dephasing"] = (args.gs_dephasing, args.gs_n)
    out = chronology.convert_benchmarks(thresholds)
    if not out:
        print("no thresholds supplied", file=sys.stderr)
        return 2
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def cmd_dephasing(args) -> int:
    m_range = range(args.m_min, args.m_max + 1)
    rows = dephasing.infidelity_curve(m_range, args.N, args.p_z, args.trials,
                                      seed=args.seed)
    out = _outdir(args)
    path = os.path.join(out, args.name or f"dephasing_pz{args.p_z:g}.csv")
    with open(path, "w") as fh:
        fh.write("m_qubits,analytic_infidelity,stochastic_infidelity,sem,sample_band\n")
        for m, ana, mean, sem, band in rows:
            fh.write(f"{m},{ana:.8g},{mean:.8g},{sem:.8g},{band:.8g}\n")
    print(f"wrote {path}")
    for m, ana, mean, sem, _ in rows:
        print(f"  M={m}: analytic {ana:.5f}  stochastic {mean:.5f} +- {sem:.5f}")
    return 0


def cmd_dump_lattice(args) -> int:
    spec = build_lattice(args.L)
    graph = build_syndrome_graph(spec) if args.checks else None
    text = lattice_to_json(spec, graph)
    if args.outdir or os.environ.get("SFFCC_OUTDIR"):
        path = os.path.join(_outdir(args), args.name or f"lattice_L{args.L}.json")
        with open(path, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote {path}")
    else:
        print(text)
    return 0


def cmd_oracle(args) -> int:
    if args.oracle_cmd != "verify-rules":
        print("unknown oracle subcommand", file=sys.stderr)
        return 2
    reports = oracle.verify_rules(args.max_n, args.max_m)
    by_kind: dict = {}
    for r in reports:
        by_kind.setdefault(r["fault"].kind, []).append(r)
    print(f"verified {len(reports)} single-fault locations "
          f"(N <= {args.max_n}, M <= {args.max_m}); straddle pairs included")
    for kind, rows in sorted(by_kind.items()):
        lost = sum(1 for r in rows if r["lost_rounds"])
        print(f"  {kind:10s} {len(rows):4d} locations, {lost} with photon loss")
    print("all effective rules match the amplitude-level evolution")
    return 0


def cmd_bench(args) -> int:
    from .backend import USE_NUMBA, python_impl
    from .montecarlo import ExperimentPlan, TrialEngine, trial_seed
    from . import kernels

    eng = TrialEngine(args.L)
    plan = ExperimentPlan(channel="loss", grid=(args.p_loss,),
                          lattice_sizes=(args.L,), trials=args.trials,
                          n_attempts=args.N)
    vec = plan.noise_at(args.p_loss).as_vector()
    flags = plan.flags()

    def timed(fn):
        t0 = time.perf_counter()
        for t in range(args.trials):
            fn(np.uint64(trial_seed(1, 0, t)), eng.spec.L, args.N, flags,
               eng.edges_by_colour, eng.endpoints, vec,
               eng._xxf, eng._xxe, eng._zzf, eng._zze, eng._lnm,
               eng._sx, eng._sz, eng._blink, eng._first, eng._slot_attempts)
        return time.perf_counter() - t0

    if USE_NUMBA:
        kernels.run_trial(np.uint64(1), eng.spec.L, args.N, flags,
                          eng.edges_by_colour, eng.endpoints, vec,
                          eng._xxf, eng._xxe, eng._zzf, eng._zze, eng._lnm,
                          eng._sx, eng._sz, eng._blink, eng._first,
                          eng._slot_attempts)   # compile before timing
        jit_t = timed(kernels.run_trial)
        py_t = timed(python_impl(kernels.run_trial))
        print(f"L={args.L} N={args.N} loss={args.p_loss} x{args.trials} trials")
        print(f"  numba backend : {jit_t:8.3f}s ({args.trials / jit_t:9.1f} trials/s)")
        print(f"  python backend: {py_t:8.3f}s ({args.trials / py_t:9.1f} trials/s)")
        print(f"  speedup       : {py_t / jit_t:8.1f}x")
    else:
        py_t = timed(kernels.run_trial)
        print(f"pure python backend (SFFCC_NUMBA=0): {py_t:.3f}s "
              f"({args.trials / py_t:.1f} trials/s)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sffcc",
        description="Monte Carlo threshold and resource analysis for "
                    "fusion-based photonic error correction on the sFFCC lattice")
    sub = ap.add_subparsers(dest="cmd", required=True)

    t = sub.add_parser("threshold", help="sweep one noise channel and locate the threshold")
    _common(t)
    t.add_argument("--channel", choices=sorted(montecarlo.CHANNELS))
    t.add_argument("--grid", help="start:stop:step or comma list")
    t.add_argument("--L", dest="lattice_sizes", help="comma list of code distances")
    t.add_argument("--N", dest="n_attempts", type=int, help="max fusion attempts")
    t.add_argument("--trials", type=int)
    t.add_argument("--seed", dest="master_seed", type=int)
    t.add_argument("--matcher", choices=("exact", "unionfind"))
    for flag in ("bias-after-loss", "reinit-after-zz-only", "buffer-noise"):
        t.add_argument(f"--{flag}", dest=flag.replace("-", "_"), choices=("0", "1"))
    for k in ("p-loss", "p-b", "p-dep", "p-Z-spin", "p-X-photon", "p-Z-photon",
              "p-blink", "blink-rate", "kappa-bar"):
        t.add_argument(f"--{k}", dest=k.replace("-", "_"), type=float)
    t.set_defaults(func=cmd_threshold)

    s = sub.add_parser("sweep-n", help="threshold versus maximum attempt budget N")
    _common(s)
    s.add_argument("--channel", choices=sorted(montecarlo.CHANNELS), required=True)
    s.add_argument("--N", required=True, help="comma list of attempt budgets")
    s.add_argument("--grid", required=True)
    s.add_argument("--L", dest="lattice_sizes")
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", dest="master_seed", type=int)
    s.set_defaults(func=cmd_sweep_n)

    c = sub.add_parser("clock", help="mean logical clock-cycle time from trials")
    _common(c)
    c.add_argument("--L", type=int, default=3)
    c.add_argument("--N", dest="n_attempts", type=int, default=8)
    c.add_argument("--loss", dest="p_loss", type=float, default=0.08)
    c.add_argument("--trials", type=int, default=2000)
    c.add_argument("--seed", dest="master_seed", type=int)
    c.add_argument("--tau-echo-ns", type=float, default=None)
    c.add_argument("--reinit-after-zz-only", choices=("0", "1"))
    c.set_defaults(func=cmd_clock)

    r = sub.add_parser("count-resources", help="physical element counts at distance L")
    _common(r)
    r.add_argument("--L", type=int, required=True)
    r.add_argument("--ebf", action="store_true", help="excitation-based feedback variant")
    r.set_defaults(func=cmd_count_resources)

    k = sub.add_parser("check-timing", help="evaluate the six scheduling constraints")
    _common(k)
    k.add_argument("--preset", choices=("reference", "consistent"))
    for name in ("tau-rep", "tau-echo", "tau-int", "tau-d", "tau-p", "tau-pi",
                 "tau-tb", "tau-ebf", "tau-ps"):
        k.add_argument(f"--{name}", dest=name.replace("-", "_"), type=float)
    k.set_defaults(func=cmd_check_timing)

    b = sub.add_parser("benchmarks", help="convert thresholds into hardware targets")
    _common(b)
    for name in ("loss", "branching", "spin-depol", "photon-x", "photon-z", "blinking",
                 "gs-dephasing"):
        b.add_argument(f"--{name}", dest=name.replace("-", "_"), type=float)
    b.add_argument("--gs-n", type=int, default=10)
    b.set_defaults(func=cmd_benchmarks)

    d = sub.add_parser("dephasing", help="analytic vs stochastic cluster infidelity")
    _common(d)
    d.add_argument("--p-z", dest="p_z", type=float, required=True)
    d.add_argument("--N", type=int, default=8)
    d.add_argument("--m-min", type=int, default=1)
    d.add_argument("--m-max", type=int, default=6)
    d.add_argument("--trials", type=int, default=4000)
    d.add_argument("--seed", type=int, default=0)
    d.set_defaults(func=cmd_dephasing)

    l = sub.add_parser("dump-lattice", help="serialize the lattice as JSON")
    _common(l)
    l.add_argument("--L", type=int, required=True)
    l.add_argument("--checks", action="store_true", help="include check structure")
    l.set_defaults(func=cmd_dump_lattice)

    o = sub.add_parser("oracle", help="amplitude-level rule verification")
    _common(o)
    o.add_argument("oracle_cmd", choices=("verify-rules",))
    o.add_argument("--max-n", type=int, default=3)
    o.add_argument("--max-m", type=int, default=2)
    o.set_defaults(func=cmd_oracle)

    g = sub.add_parser("bench", help="time the trial kernel on both backends")
    _common(g)
    g.add_argument("--L", type=int, default=3)
    g.add_argument("--N", type=int, default=8)
    g.add_argument("--p-loss", dest="p_loss", type=float, default=0.08)
    g.add_argument("--trials", type=int, default=200)
    g.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
