"""Command-line interface.

Subcommands:
  run          advance a configured scenario and write snapshots/statistics
  convergence  temporal self-convergence table over a halving dt ladder
  scenarios    list built-in scenarios and their catalog parameters
  check-tableau  evaluate the integrator order conditions

Thread count comes from --threads or the KINHY_THREADS variable and is
clamped to what the runtime allows; results are independent of it.
"""

from __future__ import annotations

import argparse
import os
import sys

_MODE_ALIASES = {
    "hybrid": "hybrid",
    "hybrid-loc": "hybrid_loc",
    "hybrid_loc": "hybrid_loc",
    "kinetic": "full_kinetic",
    "full_kinetic": "full_kinetic",
    "euler": "full_euler",
    "full_euler": "full_euler",
}


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kinhy",
                                 description="hybrid fluid/kinetic solver")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario")
    run.add_argument("config", help="TOML config file")
    run.add_argument("--mode", choices=sorted(set(_MODE_ALIASES)),
                     help="override the solver mode")
    run.add_argument("--threads", type=int, default=None)
    run.add_argument("--out", help="output directory (default from config)")
    run.add_argument("--paper", action="store_true",
                     help="use the published problem size")
    run.add_argument("--probe", action="append", default=[],
                     metavar="I,J", help="dump velocity slices for cell (i, j)")

    conv = sub.add_parser("convergence", help="temporal convergence study")
    conv.add_argument("config", help="TOML config file")
    conv.add_argument("--dts", help="comma-separated halving dt list")
    conv.add_argument("--modes", default="hybrid",
                      help="comma-separated mode list")
    conv.add_argument("--levels", type=int, default=4,
                      help="number of halvings when --dts is not given")
    conv.add_argument("--threads", type=int, default=None)
    conv.add_argument("--out", help="output directory (default from config)")
    conv.add_argument("--paper", action="store_true")

    sub.add_parser("scenarios", help="list built-in scenarios")

    chk = sub.add_parser("check-tableau", help="integrator order conditions")
    chk.add_argument("--order", type=int, default=3, choices=(1, 2, 3))
    return ap


def _setup_threads(requested):
    if requested is None:
        env = os.environ.get("KINHY_THREADS", "").strip()
        requested = int(env) if env else None
    if requested is not None and requested < 1:
        raise SystemExit("thread count must be positive")
    if requested is not None and "NUMBA_NUM_THREADS" not in os.environ:
        os.environ["NUMBA_NUM_THREADS"] = str(requested)
    import numba

    available = numba.config.NUMBA_NUM_THREADS
    effective = min(requested or available, available)
    numba.set_num_threads(max(1, effective))
    return max(1, effective)


def _load_config(path, paper, mode=None, out=None, probes=()):
    from .config import make_config, parse_overrides

    with open(path, "rb") as fh:
        text = fh.read().decode("utf-8")
    scenario, paper_scale, flat = parse_overrides(text)
    if paper:
        paper_scale = True
    if mode is not None:
        flat["mode"] = _MODE_ALIASES[mode]
    if out is not None:
        flat["out_dir"] = out
    if probes:
        flat["probes"] = tuple(flat.get("probes", ())) + tuple(probes)
    return make_config(scenario, paper_scale=paper_scale, **flat)


def _manifest(cfg, threads, timings, extra=None):
    from . import __version__

    man = {"config": cfg.to_dict(), "version": __version__,
           "threads": threads, "timings_seconds": timings}
    if extra:
        man.update(extra)
    return man


def _cmd_run(args) -> int:
    threads = _setup_threads(args.threads)
    probes = []
    for spec in args.probe:
        try:
            i, j = (int(p) for p in spec.split(","))
        except ValueError:
            raise SystemExit(f"bad --probe value {spec!r}, expected I,J")
        probes.append((i, j))
    cfg = _load_config(args.config, args.paper, args.mode, args.out, probes)
    from . import io
    from .driver import run_simulation

    out_dir = io.ensure_dir(cfg.out_dir)
    result = run_simulation(cfg, out_dir=out_dir)
    io.write_manifest(os.path.join(out_dir, "manifest.json"),
                      _manifest(cfg, threads, result.timings,
                                {"steps": result.steps, "t_final": result.t}))
    frac = result.stats.fraction[-1] if result.stats.fraction else 0.0
    print(f"{cfg.scenario} [{cfg.mode}] finished: {result.steps} steps "
          f"to t={result.t:.6f}, kinetic fraction {frac:.3f}, "
          f"outputs in {out_dir}")
    return 0


def _cmd_convergence(args) -> int:
    threads = _setup_threads(args.threads)
    cfg = _load_config(args.config, args.paper, None, args.out)
    modes = []
    for name in args.modes.split(","):
        name = name.strip()
        if name not in _MODE_ALIASES:
            raise SystemExit(f"unknown mode {name!r}")
        modes.append(_MODE_ALIASES[name])
    dts = None
    if args.dts:
        dts = [float(s) for s in args.dts.split(",")]
    from . import io
    from .driver import run_convergence_study

    rows = run_convergence_study(cfg, dts=dts, modes=modes, levels=args.levels)
    out_dir = io.ensure_dir(cfg.out_dir)
    io.write_convergence(os.path.join(out_dir, "convergence.csv"), rows)
    io.write_manifest(os.path.join(out_dir, "manifest.json"),
                      _manifest(cfg, threads, {},
                                {"modes": modes,
                                 "dts": [r[0] for r in rows]}))
    for dt, err, order, mode, _ in rows:
        order_s = "  --" if order is None else f"{order:.2f}"
        print(f"{mode:>12s}  dt={dt:.6e}  err={err:.6e}  order={order_s}")
    return 0


def _cmd_scenarios() -> int:
    from .config import SCENARIOS, make_config

    for name in SCENARIOS:
        desk = make_config(name)
        paper = make_config(name, paper_scale=True)
        print(f"{name}: desk {desk.nx}x{desk.ny} (nv={desk.nv}), "
              f"paper {paper.nx}x{paper.ny} (nv={paper.nv}), "
              f"vmax={desk.vmax:g}, epsilon={desk.epsilon:g}, "
              f"eta={desk.eta:g}, delta={desk.delta:g}, "
              f"t_end={desk.t_end:g}, mode={desk.mode}")
    return 0


def _cmd_check_tableau(order: int) -> int:
    from .stepper import ORDER_TOL, ars233, check_order_conditions

    report = check_order_conditions(ars233(), p=order)
    for label, value in report.residuals:
        print(f"{label:>16s}: {value: .3e}")
    print(f"max residual {report.max_residual:.3e} "
          f"({'PASS' if report.passed else 'FAIL'} at tolerance {ORDER_TOL:g})")
    return 0 if report.passed else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    from .errors import KinhyError

    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "convergence":
            return _cmd_convergence(args)
        if args.command == "scenarios":
            return _cmd_scenarios()
        if args.command == "check-tableau":
            return _cmd_check_tableau(args.order)
    except KinhyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
