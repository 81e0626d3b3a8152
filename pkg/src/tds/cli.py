"""Command-line harness: tds bench|scaling|accuracy|pde.

Every subcommand prints a short summary, and with --out writes a CSV
plus a rendered figure next to it (same name, .png). Exit codes: 0 on
success, 2 on configuration errors, 3 when a correctness check fails.
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .bench import (
    ACCURACY_COLUMNS,
    CSV_COLUMNS,
    PDE_COLUMNS,
    SOLVER_NAMES,
    BenchConfig,
    run_accuracy,
    run_pde,
    run_scaling,
    run_solver_bench,
)
from .errors import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CHECK = 3


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tds", description="batched tridiagonal solver harness")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, descr in (
        ("bench", "single-process throughput sweep at fixed total points"),
        ("scaling", "simulated-rank strong scaling at fixed global size"),
        ("accuracy", "derivative order-of-accuracy table"),
        ("pde", "transport-equation evaluation with movement ledger"),
    ):
        p = sub.add_parser(name, help=descr)
        p.add_argument("--nx", type=int, default=256)
        p.add_argument("--ny", type=int, default=64)
        p.add_argument("--nz", type=int, default=64)
        p.add_argument("--sz", type=int, default=8,
                       help="interleaved group width")
        p.add_argument("--ranks", type=int, default=2,
                       help="simulated rank count")
        p.add_argument("--solver", choices=SOLVER_NAMES, default="thomas")
        p.add_argument("--repeats", type=int, default=3)
        p.add_argument("--seed", type=int, default=1234)
        p.add_argument("--peak-gbps", type=float, default=0.0,
                       help="peak memory bandwidth for %%-of-peak (user-supplied)")
        p.add_argument("--out", type=str, default="",
                       help="CSV output path; a .png figure lands beside it")
        p.add_argument("--cyclic", action="store_true",
                       help="periodic (cyclic) systems")
        p.add_argument("--pad", action="store_true",
                       help="pad transverse lines up to a multiple of sz")
    return parser


def config_from_args(args):
    return BenchConfig(
        subcommand=args.subcommand, nx=args.nx, ny=args.ny, nz=args.nz,
        sz=args.sz, ranks=args.ranks, solver=args.solver,
        repeats=args.repeats, seed=args.seed, peak_gbps=args.peak_gbps,
        out=args.out, cyclic=args.cyclic, pad=args.pad)


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)


def _figure_path(out):
    return str(Path(out).with_suffix(".png"))


def _plot(out, draw):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    draw(ax)
    fig.tight_layout()
    fig.savefig(_figure_path(out), dpi=120)
    plt.close(fig)


def _median_by(records, key):
    groups = {}
    for rec in records:
        groups.setdefault(key(rec), []).append(rec.runtime_s)
    return {k: float(np.median(v)) for k, v in sorted(groups.items())}


def _cmd_bench(cfg):
    records, ok, msg = run_solver_bench(cfg)
    med = _median_by(records, lambda r: r.n)
    for n, t in med.items():
        points = next(r.points for r in records if r.n == n)
        print(f"n={n:6d} median {t * 1e3:9.3f} ms "
              f"({t / points * 1e9:8.3f} ns/point)")
    if cfg.out:
        write_csv(cfg.out, CSV_COLUMNS, [r.row() for r in records])

        def draw(ax):
            ns = list(med)
            per_point = [med[n] / next(r.points for r in records if r.n == n)
                         for n in ns]
            ax.loglog(ns, per_point, "o-", label=cfg.solver)
            ax.set_xlabel("system size n")
            ax.set_ylabel("runtime per point (s)")
            ax.set_title("throughput sweep at fixed total points")
            ax.grid(True, which="both", alpha=0.3)
            ax.legend()

        _plot(cfg.out, draw)
        print(f"wrote {cfg.out} and {_figure_path(cfg.out)}")
    if not ok:
        print(f"correctness check failed: {msg}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def _cmd_scaling(cfg):
    records, eff, ok, msg = run_scaling(cfg)
    for p, e in eff.items():
        rounds = "" if p == 1 else "  (message rounds per solve: 2)"
        print(f"P={p:3d} efficiency {100 * e:6.1f}%{rounds}")
    if cfg.out:
        write_csv(cfg.out, CSV_COLUMNS, [r.row() for r in records])
        med = _median_by(records, lambda r: r.P)

        def draw(ax):
            ps = list(med)
            ax.loglog(ps, [med[p] for p in ps], "o-", label="measured")
            ax.loglog(ps, [med[ps[0]] for _ in ps], ":", label="fixed-work reference")
            ax.set_xlabel("simulated ranks P")
            ax.set_ylabel("runtime (s)")
            ax.set_title("strong scaling, fixed global size")
            ax.grid(True, which="both", alpha=0.3)
            ax.legend()

        _plot(cfg.out, draw)
        print(f"wrote {cfg.out} and {_figure_path(cfg.out)}")
    if not ok:
        print(f"scaling audit failed: {msg}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def _cmd_accuracy(cfg):
    rows, results, ok, msg = run_accuracy(cfg)
    serial, dist = results["serial"], results["dist"]
    print(f"serial slope {serial.slope:.4f}, distributed slope {dist.slope:.4f}")
    for n in serial.n_list:
        print(f"n={n:4d} serial {serial.error_at(n):.6e} "
              f"dist {dist.error_at(n):.6e} "
              f"pointwise diff {results['diffs'][n]:.3e}")
    if cfg.out:
        write_csv(cfg.out, ACCURACY_COLUMNS, rows)

        def draw(ax):
            ns = np.array(serial.n_list, dtype=float)
            ax.loglog(ns, serial.errors, "o-", label="serial")
            ax.loglog(ns, dist.errors, "s--", label=f"distributed P={cfg.ranks}")
            ref = serial.errors[0] * (ns / ns[0]) ** -6.0
            ax.loglog(ns, ref, ":", label="slope -6 reference")
            ax.set_xlabel("grid points n")
            ax.set_ylabel("max error")
            ax.set_title("first-derivative convergence on sin")
            ax.grid(True, which="both", alpha=0.3)
            ax.legend()

        _plot(cfg.out, draw)
        print(f"wrote {cfg.out} and {_figure_path(cfg.out)}")
    if not ok:
        print(f"accuracy check failed: {msg}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def _cmd_pde(cfg):
    rows, stats, ok, msg = run_pde(cfg)
    print(f"evaluation took {stats['runtime_s']:.3f} s; "
          f"reorder fraction {100 * stats['reorder_fraction']:.1f}% "
          f"of {stats['total_traversals']} logical traversals")
    if stats["checked"]:
        print("fused-vs-reference check:", "pass" if ok else "FAIL")
    if cfg.out:
        write_csv(cfg.out, PDE_COLUMNS, rows)

        def draw(ax):
            names = [r[0] for r in rows]
            traversals = [r[5] for r in rows]
            ax.bar(names, traversals)
            ax.set_ylabel("logical field traversals")
            ax.set_title("transport-equation movement by kernel")

        _plot(cfg.out, draw)
        print(f"wrote {cfg.out} and {_figure_path(cfg.out)}")
    if not ok:
        print(f"pde check failed: {msg}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


_COMMANDS = {
    "bench": _cmd_bench,
    "scaling": _cmd_scaling,
    "accuracy": _cmd_accuracy,
    "pde": _cmd_pde,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = config_from_args(args)
    try:
        return _COMMANDS[args.subcommand](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
