"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical
failure.
"""

import argparse
import sys

from ._backend import backend_name
from .exceptions import ContractViolationError, DataFormatError, NumericalError


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; the harness contract is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser():
    parser = _Parser(prog="mces", description="Adaptive maximum-conditional-entropy HMC harness")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[], help="run a benchmark experiment")
    run.add_argument("experiment", help="gauss1d | rosenbrock | eight_schools | german_credit | lgcp | robustness")
    run.add_argument("--config", default=None, help="key = value overrides file")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--replicates", type=int, default=None)
    run.add_argument("--out", default=None, help="output directory (default runs/<experiment>)")
    run.add_argument("--paper-scale", action="store_true",
                     help="full-size configuration (slow; desk-scale is the default)")
    run.add_argument("--workers", type=int, default=1, help="concurrent replicate workers")
    run.add_argument("--data", default=None, help="dataset path (german_credit file or lgcp data dir)")

    verify = sub.add_parser("verify-theorem", help="grid-check the optimal (M, T) result")
    verify.add_argument("--dim", type=int, default=4)
    verify.add_argument("--grid", type=int, default=2000)
    verify.add_argument("--pairs", type=int, default=20)
    verify.add_argument("--seed", type=int, default=0)

    gen = sub.add_parser("gen-lgcp", help="generate a synthetic Cox-process dataset")
    gen.add_argument("--d", type=int, default=16, help="grid side (32 reproduces the full-size setup)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default="lgcp_data")

    ess_cmd = sub.add_parser("ess", help="effective-sample-size report for a trace CSV")
    ess_cmd.add_argument("trace", help="path of a trace_*.csv file")
    ess_cmd.add_argument("--discard", type=int, default=0)

    bench_cmd = sub.add_parser("bench", help="compare the compiled and python backends")
    bench_cmd.add_argument("--trajectories", type=int, default=200)
    bench_cmd.add_argument("--steps", type=int, default=30)
    bench_cmd.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_run(args):
    from . import harness

    out_dir = args.out or f"runs/{args.experiment}"
    spec = harness.build_spec(
        args.experiment,
        out_dir,
        seed=args.seed,
        replicates=args.replicates,
        config_file=args.config,
        paper_scale=args.paper_scale,
        workers=args.workers,
        data_path=args.data,
    )
    if args.paper_scale and args.experiment == "lgcp":
        print("paper-scale lgcp: 1024 dimensions, 5.5e5 samples; expect a long run", file=sys.stderr)
    info = harness.run_experiment(spec)
    print(f"[{backend_name()} backend] {args.experiment} complete -> {info['out_dir']}")
    return 0


def _cmd_verify_theorem(args):
    from . import harness

    passed, rows = harness.verify_theorem(
        dim=args.dim, grid_points=args.grid, n_pairs=args.pairs, seed=args.seed
    )
    for row in rows:
        status = "ok" if row["ok"] else "FAIL"
        print(
            f"pair {row['pair']:>3}: argmax T = {row['argmax_T']:.6f}, "
            f"|cov(pi/2) - target cov|_max = {row['cov_gap']:.2e}  [{status}]"
        )
    print("PASS" if passed else "FAIL")
    return 0 if passed else 3


def _cmd_gen_lgcp(args):
    from . import harness

    truth = harness.generate_lgcp_data(args.d, args.seed)
    harness.save_lgcp_data(truth, args.out)
    total = int(truth.counts.sum())
    print(f"wrote counts/latent/intensity grids ({args.d}x{args.d}, {total} events) to {args.out}")
    return 0


def _cmd_ess(args):
    from .diagnostics import ess_per_l
    from .sampler import load_trace

    trace = load_trace(args.trace)
    report = ess_per_l(trace, args.discard)
    print("dim,ess,ess_per_l")
    for i in range(report.ess.size):
        print(f"{i},{report.ess[i]:.17g},{report.ess_per_l[i]:.17g}")
    return 0


def _cmd_bench(args):
    from .bench import run_benchmark

    run_benchmark(n_trajectories=args.trajectories, n_steps=args.steps, seed=args.seed)
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handler = {
        "run": _cmd_run,
        "verify-theorem": _cmd_verify_theorem,
        "gen-lgcp": _cmd_gen_lgcp,
        "ess": _cmd_ess,
        "bench": _cmd_bench,
    }[args.command]
    try:
        return handler(args)
    except DataFormatError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ContractViolationError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
