"""``qnsolve`` command line: ``bench``, ``flops`` and ``spectrum``.

Exit status is 0 on success, 1 on a solver breakdown or instance-generation
failure, 2 on bad arguments and 3 on an I/O failure.
"""
import argparse
import sys

from qnsolve import bench, broyden_compact, kernels, spectral, sr1_compact
from qnsolve.errors import InstanceGenerationError, QuasiNewtonError

EXIT_OK = 0
EXIT_BREAKDOWN = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _alg_list(text):
    if text.strip().lower() == "all":
        return ()
    try:
        return tuple(int(a) for a in text.split(",") if a.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad algorithm list {text!r}") from None


def _phi(text):
    try:
        return bench.parse_phi(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _instance_args(p):
    p.add_argument("--n", type=int, required=True, help="problem dimension")
    p.add_argument("--memory", type=int, default=5, help="number of stored pairs")
    p.add_argument("--phi", type=_phi, default=0.0, help="Broyden parameter in [0, 1] or 'sr1'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gamma", type=float, default=1.0, help="B0 = gamma * I")
    p.add_argument("--driver", choices=("self", "bfgs"), default=None,
                   help="update class that moves the simulated iterates "
                        "(default: bfgs for sr1, otherwise the benchmarked class)")


def build_parser():
    parser = argparse.ArgumentParser(prog="qnsolve", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="time the solvers on a simulated instance")
    _instance_args(b)
    b.add_argument("--alg", type=_alg_list, default=(), help="comma-separated ids or 'all'")
    b.add_argument("--runs", type=int, default=10)
    b.add_argument("--out", help="CSV output path (default: CSV on stdout)")

    f = sub.add_parser("flops", help="evaluate a closed-form flop model")
    f.add_argument("--alg", type=int, required=True)
    f.add_argument("--n", type=int, required=True)
    f.add_argument("--k", type=int, required=True)

    s = sub.add_parser("spectrum", help="eigenvalues of H for a simulated instance")
    _instance_args(s)
    return parser


def _config(args, **extra):
    return bench.ExperimentConfig(n=args.n, memory=args.memory, phi=args.phi,
                                  seed=args.seed, gamma=args.gamma,
                                  driver=args.driver, **extra)


def _summary(reports, stream):
    times = bench.median_times(reports)
    print(f"{'alg':>4} {'max residual':>14} {'median time [s]':>16}", file=stream)
    for alg in sorted({r.algorithm for r in reports}):
        rows = [r for r in reports if r.algorithm == alg]
        res = max((r.relative_residual for r in rows if r.ok), default=float("nan"))
        print(f"{alg:>4} {res:>14.3e} {times.get(alg, float('nan')):>16.3e}", file=stream)
    print(f"kernel backend: {kernels.BACKEND}", file=stream)


def cmd_bench(args):
    cfg = _config(args, algorithms=args.alg, runs=args.runs, out=args.out)
    reports = bench.run_benchmark(cfg)
    if args.out:
        bench.emit_csv(reports, args.out)
    else:
        bench.write_csv(reports, sys.stdout)
    _summary(reports, sys.stderr)
    failed = [r for r in reports if not r.ok]
    for r in failed:
        print(f"algorithm {r.algorithm}, run {r.run}: {r.error}", file=sys.stderr)
    return EXIT_BREAKDOWN if failed else EXIT_OK


def cmd_flops(args):
    print(bench.flop_model(args.alg, args.n, args.k))
    return EXIT_OK


def cmd_spectrum(args):
    cfg = _config(args, runs=1)
    inst = bench.gen_instance(cfg)
    if cfg.is_sr1:
        state = sr1_compact.build_sr1(inst.buffer)
    else:
        state = broyden_compact.build_states(inst.buffer, cfg.phi)[1]
    print(spectral.spectrum(state))
    return EXIT_OK


COMMANDS = {"bench": cmd_bench, "flops": cmd_flops, "spectrum": cmd_spectrum}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (QuasiNewtonError, InstanceGenerationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BREAKDOWN
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
