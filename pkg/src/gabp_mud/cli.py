"""``gabp-mud`` command line.

Exit codes: 0 success, 1 input error, 2 the solver did not converge (or
broke down numerically). Outputs are still written on exit 2.
"""
from __future__ import annotations

import argparse
import copy
import os
import sys

import numpy as np

from . import io
from .config import SWEEP_KEYS, ConfigError, RunConfig, load_config, parse_sweep, set_value
from .detectors import ETA, DetectorSpec, detect
from .diagnostics import check_diagonal_dominance, diagnose
from .gabp import SolverConfig, SolverError, ZeroDiagonalError, run
from .io import fmt
from .matrix import build_augmented
from .montanari import lockstep
from .simulator import (CSV_COLUMNS, run_metadata, run_trials, summarize, write_csv,
                        write_plot_data)

EXIT_OK, EXIT_INPUT, EXIT_NOCONV = 0, 1, 2


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _default_threads():
    try:
        return max(1, int(os.environ.get("GABP_MUD_THREADS", "1")))
    except ValueError:
        return 1


def _solver_args(p):
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.add_argument("--max-iterations", type=int, default=10_000)
    p.add_argument("--schedule", choices=["synchronous", "sequential"], default="synchronous")
    p.add_argument("--damping", type=float, default=0.0)
    p.add_argument("--threads", type=int, default=_default_threads(),
                   help="worker cap (default: $GABP_MUD_THREADS or 1)")


def _solver_config(args):
    try:
        return SolverConfig(args.tolerance, args.max_iterations, args.schedule,
                            args.damping, max(1, args.threads))
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _read(reader, path):
    try:
        return reader(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _noise(value, n):
    """A float literal or a path to a vector file."""
    try:
        return np.full(n, float(value))
    except ValueError:
        psi = _read(io.read_vector, value)
        if psi.shape[0] != n:
            raise InputError(f"{value}: {psi.shape[0]} noise variances for {n} chips") from None
        return psi


def _flag(v):
    return "true" if v else "false"


def _out(text, path=None):
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args):
    A = _read(io.read_symmetric, args.matrix)
    b = _read(io.read_vector, args.rhs)
    if b.shape[0] != A.dim:
        raise InputError(f"{args.rhs}: {b.shape[0]} entries for a {A.dim}-dimensional system")
    config = _solver_config(args)
    try:
        result = run(A, b, config)
    except ZeroDiagonalError as exc:
        raise InputError(str(exc)) from None
    except SolverError as exc:
        print(f"solver breakdown: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    _out("".join(fmt(v) + "\n" for v in result.means), args.output)
    if args.precisions:
        io.write_vector(args.precisions, result.precisions)
    if args.residuals:
        io.write_vector(args.residuals, result.residual_history or [0.0])
    print(f"converged {_flag(result.converged)} iterations {result.iterations}",
          file=sys.stderr)
    return EXIT_OK if result.converged else EXIT_NOCONV


def cmd_detect(args):
    S = _read(io.read_rectangular, args.spreading)
    y = _read(io.read_vector, args.observation)
    n, k = S.shape
    if y.shape[0] != n:
        raise InputError(f"{args.observation}: {y.shape[0]} samples for {n} chips")
    psi = _noise(args.noise, n) if args.noise is not None else np.zeros(n)
    spec = DetectorSpec(args.detector, args.clip)
    if spec.kind == "mmse" and not np.all(psi > 0):
        raise InputError("mmse needs --noise with positive variances")
    config = _solver_config(args)
    try:
        det = detect(spec, S, psi, y, config)
    except SolverError as exc:
        print(f"solver breakdown: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    if args.output:
        io.write_vector(args.output, det.estimates)
    if args.raw_output:
        io.write_vector(args.raw_output, det.raw)
    res = det.result
    lines = [f"detector {spec.kind}"]
    if res is not None:
        used = psi if spec.kind == "mmse" else np.full(n, ETA)
        dd, margin = check_diagonal_dominance(build_augmented(S, used))
        lines += [f"iterations {res.iterations}",
                  f"converged {_flag(res.converged)}",
                  f"diagonally_dominant {_flag(dd)} margin {fmt(margin)}"]
    lines += [f"raw {' '.join(fmt(v) for v in det.raw)}",
              f"estimate {' '.join(fmt(v) for v in det.estimates)}"]
    print("\n".join(lines))
    return EXIT_OK if res is None or res.converged else EXIT_NOCONV


def _apply_overrides(config: RunConfig, args):
    pairs = [("scenario", "seed", args.seed), ("scenario", "num_frames", args.frames),
             ("scenario", "sigma2", args.sigma2), ("output", "csv", args.csv),
             ("output", "plot_prefix", args.plot_prefix), ("solver", "damping", args.damping)]
    for section, key, value in pairs:
        if value is not None:
            set_value(config, section, key, value)


def cmd_simulate(args):
    try:
        config = load_config(args.config)
        _apply_overrides(config, args)
        sweep = parse_sweep(args.sweep) if args.sweep else None
    except OSError as exc:
        raise InputError(f"cannot read {args.config}: {exc.strerror}") from None
    except ConfigError as exc:
        raise InputError(str(exc)) from None
    threads = max(1, args.threads)
    points = sweep[1] if sweep else [0]
    rows = []
    for value in points:
        cfg = copy.deepcopy(config)
        if sweep:
            set_value(cfg, SWEEP_KEYS[sweep[0]], sweep[0], value)
        try:
            scenario = cfg.make_scenario()
            solver = cfg.make_solver()
            detectors = cfg.make_detectors()
        except ValueError as exc:
            raise InputError(str(exc)) from None
        try:
            records = run_trials(scenario, detectors, solver, workers=threads)
        except SolverError as exc:
            print(f"solver breakdown at {sweep[0] if sweep else 'batch'}={value}: {exc}",
                  file=sys.stderr)
            return EXIT_NOCONV
        except ValueError as exc:
            raise InputError(str(exc)) from None
        rows += summarize(records, scenario.scenario_hash(), batch=value)
    csv_path = config.output.csv
    write_csv(csv_path, rows, CSV_COLUMNS)
    meta = run_metadata(config.make_scenario())
    print(f"wrote {len(rows)} rows to {csv_path} "
          f"(rng {meta['rng']}, normals {meta['normal_transform']})")
    if config.output.plot_prefix:
        xlabel = sweep[0] if sweep else "batch"
        for kind in dict.fromkeys(r["detector"] for r in rows):
            path = f"{config.output.plot_prefix}_{kind}.dat"
            write_plot_data(path, [(r["batch"], r["ber"]) for r in rows if r["detector"] == kind],
                            xlabel, "ber")
            print(f"wrote {path}")
    return EXIT_OK


def cmd_diagnose(args):
    S = _read(io.read_rectangular, args.spreading)
    n = S.shape[0]
    psi = _noise(args.noise, n)
    report = diagnose(S, psi, args.eps)
    lines = [
        f"diagonally_dominant {_flag(report.is_diagonally_dominant)}",
        f"dd_margin {fmt(report.dd_margin)}",
        f"noise_threshold_satisfied {_flag(report.noise_threshold_satisfied)}",
        f"noise_threshold_value {fmt(report.noise_threshold_value)}",
        f"min_noise {fmt(psi.min())}",
        f"walk_summable {_flag(report.walk_summable)}",
        f"spectral_radius {fmt(report.spectral_radius_estimate)}",
        f"regularization_total {fmt(np.abs(report.regularization).sum())}",
        f"regularization {' '.join(fmt(v) for v in report.regularization)}",
    ]
    print("\n".join(lines))
    return EXIT_OK


def cmd_montanari_equiv(args):
    if args.k < 1 or args.n < 1:
        raise InputError("--k and --n must be positive")
    if not args.sigma2 > 0:
        raise InputError("--sigma2 must be positive; Montanari's rules need noise")
    rng = np.random.default_rng(args.seed)
    S = rng.choice(np.array([-1.0, 1.0]), size=(args.n, args.k))
    x = rng.choice(np.array([-1.0, 1.0]), size=args.k)
    y = S @ x / np.sqrt(args.n) + np.sqrt(args.sigma2) * rng.standard_normal(args.n)
    report = lockstep(S, args.sigma2, y, iterations=args.iterations)
    ok = report.max_discrepancy < 1e-10 and report.mean_discrepancy < 1e-10
    print("\n".join([
        f"k {args.k} n {args.n} sigma2 {fmt(args.sigma2)} seed {args.seed}",
        f"iterations {report.iterations}",
        f"converged {_flag(report.converged)}",
        f"max_message_discrepancy {fmt(report.max_discrepancy)}",
        f"final_mean_discrepancy {fmt(report.mean_discrepancy)}",
        f"equivalent {_flag(ok)}",
    ]))
    return EXIT_OK if ok else EXIT_NOCONV


def build_parser():
    parser = _Parser(prog="gabp-mud", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve A x = b with GaBP")
    p.add_argument("matrix")
    p.add_argument("rhs")
    p.add_argument("-o", "--output", help="means, one per line (default: stdout)")
    p.add_argument("--precisions", metavar="PATH", help="also write posterior precisions")
    p.add_argument("--residuals", metavar="PATH", help="write the per-iteration message change")
    _solver_args(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("detect", help="run a linear multiuser detector")
    p.add_argument("spreading", help="rectangular matrix file, chips x users")
    p.add_argument("observation", help="received chip samples")
    p.add_argument("--detector", choices=["mf", "zf", "mmse", "pinv"], default="mmse")
    p.add_argument("--noise", help="uniform variance or a per-chip variance file")
    p.add_argument("--clip", choices=["sign", "identity"], default="sign")
    p.add_argument("-o", "--output", help="clipped estimates")
    p.add_argument("--raw-output", help="unclipped estimates")
    _solver_args(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("simulate", help="Monte Carlo BER study from a config file")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--frames", type=int)
    p.add_argument("--sigma2", type=float)
    p.add_argument("--damping", type=float)
    p.add_argument("--csv")
    p.add_argument("--plot-prefix")
    p.add_argument("--sweep", help="key=start:stop:count or key=v1,v2,...")
    p.add_argument("--threads", type=int, default=_default_threads())
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("diagnose", help="convergence diagnostics of the augmented system")
    p.add_argument("spreading")
    p.add_argument("--noise", required=True)
    p.add_argument("--eps", type=float, default=1e-3)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("montanari-equiv", help="lockstep check against Montanari's rules")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iterations", type=int, default=200)
    p.set_defaults(func=cmd_montanari_equiv)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ConfigError) as exc:
        print(f"gabp-mud: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
