"""Command line: compress, decompress, bounds, simulate, entropy.

Exit codes: 0 success, 1 usage, 2 I/O, 3 format or validation.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import codec
from .bitseq import BitSequence, Partition, empirical_entropy, pws_baseline
from .bounds import BoundInput, bound_curve, schedule_bound, optimal_fixed_bound
from .estimator import EspEstimator
from .experiment import ExperimentConfig, emit_csv, parse_partition, q_grid_from_step, run
from .schedule import AssumptionViolation, CountSmoothing, DecayingRate, FixedRate, SmoothingSchedule, optimal_fixed_alpha

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INVALID = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _auto_rate(n_bits: int) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AssumptionViolation)
        return optimal_fixed_alpha(max(n_bits, 2))


def _schedule_from_args(args, n_bits: int) -> SmoothingSchedule:
    if args.schedule == "fixed":
        alpha = args.alpha
        if alpha is None or getattr(args, "auto_n", False):
            alpha = _auto_rate(n_bits)
        return FixedRate(alpha)
    if args.schedule == "decaying":
        return DecayingRate()
    lam = args.lam
    if lam is None or getattr(args, "auto_n", False):
        lam = _auto_rate(n_bits)
    return CountSmoothing(lam, args.m)


def _warn_assumption(sched: SmoothingSchedule) -> None:
    if sched.assumption_violated:
        print(
            f"warning: smoothing rate alpha_1 = {sched.rate_at(1):.6f} <= 1/2; "
            "the redundancy bounds do not apply to this schedule",
            file=sys.stderr,
        )


def cmd_compress(args) -> int:
    data = Path(args.input).read_bytes()
    x = BitSequence.from_bytes(data)
    sched = _schedule_from_args(args, len(x))
    est = EspEstimator(sched, args.prior)
    blob = codec.encode(x, est)
    Path(args.output).write_bytes(blob)
    print(f"schedule: {sched.kind} {sched.params()[0]:.9g} {sched.params()[1]}")
    print(f"original_bits: {len(x)}")
    print(f"payload_bits: {codec.payload_bits(blob)}")
    print(f"ideal_bits: {est.codelen:.3f}")
    _warn_assumption(sched)
    return EXIT_OK


def cmd_decompress(args) -> int:
    blob = Path(args.input).read_bytes()
    data = codec.decompress_bytes(blob)
    Path(args.output).write_bytes(data)
    print(f"restored_bytes: {len(data)}")
    return EXIT_OK


def cmd_bounds(args) -> int:
    if not 0.0 < args.pmin <= 0.5:
        raise ValueError(f"--pmin must lie in (0, 0.5], got {args.pmin}")
    if args.n < 1 or args.segments < 1:
        raise ValueError("--n and --segments must be positive")
    auto = args.schedule == "fixed" and args.alpha is None or args.schedule == "count" and args.lam is None
    if args.n < 2 and auto:
        raise ValueError("automatic rate needs --n >= 2")
    sched = _schedule_from_args(args, args.n)
    inp = BoundInput(args.n, args.pmin, args.segments, alpha=getattr(sched, "alpha", None), lam=getattr(sched, "lam", None), m=args.m)
    value = schedule_bound(args.schedule, inp)
    if isinstance(sched, FixedRate):
        print(f"alpha: {sched.alpha:.9g}")
    elif isinstance(sched, CountSmoothing):
        print(f"lambda: {sched.lam:.9g}")
    print(f"bound_bits: {value:.6f}")
    if isinstance(sched, FixedRate) and args.alpha is None:
        print(f"sqrt_form_bits: {optimal_fixed_bound(args.n, args.segments, args.pmin):.6f}")
    _warn_assumption(sched)
    if args.csv:
        curve = bound_curve(args.schedule, inp)
        lines = ["k,bound_bits"] + [f"{k},{v:.9g}" for k, v in enumerate(curve, 1)]
        with open(args.csv, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    return EXIT_OK


def _config_from_args(args) -> ExperimentConfig:
    values: dict = {}
    if args.config:
        text = Path(args.config).read_text()
        base = ExperimentConfig.from_text(text, reduced=not args.full)
    else:
        base = ExperimentConfig() if args.full else ExperimentConfig.reduced()
    for flag, key in (("schedule", "schedule"), ("seed", "seed"), ("repeats", "repeats"), ("workers", "workers"),
                      ("alpha", "alpha"), ("lam", "lam"), ("m", "m"), ("eps", "eps")):
        v = getattr(args, flag)
        if v is not None:
            values[key] = v
    if args.partition is not None:
        values["partition"] = parse_partition(args.partition)
        values["n"] = values["partition"].n
    elif args.n is not None:
        values["n"] = args.n
        values["partition"] = Partition.single(args.n)
    if args.q_step is not None:
        values["q_grid"] = q_grid_from_step(values.get("eps", base.eps), args.q_step)
    elif "eps" in values:
        values["q_grid"] = q_grid_from_step(values["eps"], 0.05 if args.full else 0.15)
    if values:
        fields = {f: getattr(base, f) for f in base.__dataclass_fields__}
        fields.update(values)
        return ExperimentConfig(**fields)
    return base


def cmd_simulate(args) -> int:
    config = _config_from_args(args)
    sched = config.build_schedule()
    print(f"schedule: {config.schedule} {sched.params()[0]:.9g} {sched.params()[1]}")
    print(f"partition: {','.join(map(str, config.partition.boundaries))}")
    print(f"grid_values: {len(config.q_grid)}")
    print(f"simulations: {config.simulations}")
    _warn_assumption(sched)
    if args.dry_run:
        return EXIT_OK
    curve = run(config)
    if args.out:
        emit_csv(curve, args.out)
    i = int(np.argmax(curve.r_measured))
    print(f"max_r_measured_bits: {curve.r_measured[i]:.6f} at k={i + 1}")
    print(f"max_bound_bits: {curve.bound.max():.6f}")
    print(f"min_slack_bits: {float(np.min(curve.bound - curve.r_measured)):.6f}")
    print(f"dominance: {'true' if curve.dominance_holds else 'false'}")
    return EXIT_OK


def cmd_entropy(args) -> int:
    x = BitSequence.from_bytes(Path(args.input).read_bytes())
    part = parse_partition(args.partition) if args.partition else Partition.single(len(x))
    if part.n != len(x):
        raise ValueError(f"partition ends at {part.n} but the input has {len(x)} bits")
    print(f"bits: {len(x)}")
    print(f"entropy_bits: {empirical_entropy(x):.6f}")
    print(f"pws_bits: {pws_baseline(x, part):.6f}")
    return EXIT_OK


def _add_schedule_flags(p, with_auto: bool) -> None:
    p.add_argument("--schedule", choices=("fixed", "decaying", "count"), default="fixed")
    p.add_argument("--alpha", type=float, help="fixed rate; derived from the length when omitted")
    p.add_argument("--lambda", dest="lam", type=float, help="count smoothing rate; derived from the length when omitted")
    p.add_argument("--m", type=int, default=1, help="count smoothing initial total exponent")
    if with_auto:
        p.add_argument("--auto-n", action="store_true", help="pick the rate that minimises the bound for the input length")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="espsmooth", description="Exponential-smoothing bit estimator toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compress", help="compress a file")
    p.add_argument("input")
    p.add_argument("output")
    _add_schedule_flags(p, with_auto=True)
    p.add_argument("--prior", type=float, default=0.5, help="initial p(1)")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", help="restore a compressed file")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("bounds", help="print a redundancy bound")
    _add_schedule_flags(p, with_auto=False)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--segments", type=int, default=1)
    p.add_argument("--pmin", type=float, default=0.5)
    p.add_argument("--csv", help="write the bound at every length k to this file")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("simulate", help="approximate worst-case prefix redundancy")
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--full", action="store_true", help="full-scale grid (step 0.05) and 100 repeats")
    p.add_argument("--schedule", choices=("fixed", "decaying", "count"))
    p.add_argument("--alpha", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--partition")
    p.add_argument("--eps", type=float)
    p.add_argument("--q-step", type=float)
    p.add_argument("--repeats", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--dry-run", action="store_true", help="print the plan without simulating")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("entropy", help="empirical entropy of a file's bits")
    p.add_argument("input")
    p.add_argument("--partition", help="segment boundaries, e.g. 0,800,1600")
    p.set_defaults(func=cmd_entropy)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except OSError as exc:
        name = exc.filename or ""
        print(f"error: {name}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
