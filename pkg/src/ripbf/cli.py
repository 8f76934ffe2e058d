"""Command-line surface: key generation, simulation, model curves,
code-specific bounding and weak-key screening.

Exit codes: 0 success (or screen accept), 1 screen reject, 2 invalid
parameters or usage, 3 I/O failure.  All randomness flows from explicit
seeds, so every invocation is reproducible from its flags.
"""

from __future__ import annotations

import argparse
import os
import sys

from .bound import screen_key
from .decoder import DecoderConfig
from .numerics import DEFAULT_PRECISION
from .qc import CodeParams, ParityCheckMatrix, keygen
from .sim import ExperimentSpec, emit_csv, model_curve, run_experiment

EXIT_OK = 0
EXIT_REJECT = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _parse_t_range(text: str) -> list[int]:
    """Parse "lo:hi[:step]" or a single integer into a t grid."""
    parts = text.split(":")
    if len(parts) == 1:
        return [int(parts[0])]
    if len(parts) in (2, 3):
        lo, hi = int(parts[0]), int(parts[1])
        step = int(parts[2]) if len(parts) == 3 else 1
        if step < 1 or hi < lo:
            raise ValueError(f"bad t range {text!r}")
        return list(range(lo, hi + 1, step))
    raise ValueError(f"bad t range {text!r}")


def _parse_thresholds(text: str, itermax: int) -> tuple[int, ...]:
    values = tuple(int(x) for x in text.split(","))
    if len(values) == 1 and itermax > 1:
        values = values * itermax  # single value broadcasts to all iterations
    if len(values) != itermax:
        raise ValueError(f"{len(values)} thresholds for itermax={itermax}")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ripbf",
        description="Bit-flipping decoding of quasi-cyclic LDPC/MDPC codes: "
                    "Monte-Carlo simulation, failure-rate models and key screening.")
    sub = parser.add_subparsers(dest="command", required=True)

    kg = sub.add_parser("keygen", help="generate a parity-check key file")
    kg.add_argument("--n0", type=int, required=True)
    kg.add_argument("--p", type=int, required=True)
    kg.add_argument("--v", type=int, required=True)
    kg.add_argument("--seed", type=int, required=True)
    kg.add_argument("--out", required=True)

    sm = sub.add_parser("simulate", help="Monte-Carlo failure-rate estimation")
    src = sm.add_mutually_exclusive_group(required=True)
    src.add_argument("--key", help="key JSON file")
    src.add_argument("--random", action="store_true",
                     help="generate the key from --n0/--p/--v/--seed")
    sm.add_argument("--n0", type=int)
    sm.add_argument("--p", type=int)
    sm.add_argument("--v", type=int)
    sm.add_argument("--seed", type=int)
    sm.add_argument("--t-min", type=int, required=True)
    sm.add_argument("--t-max", type=int)
    sm.add_argument("--t-step", type=int, default=1)
    sm.add_argument("--trials", type=int, required=True)
    sm.add_argument("--itermax", type=int, default=1)
    sm.add_argument("--thresholds", required=True,
                    help="comma-separated per-iteration flip thresholds")
    sm.add_argument("--perm-mode", choices=("random", "worst", "identity"),
                    default="random")
    sm.add_argument("--master-seed", type=int, required=True)
    sm.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    sm.add_argument("--out", required=True)

    md = sub.add_parser("model", help="evaluate a failure-rate model curve")
    md.add_argument("--n0", type=int, required=True)
    md.add_argument("--p", type=int, required=True)
    md.add_argument("--v", type=int, required=True)
    md.add_argument("--b", type=int, required=True)
    md.add_argument("--t-range", required=True, help='"lo:hi[:step]" or a single t')
    md.add_argument("--variant", required=True)
    md.add_argument("--itermax", type=int, default=1)
    md.add_argument("--bits", type=int, default=DEFAULT_PRECISION)
    md.add_argument("--out", required=True)

    bd = sub.add_parser("bound", help="code-specific failure-rate upper bound")
    bd.add_argument("--key", required=True)
    bd.add_argument("--b", type=int, required=True)
    bd.add_argument("--t-range", required=True)
    bd.add_argument("--bits", type=int, default=DEFAULT_PRECISION)
    bd.add_argument("--out", required=True)

    sc = sub.add_parser("screen", help="accept/reject a key against a DFR budget")
    sc.add_argument("--key", required=True)
    sc.add_argument("--b", type=int, required=True)
    sc.add_argument("--t", type=int, required=True)
    sc.add_argument("--budget-log2", type=float, required=True)
    sc.add_argument("--bits", type=int, default=DEFAULT_PRECISION)

    return parser


def _cmd_keygen(args) -> int:
    params = CodeParams(args.n0, args.p, args.v)
    H = keygen(params, args.seed)
    H.save(args.out)
    print(f"wrote key: n0={params.n0} p={params.p} v={params.v} "
          f"n={params.n} r={params.r} w={params.w} "
          f"h0_invertible={H.h0_invertible()} -> {args.out}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    thresholds = _parse_thresholds(args.thresholds, args.itermax)
    config = DecoderConfig(thresholds, args.perm_mode)
    t_max = args.t_max if args.t_max is not None else args.t_min
    if t_max < args.t_min or args.t_step < 1:
        raise ValueError("bad t sweep")
    t_values = tuple(range(args.t_min, t_max + 1, args.t_step))
    if args.key:
        spec = ExperimentSpec(t_values=t_values, trials=args.trials, config=config,
                              master_seed=args.master_seed, key_path=args.key,
                              workers=args.workers, out_path=args.out)
    else:
        missing = [f for f in ("n0", "p", "v", "seed") if getattr(args, f) is None]
        if missing:
            raise ValueError(f"--random needs --{' --'.join(missing)}")
        spec = ExperimentSpec(t_values=t_values, trials=args.trials, config=config,
                              master_seed=args.master_seed,
                              params=CodeParams(args.n0, args.p, args.v),
                              key_seed=args.seed, workers=args.workers,
                              out_path=args.out)
    records = run_experiment(spec)
    for rec in records:
        print(f"t={rec.t}: failures={rec.failures}/{rec.trials} "
              f"dfr={rec.dfr:.6g} ci95=[{rec.ci_low:.6g}, {rec.ci_high:.6g}]")
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_model(args) -> int:
    params = CodeParams(args.n0, args.p, args.v)
    t_values = _parse_t_range(args.t_range)
    records = model_curve(params, t_values, args.variant, args.b,
                          itermax=args.itermax, bits=args.bits)
    emit_csv(records, args.out)
    print(f"wrote {len(records)} {args.variant} points -> {args.out}")
    return EXIT_OK


def _cmd_bound(args) -> int:
    H = ParityCheckMatrix.load(args.key)
    t_values = _parse_t_range(args.t_range)
    records = model_curve(H.params, t_values, "codebound", args.b,
                          key=H, bits=args.bits)
    emit_csv(records, args.out)
    print(f"wrote {len(records)} codebound points -> {args.out}")
    return EXIT_OK


def _cmd_screen(args) -> int:
    H = ParityCheckMatrix.load(args.key)
    report = screen_key(H, args.t, args.b, args.budget_log2, bits=args.bits)
    print(report.to_json())
    return EXIT_OK if report.accepted else EXIT_REJECT


_COMMANDS = {
    "keygen": _cmd_keygen,
    "simulate": _cmd_simulate,
    "model": _cmd_model,
    "bound": _cmd_bound,
    "screen": _cmd_screen,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
