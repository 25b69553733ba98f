"""Command line entry point.

Subcommands::

    subfgn temporal      --alpha 0.3,0.5 --hurst 0.6 --m 0 --grids 32,64,128,256 --seed 42
    subfgn spatial       --alpha 0.3 --hurst 0.6 --m 0 --grids 16,32,64,128 --seed 42
    subfgn deterministic --alpha 0.5 --grids-h 16,32,64,128
    subfgn sample-noise  --hurst 0.75 --n 1024 --seed 7
    subfgn predict-rates --alpha 0.3,0.5,0.8 --hurst 0.6,0.75,0.9 --m 0

Any flag may also come from ``--config FILE``, a flat ``key = value`` file
using the long flag names without dashes (``grids = 32,64,128,256``).
Explicit flags override the file.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import warnings

import numpy as np

from .cq import predicted_spatial_rate, predicted_temporal_rate, theoretical_rho
from .fgn import EmbeddingError, FgnParams, sample_fgn, stream
from .studies import StudyConfig, run_study

log = logging.getLogger("subfgn")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def read_config(path: str) -> dict[str, str]:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.lstrip("-").replace("-", "_")] = val
    return out


def _study_parser(sub, name: str, help_: str, default_grids: str, g0: str):
    p = sub.add_parser(name, help=help_)
    p.add_argument("--alpha", type=_floats, required=True, help="comma list of fractional orders")
    p.add_argument("--hurst", type=_floats, default=[0.75], help="comma list of Hurst indices")
    p.add_argument("--m", type=float, default=0.0, help="eigenvalue exponent, Lambda_k = k^m")
    p.add_argument("--K", type=int, default=1000, help="number of noise modes")
    p.add_argument("--T", type=float, default=0.01)
    p.add_argument("--grids", type=_ints, default=_ints(default_grids), help="doubling ladder")
    p.add_argument("--h", type=int, default=128, help="fixed mesh 1/h for temporal studies")
    p.add_argument("--n-time", type=int, default=1024, help="fixed step count for spatial studies")
    p.add_argument("--trajectories", type=int, default=100)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--g0", choices=("zero", "parabola"), default=g0)
    p.add_argument("--workers", type=int, default=1, help="processes; output does not depend on it")
    p.add_argument("--out", default=None, help="CSV path (stdout if absent)")
    p.add_argument("--no-meta", action="store_true", help="omit '#' metadata lines")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subfgn", description=__doc__.split("\n\n")[0])
    parser.add_argument("--config", default=None, help="key = value file with flag defaults")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    _study_parser(sub, "temporal", "temporal self-convergence study", "32,64,128,256", "zero")
    _study_parser(sub, "spatial", "spatial self-convergence study", "16,32,64,128", "parabola")

    p = sub.add_parser("deterministic", help="noise-free convergence against reference solutions")
    p.add_argument("--alpha", type=_floats, required=True)
    p.add_argument("--T", type=float, default=0.01)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--grids-h", type=_ints, default=None, help="mesh ladder 1/h at fixed N")
    group.add_argument("--grids", type=_ints, default=None, help="step ladder T/tau at fixed h")
    p.add_argument("--h", type=int, default=128)
    p.add_argument("--n-time", type=int, default=4096)
    p.add_argument("--out", default=None)
    p.add_argument("--no-meta", action="store_true")

    p = sub.add_parser("sample-noise", help="dump one fGn increment sequence as CSV")
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dt", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("predict-rates", help="theoretical temporal and spatial orders")
    p.add_argument("--alpha", type=_floats, required=True)
    p.add_argument("--hurst", type=_floats, required=True)
    p.add_argument("--m", type=_floats, default=[0.0])
    p.add_argument("--out", default=None)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Install config-file values as subparser defaults; strips ``--config`` from ``argv``."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, rest = pre.parse_known_args(argv)
    argv[:] = rest
    if not known.config:
        return
    values = read_config(known.config)
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for sp in subparsers.choices.values():
        defaults = {}
        for action in sp._actions:
            if action.dest in values:
                raw = values[action.dest]
                if action.type is not None:
                    raw = action.type(raw)
                elif action.const is True:
                    raw = raw.lower() in ("1", "true", "yes")
                defaults[action.dest] = raw
                action.required = False
        sp.set_defaults(**defaults)


def _open_out(path):
    if path is None:
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _cmd_study(args) -> int:
    if args.seed is None:
        raise ValueError("--seed is required for stochastic studies")
    base = StudyConfig(
        kind=args.command,
        alpha=args.alpha[0],
        hurst=args.hurst[0],
        m=args.m,
        K=args.K,
        trajectories=args.trajectories,
        T=args.T,
        master_seed=args.seed,
        grids=args.grids,
        fixed_h=args.h,
        fixed_N=args.n_time,
        g0=args.g0,
        workers=args.workers,
    )
    return _emit(run_study(base, args.hurst, args.alpha), args)


def _cmd_deterministic(args) -> int:
    if args.grids is not None:
        kind, grids = "deterministic-temporal", args.grids
    else:
        kind, grids = "deterministic", args.grids_h or [16, 32, 64, 128]
    base = StudyConfig(
        kind=kind, alpha=args.alpha[0], T=args.T, grids=grids, fixed_h=args.h, fixed_N=args.n_time, g0="parabola"
    )
    return _emit(run_study(base, [base.hurst], args.alpha), args)


def _emit(table, args) -> int:
    fh, close = _open_out(args.out)
    try:
        table.to_csv(fh, meta=not args.no_meta)
    finally:
        if close:
            fh.close()
    return 0


def _cmd_sample_noise(args) -> int:
    if args.seed is None:
        raise ValueError("--seed is required for sample-noise")
    params = FgnParams(args.hurst, args.n, args.dt)
    incr = sample_fgn(params, stream(args.seed, 0))
    fh, close = _open_out(args.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step_index", "increment"])
        for i, v in enumerate(incr, 1):
            w.writerow([i, f"{v:.17e}"])
    finally:
        if close:
            fh.close()
    return 0


def _cmd_predict(args) -> int:
    fh, close = _open_out(args.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["H", "alpha", "m", "rho", "temporal_rate", "spatial_rate"])
        for m in args.m:
            rho = theoretical_rho(m)
            for H in args.hurst:
                for a in args.alpha:
                    w.writerow(
                        [
                            H,
                            a,
                            m,
                            f"{rho:.6f}",
                            f"{predicted_temporal_rate(H, a, rho):.4f}",
                            f"{predicted_spatial_rate(H, a, rho):.4f}",
                        ]
                    )
    finally:
        if close:
            fh.close()
    return 0


COMMANDS = {
    "temporal": _cmd_study,
    "spatial": _cmd_study,
    "deterministic": _cmd_deterministic,
    "sample-noise": _cmd_sample_noise,
    "predict-rates": _cmd_predict,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
    except (OSError, ValueError, argparse.ArgumentTypeError) as exc:
        print(f"subfgn: error: config: {exc}", file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        try:
            return COMMANDS[args.command](args)
        except (ValueError, EmbeddingError, np.linalg.LinAlgError) as exc:
            print(f"subfgn: error: {exc}", file=sys.stderr)
            return 2


run_cli = main

if __name__ == "__main__":
    sys.exit(main())
