"""Command-line interface.

Every subcommand accepts ``--config FILE`` holding ``key = value`` lines whose
keys are long option names (``m-floor`` or ``m_floor``). Values from the file
replace built-in defaults and are in turn overridden by flags on the command
line.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from ..bounds import (DegenerateBoundError, QualityParams, cs_bound, l1l1_bound, noisy_scale,
                      success_probability)
from .bgsub import METRICS_NAME, RunConfig, run_bgsub
from .pgm import PGMError
from .phase import PhaseCell, phase_harness
from .synthetic import SyntheticSpec

__all__ = ["build_parser", "cli_main", "main", "read_config_file"]

PROG = "adaptive-cs"
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


class ConfigError(ValueError):
    pass


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _add_run_options(p):
    p.add_argument("--output", type=Path, help="directory for metrics.csv and frames")
    p.add_argument("--frames", type=_positive_int, help="number of frames to process")
    p.add_argument("--delta", type=float, default=0.1, help="oversampling factor")
    p.add_argument("--alpha", type=float, default=0.5, help="rate filter weight")
    p.add_argument("--s1", type=_positive_int, help="sparsity estimate for frame 1")
    p.add_argument("--s2", type=_positive_int, help="sparsity estimate for frame 2")
    p.add_argument("--gamma", type=_positive_int, default=8, help="block size")
    p.add_argument("--rho", type=int, default=6, help="search range in pixels")
    p.add_argument("--amplify", type=float, default=0.3, help="side information gain")
    p.add_argument("--noisy", action="store_true", help="add bounded measurement noise")
    p.add_argument("--sigma", type=float, default=2.0,
                   help="noise bound in 8-bit intensity units")
    p.add_argument("--tau", type=float, default=0.1, help="noisy bound parameter")
    p.add_argument("--seed", type=int, default=0, help="base seed for sensing matrices")
    p.add_argument("--m-floor", type=_positive_int, default=10,
                   help="minimum measurements per frame")
    p.add_argument("--median-prefilter", action="store_true",
                   help="3x3 median filter on input frames")
    p.add_argument("--no-oracle", action="store_true", help="leave oracle columns empty")
    p.add_argument("--csv-only", action="store_true", help="skip writing PGM outputs")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value defaults file")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress")

    parser = argparse.ArgumentParser(prog=PROG, description=(
        "Adaptive-rate compressive reconstruction with side information."))
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", parents=[common], help="print measurement bounds")
    b.add_argument("--n", type=_positive_int, required=True, help="signal length")
    b.add_argument("--s", type=_positive_int, required=True, help="sparsity")
    b.add_argument("--xi", type=int, default=0, help="side information balance")
    b.add_argument("--hbar", type=int, default=0, help="bad side information entries")
    b.add_argument("--tau", type=float, help="also print the noisy bound")
    b.add_argument("--m-lower", type=float,
                   help="print the success probability for this many measurements")
    b.add_argument("--k", type=_positive_int, action="append",
                   help="sequence length for the success probability (repeatable)")

    r = sub.add_parser("reconstruct", parents=[common], help="process a PGM directory")
    r.add_argument("--input", type=Path, required=True, help="directory of PGM frames")
    r.add_argument("--background", type=Path,
                   help="background image (default INPUT/background.pgm)")
    _add_run_options(r)

    s = sub.add_parser("simulate", parents=[common], help="run on a synthetic sequence")
    _add_run_options(s)
    s.set_defaults(frames=60, output=Path("simulate_out"))
    s.add_argument("--size", type=_positive_int, nargs=2, default=(64, 64),
                   metavar=("H", "W"), help="frame size")
    s.add_argument("--object-size", type=_positive_int, default=8)
    s.add_argument("--velocity", type=int, nargs=2, default=(0, 1), metavar=("DY", "DX"))
    s.add_argument("--scene-seed", type=int, default=0, help="seed of the synthetic scene")

    ph = sub.add_parser("phase", parents=[common], help="Monte Carlo recovery rates")
    ph.add_argument("--n", type=_positive_int, default=500)
    ph.add_argument("--s", type=_positive_int, default=25)
    ph.add_argument("--hbar", type=int, default=3)
    ph.add_argument("--xi", type=int, default=0)
    ph.add_argument("--multiplier", type=float, action="append",
                    help="measurement multiplier on the bound (repeatable, default 1)")
    ph.add_argument("--solver", choices=("l1l1", "bp", "both"), default="both")
    ph.add_argument("--trials", type=_positive_int, default=50)
    ph.add_argument("--seed", type=int, default=0)
    ph.add_argument("--workers", type=_positive_int, default=1)
    ph.add_argument("--output", type=Path, help="write the table as CSV")
    return parser


def read_config_file(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (t.strip() for t in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _convert(action, key, value, path):
    if isinstance(action, argparse._StoreTrueAction):
        v = value.lower()
        if v in _TRUE:
            return True
        if v in _FALSE:
            return False
        raise ConfigError(f"{path}: {key} expects a boolean, got {value!r}")
    tokens = value.split() if action.nargs not in (None, "?") else [value]
    conv = action.type or str
    try:
        items = [conv(t) for t in tokens]
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise ConfigError(f"{path}: bad value for {key}: {value!r}") from exc
    if isinstance(action, argparse._AppendAction):
        return items
    if action.nargs not in (None, "?"):
        return tuple(items)
    return items[0]


def _apply_config(parser, argv):
    """Parse ``argv`` with defaults taken from the ``--config`` file, if any."""
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    known, _ = pre.parse_known_args(argv)
    command = next((a for a in argv if a in _COMMANDS), None)
    if known.config is not None and command is not None:
        sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        subparser = sub.choices[command]
        actions = {a.dest: a for a in subparser._actions}
        defaults = {}
        for key, value in read_config_file(known.config).items():
            if key in ("config", "help", "verbose") or key not in actions:
                raise ConfigError(f"{known.config}: unknown option {key!r} for {command}")
            action = actions[key]
            # repeatable options would append to the file value instead of replacing it
            if isinstance(action, argparse._AppendAction) and any(
                    a.split("=", 1)[0] in action.option_strings for a in argv):
                continue
            defaults[key] = _convert(action, key, value, known.config)
            # a required option may come from the file
            action.required = False
        subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _run_config(args, **extra) -> RunConfig:
    return RunConfig(
        output=args.output, frames=args.frames, s_hat_1=args.s1, s_hat_2=args.s2,
        alpha=args.alpha, delta=args.delta, gamma=args.gamma, rho=args.rho,
        amplification=args.amplify, noisy=args.noisy, sigma=args.sigma, tau=args.tau,
        seed=args.seed, m_floor=args.m_floor, median_prefilter=args.median_prefilter,
        with_oracle=not args.no_oracle, write_frames=not args.csv_only, **extra)


def _summary(result, out):
    ms = np.array([m.m_k for m in result.metrics], dtype=float)
    errs = np.array([m.rec_err for m in result.metrics])
    print(f"frames: {len(ms)}")
    print(f"mean m_k: {ms.mean():.2f}")
    cs = [m.bound_cs_oracle for m in result.metrics if m.bound_cs_oracle is not None]
    if cs:
        print(f"mean cs oracle bound: {np.mean(cs):.2f} (ratio {ms.mean() / np.mean(cs):.3f})")
    print(f"median rec_err: {np.median(errs):.3e}")
    flagged = sum(1 for m in result.metrics if m.flags)
    if flagged:
        print(f"flagged frames: {flagged}")
    if out is not None:
        print(f"metrics: {Path(out) / METRICS_NAME}")


def _cmd_bounds(args):
    q = QualityParams(s=args.s, xi=args.xi, hbar=args.hbar)
    l1 = l1l1_bound(args.n, q)
    cs = cs_bound(args.n, args.s)
    print(f"l1l1 {l1.m_required} (raw {l1.raw_bound:.6f})")
    print(f"cs {cs.m_required} (raw {cs.raw_bound:.6f})")
    if args.tau is not None:
        nb = noisy_scale(l1, args.tau)
        print(f"l1l1_noisy {nb.m_required} (raw {nb.raw_bound:.6f})")
    if args.m_lower is not None:
        for k in args.k or [1]:
            p = success_probability(args.m_lower, k)
            print(f"success_probability m={args.m_lower:g} k={k} {p:.4f}")
    elif args.k:
        raise ConfigError("--k needs --m-lower")
    return 0


def _cmd_reconstruct(args):
    cfg = _run_config(args, input=args.input, background=args.background)
    _summary(run_bgsub(cfg), cfg.output)
    return 0


def _cmd_simulate(args):
    spec = SyntheticSpec(height=args.size[0], width=args.size[1], frames=args.frames,
                         object_size=args.object_size, velocity=tuple(args.velocity),
                         seed=args.scene_seed)
    cfg = _run_config(args, synthetic=spec)
    _summary(run_bgsub(cfg), cfg.output)
    return 0


def _cmd_phase(args):
    solvers = ("l1l1", "bp") if args.solver == "both" else (args.solver,)
    cells = [PhaseCell(n=args.n, s=args.s, hbar=args.hbar, xi=args.xi, multiplier=mult,
                       solver=sv)
             for sv in solvers for mult in (args.multiplier or [1.0])]
    results = phase_harness(cells, trials=args.trials, seed=args.seed, workers=args.workers)
    rows = ["solver,n,s,hbar,xi,multiplier,m,trials,successes,rate"]
    for r in results:
        c = r.cell
        rows.append(f"{c.solver},{c.n},{c.s},{c.hbar},{c.xi},{c.multiplier:g},{r.m},"
                    f"{r.trials},{r.successes},{r.rate:.4f}")
    print("\n".join(rows))
    if args.output is not None:
        args.output.parent.mkdir(parents=True, exist_ok=True)
        args.output.write_text("\n".join(rows) + "\n")
    return 0


_COMMANDS = {"bounds": _cmd_bounds, "reconstruct": _cmd_reconstruct,
             "simulate": _cmd_simulate, "phase": _cmd_phase}


def cli_main(argv=None) -> int:
    """Run the CLI and return the process exit code."""
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, PGMError, DegenerateBoundError, OSError, ValueError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli_main())
