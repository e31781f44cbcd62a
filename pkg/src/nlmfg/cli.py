"""Command line entry point: ``solve``, ``kernel-check`` and ``presets``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from nlmfg.config import parse_config
from nlmfg.exceptions import ConfigurationError, DivergenceError
from nlmfg.experiments import PRESET_DESCRIPTIONS, PRESET_NAMES, kernel_sweep, preset_info

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_IO = 4


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlmfg", description="Nonlocal mean-field game solver.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a configured problem and write the artifacts")
    p.add_argument("--config", required=True, help="path to a JSON run config")
    p.add_argument("--out", help="output directory (overrides out_dir)")
    p.add_argument("--max-iters", type=int, help="iteration cap (overrides max_iters)")
    p.add_argument("--tol", type=float, help="stopping tolerance (overrides tol)")
    p.add_argument("--dry-run", action="store_true", help="print the resolved config and exit")

    p = sub.add_parser("kernel-check", help="print the kernel truncation error table of a config's preset")
    p.add_argument("--config", required=True, help="path to a JSON run config")

    sub.add_parser("presets", help="list preset names and their default parameters")
    return parser


def _solve(args) -> int:
    from nlmfg.run import run

    config = parse_config(args.config)
    changes = {}
    if args.max_iters is not None:
        if args.max_iters < 1:
            raise ConfigurationError("--max-iters must be >= 1")
        changes["max_iters"] = args.max_iters
    if args.tol is not None:
        if not args.tol > 0:
            raise ConfigurationError("--tol must be positive")
        changes["tol"] = args.tol
    if args.out is not None:
        changes["out_dir"] = args.out
    config = dataclasses.replace(config, **changes)
    if args.dry_run:
        sys.stdout.write(config.to_json())
        return EXIT_OK
    outcome = run(config)
    s = outcome.summary
    res = s["residuals"]
    print(f"{s['preset']}: {'converged' if s['converged'] else 'not converged'} after {s['iterations']} iterations "
          f"({s['wall_time_s']:.1f} s); continuity {res['continuity_res']:.3e}, "
          f"a fixed point {res['a_fixedpoint_res']:.3e}")
    print(f"artifacts in {outcome.out_dir}")
    return outcome.status


def _kernel_check(args) -> int:
    config = parse_config(args.config)
    rows = kernel_sweep(config.preset, config.overrides, config.grid["n_x1"], config.grid["n_x2"])
    print(f"{'order':>5} {'r':>4} {'sup_error':>14} {'ratio':>10}")
    for row in rows:
        print(f"{row.order:>5} {row.r:>4} {row.sup_error:>14.6e} {row.ratio:>10.4f}")
    return EXIT_OK


def _presets(args) -> int:
    for name in PRESET_NAMES:
        info = preset_info(name)
        print(f"{name}: {PRESET_DESCRIPTIONS[name]}")
        print(f"  params: {json.dumps(info.params, sort_keys=True)}")
        print(f"  steps:  {json.dumps(info.steps.to_dict(), sort_keys=True)}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    handlers = {"solve": _solve, "kernel-check": _kernel_check, "presets": _presets}
    try:
        return handlers[args.command](args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
