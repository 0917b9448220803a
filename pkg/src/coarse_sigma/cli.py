"""Command-line interface.

Usage:
    coarse-sigma sigma --space integers
    coarse-sigma sigma --space vase-net --eps 1 --out vase.json --csv vase.csv
    coarse-sigma compare --space vase-net --space real-net
    coarse-sigma compare --map-file floor.json --map-file inclusion.json
    coarse-sigma examples --r-max 256 --shifted

Exit codes: 0 ok, 1 input error, 2 inconclusive (or a failed example).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .coarse_maps import parse_map_spec
from .ends import SigmaConfig, sigma
from .errors import CoarseSigmaError
from .metric import builtin_space, load_space_spec
from .workflows import compare_spaces, run_examples

EXIT_OK, EXIT_INPUT, EXIT_INCONCLUSIVE = 0, 1, 2


class InputError(Exception):
    pass


def _space_params(args) -> dict:
    params = {}
    if args.eps is not None:
        params["eps"] = args.eps
    if args.k is not None:
        params["k"] = args.k
    return params


def _builtin(name: str, args):
    """``name`` or ``name:key=value,...``; inline values override --eps/--k."""
    params = _space_params(args)
    if ":" in name:
        name, _, rest = name.partition(":")
        for item in filter(None, rest.split(",")):
            key, _, value = item.partition("=")
            params[key.strip()] = json.loads(value)
    if name not in ("real-net", "halfline-net", "vase-net"):
        params.pop("eps", None)
    if name != "star-tree":
        params.pop("k", None)
    return builtin_space(name, params)


def _parse_basepoint(space, text):
    if text is None:
        return None
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        raise InputError(f"--basepoint must be JSON (a number or coordinate list), got {text!r}") from None
    return space.point_from_coordinates(value)


def _config(args, space=None) -> SigmaConfig:
    cfg = SigmaConfig(n_min=args.n_min, n_max=args.n_max, r_max=args.r_max,
                      stability_window=args.window, escape_margin=args.escape_margin)
    if cfg.n_max < cfg.n_min:
        raise InputError(f"empty scale range {cfg.n_min}..{cfg.n_max}")
    if cfg.r_max < 16 * cfg.n_max:
        raise InputError(f"--r-max must be at least 16 * n_max = {16 * cfg.n_max}")
    if space is not None and getattr(args, "basepoint", None) is not None:
        cfg = replace(cfg, basepoint=_parse_basepoint(space, args.basepoint))
    return cfg


def _emit(text: str, path: str | None):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_sigma(args) -> int:
    if bool(args.space) == bool(args.space_file):
        raise InputError("give exactly one of --space or --space-file")
    space = _builtin(args.space, args) if args.space else load_space_spec(args.space_file)
    report = sigma(space, _config(args, space))
    _emit(report.to_json(), args.out)
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    print(f"{report.space}: sigma={report.sigma} K={report.K}", file=sys.stderr)
    return EXIT_OK if report.stable else EXIT_INCONCLUSIVE


def cmd_compare(args) -> int:
    f = g = None
    if args.map_file:
        if len(args.map_file) != 2:
            raise InputError("give two --map-file options: f (A -> B) then g (B -> A)")
        f, g = (parse_map_spec(Path(p).read_text(), args.r_max) for p in args.map_file)
        a, b = f.source, f.target
    else:
        spaces = [_builtin(s, args) for s in args.space or []]
        spaces += [load_space_spec(p) for p in args.space_file or []]
        if len(spaces) != 2:
            raise InputError("compare needs two spaces (--space/--space-file) or two --map-file")
        a, b = spaces
    doc = compare_spaces(a, b, _config(args), f, g)
    _emit(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n", args.out)
    print(doc["conclusion"], file=sys.stderr)
    if not doc["stable"]:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_examples(args) -> int:
    results = run_examples(r_max=args.r_max, shifted=args.shifted, seed=args.seed,
                           config=_config(args))
    lines = [r.line() for r in results]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_INCONCLUSIVE


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n-min", type=int, default=1)
    common.add_argument("--n-max", type=int, default=8)
    common.add_argument("--r-max", type=float, default=1024.0)
    common.add_argument("--window", type=int, default=5, help="stability window in scales")
    common.add_argument("--escape-margin", type=float, default=None,
                        help="escape shell width (default: the scale N)")
    common.add_argument("--eps", type=float, default=None)
    common.add_argument("--k", type=int, default=None)
    common.add_argument("--out", default=None, help="report path (default: stdout)")
    common.add_argument("--seed", type=int, default=0)

    parser = argparse.ArgumentParser(prog="coarse-sigma", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sigma", parents=[common], help="end counts per scale and the stabilized sigma")
    p.add_argument("--space")
    p.add_argument("--space-file")
    p.add_argument("--basepoint", help="JSON coordinates of an alternative basepoint")
    p.add_argument("--csv", help="write the (N, r, escaping_count) trace here")
    p.set_defaults(func=cmd_sigma)

    p = sub.add_parser("compare", parents=[common], help="compare two spaces by sigma and maps")
    p.add_argument("--space", action="append")
    p.add_argument("--space-file", action="append")
    p.add_argument("--map-file", action="append")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("examples", parents=[common], help="rerun the worked examples")
    p.add_argument("--shifted", action="store_true", help="also recompute from random basepoints")
    p.set_defaults(func=cmd_examples)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, CoarseSigmaError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
