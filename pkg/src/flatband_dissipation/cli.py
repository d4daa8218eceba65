"""Command-line entry point.

``run <config> [--out DIR] [--solver spectral|direct|evolve] [--seed N]``
    execute a config and write its artifacts
``render <rho_mn.csv> <out.ppm> [--fb LO HI]``
    draw a ``|rho_mn|`` heatmap
``validate <config>``
    report the flat-band steady-state conditions without solving

Exit codes: 0 ok, 1 runtime error, 2 config error, 3 not converged.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import load_config, parse_config
from .errors import ConfigError, FlatBandError, NotConverged

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_NOT_CONVERGED = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flatband", description="Lindblad steady states of flat-band lattices")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a config file")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides outputs.dir)")
    r.add_argument("--solver", choices=["auto", "spectral", "direct", "evolve"])
    r.add_argument("--seed", type=int)
    h = sub.add_parser("render", help="render rho_mn.csv as a PPM heatmap")
    h.add_argument("csv")
    h.add_argument("image")
    h.add_argument("--fb", nargs=2, type=int, metavar=("LO", "HI"), help="flat-band window (inclusive)")
    v = sub.add_parser("validate", help="check the flat-band conditions of a config")
    v.add_argument("config")
    return p


def _load_with_overrides(args):
    cfg = load_config(args.config)
    raw = dict(cfg.raw)
    solver = dict(raw.get("solver", {}) or {})
    if getattr(args, "solver", None):
        solver["method"] = args.solver
    if getattr(args, "seed", None) is not None:
        solver["seed"] = args.seed
    if solver:
        raw["solver"] = solver
    if getattr(args, "out", None):
        raw["outputs"] = dict(raw.get("outputs", {}) or {}, dir=args.out)
    return parse_config(raw, name=cfg.name)


def _fb_from_report(csv_path: Path):
    rep = csv_path.parent / "report.json"
    if rep.exists():
        try:
            lo, hi = json.loads(rep.read_text())["fb_window"]
            return int(lo), int(hi)
        except (KeyError, ValueError, TypeError):
            return None
    return None


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            from .runner import run_all

            cfg = _load_with_overrides(args)
            reports = run_all(cfg)
            for rep in reports:
                keys = ("steady_count", "purity", "P_f", "P", "method")
                summary = ", ".join(f"{k}={rep[k]}" for k in keys if k in rep)
                print(f"{rep['name']}: {summary}")
        elif args.command == "render":
            from .render import render_heatmap

            fb = tuple(args.fb) if args.fb else _fb_from_report(Path(args.csv))
            render_heatmap(args.csv, args.image, fb)
        else:
            from .runner import check_conditions

            cfg = load_config(args.config)
            print(json.dumps(check_conditions(cfg), indent=2))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NotConverged as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (FlatBandError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
