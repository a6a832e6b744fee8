"""Command-line front end: ``oulab run|sweep|crosscheck|list-scenarios``."""
from __future__ import annotations

import argparse
import json
import sys

from ..errors import ConfigInvalid
from .config import apply_overrides, bundled_scenarios, load_config
from .report import run_scenario

__all__ = ["main", "build_parser"]

_ONLY = {"run": None, "sweep": {"sweep"}, "crosscheck": {"crosscheck"}}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oulab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("run", "run every task of a scenario"),
                       ("sweep", "run only the dimension sweeps"),
                       ("crosscheck", "run only the grid vs Monte Carlo comparisons")):
        p = sub.add_parser(name, help=text)
        p.add_argument("config", help="config file or bundled scenario name")
        p.add_argument("--seed", type=int, help="override the scenario seed")
        p.add_argument("--out-dir", default=".", help="directory for report.json and CSV files")
        p.add_argument("--paths", type=int, help="override the Monte Carlo path count")
        p.add_argument("--resolution", type=int, help="override the grid cells per axis")
        p.add_argument("--quiet", action="store_true", help="suppress progress lines")
    sub.add_parser("list-scenarios", help="list bundled scenarios")
    return parser


def _list():
    for name, path in bundled_scenarios().items():
        desc = json.loads(path.read_text()).get("description", "")
        print(f"{name:28s} {desc}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-scenarios":
        return _list()
    try:
        cfg = apply_overrides(load_config(args.config), seed=args.seed, paths=args.paths,
                              resolution=args.resolution)
        only = _ONLY[args.command]
        if only is not None and not any(t["type"] in only for t in cfg["tasks"]):
            raise ConfigInvalid(f"scenario has no {args.command} task")
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return ConfigInvalid.exit_code
    log = None if args.quiet else (lambda line: print(line, flush=True))
    report, code = run_scenario(cfg, out_dir=args.out_dir, only=only, log=log)
    if not args.quiet:
        print(f"{'PASS' if code == 0 else 'FAIL'}: {cfg['name']} -> {args.out_dir}")
    return code


if __name__ == "__main__":
    sys.exit(main())
