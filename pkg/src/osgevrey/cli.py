"""Command line entry point."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigError
from .harness import aggregate, load_config, run_scenario

VERB_KINDS = {
    "check-profile": "profile-check",
    "solve": "os-solve",
    "corrector": "corrector",
    "sweep": "resolvent-sweep",
    "semigroup": "semigroup-check",
    "stokes": "stokes-check",
    "simulate": "nonlinear-sim",
    "airy": "airy-check",
}

log = logging.getLogger("osgevrey")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="osgevrey",
                                 description="Boundary-layer stability estimate checks.")
    sub = ap.add_subparsers(dest="verb", required=True)
    for verb, kind in VERB_KINDS.items():
        sp = sub.add_parser(verb, help=f"run a {kind} scenario")
        sp.add_argument("--config", required=True, help="YAML scenario file")
        sp.add_argument("--out", help="output directory (overrides the config)")
        sp.add_argument("--seed", type=int, help="seed override")
        sp.add_argument("--resolution-scale", type=float,
                        help="multiply the grid size N by this factor")
    sp = sub.add_parser("aggregate", help="merge JSONL report files")
    sp.add_argument("reports", nargs="*", help="reports.jsonl files")
    sp.add_argument("--out", help="directory for aggregate.json")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.verb == "aggregate":
            result = aggregate(args.reports)
            text = json.dumps(result, sort_keys=True, indent=2, default=str)
            if args.out:
                Path(args.out).mkdir(parents=True, exist_ok=True)
                (Path(args.out) / "aggregate.json").write_text(text + "\n")
            print(text)
            return 0
        scn = load_config(args.config)
        if scn.kind != VERB_KINDS[args.verb]:
            raise ConfigError(f"{args.config}: kind {scn.kind!r} does not match verb "
                              f"{args.verb!r} (expects {VERB_KINDS[args.verb]!r})")
        status, outcome = run_scenario(args.config, args.out, args.seed, args.resolution_scale)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, OSError) else 3
    print(json.dumps({"status": status, "passed": outcome.passed if outcome else False,
                      "result": outcome.summary if outcome else None},
                     sort_keys=True, default=str))
    return status


if __name__ == "__main__":
    sys.exit(main())
