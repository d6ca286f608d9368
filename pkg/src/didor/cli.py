"""Command-line entry point.

Subcommands: train (run the config's method and write the artifact
bundle), eval (run the evaluation protocol on a trained bundle), export
(CSV/JSONL report export for plotting), verify (re-hash every bundle file
against the manifest). Exit codes: 0 success, 1 runtime failure, 2
invalid config.
"""

from __future__ import annotations

import argparse
import sys

from .errors import IntegrityError
from .experiment import export_report, load_config, run_experiment
from .persist import verify_bundle


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--seed", type=int, default=None,
                   help="64-bit master seed (overrides the config)")
    p.add_argument("--out", default=None, help="output bundle directory (overrides)")
    p.add_argument("--profile", choices=("paper", "desk"), default=None,
                   help="hyper-parameter profile (overrides)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="didor", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("train", "train per the config's method and persist the bundle"),
        ("eval", "evaluate a trained bundle on its domain panels"),
        ("export", "export evaluation reports for plotting"),
        ("verify", "check bundle files against the manifest hashes"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name == "export":
            p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command in ("train", "eval"):
        return run_experiment(args.config, seed_override=args.seed, out_override=args.out,
                              profile_override=args.profile, stage=args.command)
    if args.command == "export":
        try:
            cfg = load_config(args.config, args.seed, args.out, args.profile)
        except Exception as exc:  # ConfigError and file errors
            print(f"invalid config: {exc}")
            return 2
        try:
            written = export_report(cfg, fmt=args.format)
        except Exception as exc:  # noqa: BLE001
            print(f"export failed: {exc}")
            return 1
        for name in written:
            print(f"{cfg.out_dir}/{name}")
        return 0
    if args.command == "verify":
        try:
            cfg = load_config(args.config, args.seed, args.out, args.profile)
        except Exception as exc:
            print(f"invalid config: {exc}")
            return 2
        try:
            manifest = verify_bundle(cfg.out_dir)
        except (IntegrityError, OSError, ValueError) as exc:
            print(f"verification failed: {exc}")
            return 1
        print(f"ok: {len(manifest['files'])} files verified in {cfg.out_dir}")
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
