"""Command-line entry point: ``mensura convert --to {mensural,cmn} INPUT... -o DIR``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .pipeline import CliConfig, ConfigError, convert_many, discover, log_level_from_env

REPORT_NAME = "report.json"


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mensura", description="Convert CMME-XML to MEI.")
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("convert", help="convert files or directories")
    c.add_argument("inputs", nargs="+", help="CMME files or directories (searched recursively)")
    c.add_argument("--to", dest="target", choices=("mensural", "cmn"), required=True)
    c.add_argument("--mei-basic", action="store_true", help="restrict CMN output to MEI-Basic")
    c.add_argument("--reading", default="default", metavar="ID|default",
                   help="variant source to follow in CMN output")
    c.add_argument("--out", "-o", dest="output_dir", default=".", metavar="DIR")
    c.add_argument("--report", dest="report_format", choices=("text", "json"), default=None)
    c.add_argument("--fail-fast", action="store_true")
    c.add_argument("--jobs", "-j", type=int, default=1, help=argparse.SUPPRESS)
    return p


def run(argv: Optional[List[str]] = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    logging.basicConfig(level=log_level_from_env(), format="%(levelname)s %(name)s: %(message)s")
    fmt = args.report_format or ("text" if stdout.isatty() else "json")
    try:
        cfg = CliConfig(tuple(args.inputs), args.output_dir, args.target, args.mei_basic,
                        args.reading, fmt, args.fail_fast, max(1, args.jobs))
    except ConfigError as e:
        parser.print_usage(sys.stderr)
        print(f"mensura: error: {e}", file=sys.stderr)
        return 2

    items = []
    for raw in cfg.inputs:
        path = Path(raw)
        if path.is_dir():
            items += [(p, p.relative_to(path).as_posix()) for p in discover(path)]
        elif path.exists():
            items.append((path, path.name))
        else:
            parser.print_usage(sys.stderr)
            print(f"mensura: error: no such file or directory: {raw}", file=sys.stderr)
            return 2

    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = convert_many(items, cfg, out_dir)
    (out_dir / REPORT_NAME).write_text(result.report.to_json() + "\n", encoding="utf-8")
    print(result.report.to_json() if fmt == "json" else result.report.to_text(), file=stdout)
    return 1 if result.report.error_count else 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
