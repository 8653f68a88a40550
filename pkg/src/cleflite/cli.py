"""Command-line driver.

    cleflite check FILE [--targets CONFIG] [--report PATH]
                        [--format text|structured] [--show escapes|repr|transfers|all]
                        [--target NAME]

Exit status: 0 when the program checks (warnings allowed), 1 on syntax,
dimension, type or capability errors, 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .report import SHOW_CHOICES, ConfigProblem, analyze, render_text
from .targets import ConfigError, bundled_config_path, load_config

EXIT_OK, EXIT_ERRORS, EXIT_USAGE = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cleflite", description="Check a Clef-lite program against target bindings.")
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("check", help="analyze a source file")
    c.add_argument("file", type=Path)
    c.add_argument("--targets", type=Path, default=None, help="target binding file (default: bundled reference set)")
    c.add_argument("--report", type=Path, default=None, help="also write the structured report here")
    c.add_argument("--format", choices=("text", "structured"), default="text")
    c.add_argument("--show", choices=SHOW_CHOICES, default="all")
    c.add_argument("--target", default=None, help="restrict output to one target's active subgraph")
    return p


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        config = load_config(args.targets or bundled_config_path())
    except ConfigError as e:
        print(f"error: bad target configuration: {e}", file=stderr)
        return EXIT_USAGE
    try:
        source = args.file.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        print(f"error: cannot read {args.file}: {e}", file=stderr)
        return EXIT_USAGE
    try:
        report = analyze(source, config, str(args.file), args.target)
    except ConfigProblem as e:
        print(f"error: {e}", file=stderr)
        return EXIT_USAGE
    if args.format == "structured":
        stdout.write(report.to_text_json())
    else:
        stdout.write(render_text(report, args.show))
    if args.report is not None:
        args.report.write_text(report.to_text_json(), encoding="utf-8")
    return EXIT_ERRORS if report.errors else EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
