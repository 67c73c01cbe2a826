"""Command-line front end.

    anisovac <command> --config run.toml [--out DIR] [--workers N] [--format csv,svg]
                       [--some.dotted.key VALUE ...]

Every flag is an override of a config key; ``--out``, ``--workers`` and
``--format`` are shorthands for ``output.dir``, ``workers`` and
``output.formats``.  Exit status: 0 success, 1 configuration error,
2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import COMMANDS, load_config, parse_value, set_dotted
from .errors import ConfigError, NumericalError
from .runner import run

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="anisovac", description=__doc__.split("\n\n")[0])
    p.add_argument("--command", choices=COMMANDS, help="also accepted as the first positional argument")
    p.add_argument("--config", type=Path, help="TOML/JSON config, or a CSV written by a previous run")
    p.add_argument("--out", help="output directory (output.dir)")
    p.add_argument("--workers", type=int, help="parallel sweep workers (workers)")
    p.add_argument("--format", help="comma-separated output formats: csv, svg (output.formats)")
    return p


def _overrides(extra: list[str]) -> list[tuple[str, object]]:
    out = []
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or len(tok) <= 2:
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, text = key.split("=", 1)
        else:
            if i + 1 >= len(extra):
                raise ConfigError(f"--{key}: missing value")
            i += 1
            text = extra[i]
        out.append((key, parse_value(text)))
        i += 1
    return out


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = _parser()
    args, extra = parser.parse_known_args(argv)
    # a bare first token is the command; later bare tokens are override values
    if extra and not extra[0].startswith("-"):
        if extra[0] not in COMMANDS:
            parser.error(f"invalid command {extra[0]!r} (choose from {', '.join(COMMANDS)})")
        args.command, extra = extra[0], extra[1:]
    try:
        data = load_config(args.config) if args.config else {}
        base_dir = args.config.parent.resolve() if args.config else Path.cwd()
        for key, value in _overrides(extra):
            set_dotted(data, key, value)
        if args.out is not None:
            set_dotted(data, "output.dir", args.out)
        if args.workers is not None:
            data["workers"] = args.workers
        if args.format is not None:
            set_dotted(data, "output.formats", [f.strip() for f in args.format.split(",") if f.strip()])
        paths = run(data, base_dir, args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
