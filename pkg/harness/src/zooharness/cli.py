"""Command line entry point: run a dump job described by a JSON file.

Exit codes: 0 success, 1 user-facing input problem, 2 internal error.
"""

from __future__ import annotations

import argparse
import sys

from .errors import HarnessError
from .inference import dump_logits
from .jobs import job_from_json


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; bad flags are input errors here.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="zooharness", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)
    dump = sub.add_parser("dump", help="run a job file and write its bundle")
    dump.add_argument("job", help="path to a JSON job description")
    return parser


def cmd_dump(args) -> int:
    job = job_from_json(args.job)
    out = dump_logits(job)
    print(f"wrote: {out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return {"dump": cmd_dump}[args.command](args)
    except (HarnessError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001  anything else is a bug
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
