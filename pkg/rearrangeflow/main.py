import argparse
import sys
from typing import List, Optional

from rearrangeflow import __version__
from rearrangeflow.app import configure_logging
from rearrangeflow.commands import register_commands


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='rearrangeflow',
                                     description='Tabletop disc rearrangement planning with buffers')
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    parser.add_argument('--log-level', default=None, help='DEBUG, INFO, WARNING or ERROR')
    subparsers = parser.add_subparsers(dest='command', required=True)
    register_commands(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    return args.handler(args)


if __name__ == '__main__':
    sys.exit(main())
