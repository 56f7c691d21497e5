import logging
import sys

from rearrangeflow.commands import EXIT_ERROR, EXIT_INPUT_MISMATCH, EXIT_OK
from rearrangeflow.errors import InputMismatch, ParseError, RearrangeError
from rearrangeflow.models import Instance, Solution
from rearrangeflow.services.region_graph import build_region_graph
from rearrangeflow.services.svg_renderer import render_svg
from rearrangeflow.utils.storage import write_text, load_instance, load_solution

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser('viz', help='render an instance and optional plan as SVG')
    parser.add_argument('instance')
    parser.add_argument('--solution', default=None)
    parser.add_argument('--cell-size', type=float, default=None)
    parser.add_argument('--no-regions', action='store_true')
    parser.add_argument('--no-poses', action='store_true')
    parser.add_argument('--no-paths', action='store_true')
    parser.add_argument('-o', '--out', required=True, help='SVG path')
    parser.set_defaults(handler=run)


def check_match(inst: Instance, solution: Solution):
    if solution.n is not None and int(solution.n) != inst.n:
        raise InputMismatch(f"solution is for n={solution.n}, instance has n={inst.n}")
    for step, action in enumerate(solution.actions):
        if not 0 <= action.object < inst.n:
            raise InputMismatch(f"action {step} moves object {action.object}, instance has n={inst.n}")


def run(args) -> int:
    try:
        inst = load_instance(args.instance)
        solution = None
        if args.solution:
            try:
                solution = load_solution(args.solution)
            except ParseError as e:
                raise InputMismatch(f"unreadable solution: {e}")
            check_match(inst, solution)
        g = None if args.no_regions else build_region_graph(inst, args.cell_size)
        svg = render_svg(inst, g, solution, show_regions=not args.no_regions,
                         show_poses=not args.no_poses, show_paths=not args.no_paths)
        write_text(args.out, svg)
        logger.info(f"Wrote SVG to {args.out}")
        return EXIT_OK
    except InputMismatch as e:
        logger.error(f"Error matching solution to instance: {e}")
        print(f"input mismatch: {e}", file=sys.stderr)
        return EXIT_INPUT_MISMATCH
    except (RearrangeError, OSError) as e:
        logger.error(f"Error rendering {args.instance}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
