import logging
import sys

from rearrangeflow.commands import EXIT_ERROR, EXIT_INFEASIBLE, EXIT_OK, EXIT_TIMEOUT
from rearrangeflow.errors import RearrangeError
from rearrangeflow.services.nonmonotone import prepare_buffers
from rearrangeflow.services.oracles import replay_solution
from rearrangeflow.services.region_graph import build_region_graph
from rearrangeflow.services.solver_service import DEADLINE, MODES, MONOTONE_MODES, run_query
from rearrangeflow.utils.helpers import summary_line
from rearrangeflow.utils.storage import load_instance, save_solution

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser('solve', help='plan one instance')
    parser.add_argument('instance', help='instance JSON path')
    parser.add_argument('--mode', choices=MODES, default='informed')
    parser.add_argument('--time-limit', type=float, default=None,
                        help='seconds (default 500 for monotone modes, 300 otherwise)')
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--exhaustive', action='store_true', help='no caps on ranked objects and buffers')
    parser.add_argument('--cell-size', type=float, default=None, help='raster cell size (default r/10)')
    parser.add_argument('--max-buffer-visits', type=int, default=None, help='oracle mode bound')
    parser.add_argument('--object', type=int, default=None, help='edfs mode: perturbed object')
    parser.add_argument('--buffer', default=None, help='edfs mode: buffer label such as B0, or its index')
    parser.add_argument('--verify', action='store_true', help='replay the plan before writing it')
    parser.add_argument('--no-timing', action='store_true', help='record time_s as 0.0')
    parser.add_argument('-o', '--out', default=None, help='solution JSON path')
    parser.set_defaults(handler=run)


def run(args) -> int:
    try:
        inst = load_instance(args.instance)
        result = run_query(inst, args.mode, args.time_limit, args.seed, args.exhaustive, args.cell_size,
                           args.max_buffer_visits, args.object, args.buffer)
        time_s = 0.0 if args.no_timing else result.time_s

        if result.solved:
            solution = result.solution
            solution.time_s = time_s
            if args.verify:
                solved_inst = inst if args.mode in MONOTONE_MODES else prepare_buffers(inst, args.seed)
                replay_solution(solved_inst, build_region_graph(solved_inst, args.cell_size), solution)
            if args.out:
                save_solution(solution, args.out)
        else:
            logger.info(f"No plan ({result.status}): {result.detail}")

        print(summary_line(result.solved, result.actions, result.buffers, time_s))
        if result.solved:
            return EXIT_OK
        return EXIT_TIMEOUT if result.status == DEADLINE else EXIT_INFEASIBLE
    except (RearrangeError, ValueError, OSError) as e:
        logger.error(f"Error solving {args.instance}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
