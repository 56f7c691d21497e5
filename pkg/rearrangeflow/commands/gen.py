import logging
import sys

from rearrangeflow.commands import EXIT_ERROR, EXIT_GENERATION_FAILURE, EXIT_OK
from rearrangeflow.errors import GenerationFailure
from rearrangeflow.services.instance_service import generate_instance
from rearrangeflow.utils.geometry import Workspace
from rearrangeflow.utils.storage import save_instance

logger = logging.getLogger(__name__)

DEFAULT_WORKSPACE = 10.0


def register(subparsers):
    parser = subparsers.add_parser('gen', help='generate a random feasible instance')
    parser.add_argument('-n', type=int, required=True, help='number of objects')
    parser.add_argument('-d', '--density', type=float, default=0.225, help='covered area fraction in (0, 0.9)')
    parser.add_argument('--width', type=float, default=DEFAULT_WORKSPACE)
    parser.add_argument('--height', type=float, default=DEFAULT_WORKSPACE)
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--max-attempts', type=int, default=None, help='samples per object before giving up')
    parser.add_argument('-o', '--out', required=True, help='instance JSON path')
    parser.set_defaults(handler=run)


def run(args) -> int:
    try:
        inst = generate_instance(args.n, args.density, Workspace(args.width, args.height), args.seed,
                                 args.max_attempts)
        save_instance(inst, args.out)
        logger.info(f"Wrote instance to {args.out}")
        return EXIT_OK
    except GenerationFailure as e:
        logger.error(f"Error generating instance: {e}")
        print(f"generation failed: {e}", file=sys.stderr)
        return EXIT_GENERATION_FAILURE
    except (ValueError, OSError) as e:
        logger.error(f"Error generating instance: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
