import logging
import sys

from rearrangeflow.commands import EXIT_ERROR, EXIT_OK
from rearrangeflow.commands.gen import DEFAULT_WORKSPACE
from rearrangeflow.errors import RearrangeError
from rearrangeflow.services.bench_service import format_survey_csv, survey_densities
from rearrangeflow.utils.geometry import Workspace
from rearrangeflow.utils.storage import write_text

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser('survey', help='share of monotone instances per density')
    parser.add_argument('-n', type=int, required=True)
    parser.add_argument('--densities', default='0.1,0.2,0.3,0.4')
    parser.add_argument('--count', type=int, default=20, help='seeds per density')
    parser.add_argument('--width', type=float, default=DEFAULT_WORKSPACE)
    parser.add_argument('--height', type=float, default=DEFAULT_WORKSPACE)
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--time-limit', type=float, default=None)
    parser.add_argument('--cell-size', type=float, default=None)
    parser.add_argument('-o', '--out', default=None)
    parser.set_defaults(handler=run)


def run(args) -> int:
    try:
        densities = [float(d) for d in args.densities.split(',') if d.strip()]
        rows = survey_densities(args.n, densities, args.count, Workspace(args.width, args.height),
                                args.seed, args.time_limit, args.cell_size)
        text = format_survey_csv(rows)
        if args.out:
            write_text(args.out, text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    except (RearrangeError, ValueError, OSError) as e:
        logger.error(f"Error running density survey: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
