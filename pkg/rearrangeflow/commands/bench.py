import logging
import sys

from rearrangeflow.commands import EXIT_ERROR, EXIT_OK
from rearrangeflow.services.bench_service import format_bench_csv, run_bench
from rearrangeflow.services.solver_service import MODES
from rearrangeflow.utils.storage import write_text

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser('bench', help='run modes over a corpus of instance files')
    parser.add_argument('corpus', help='directory of instance JSON files')
    parser.add_argument('--modes', default='informed,random',
                        help=f"comma separated, from {','.join(MODES)}")
    parser.add_argument('--time-limit', type=float, default=None)
    parser.add_argument('--jobs', type=int, default=1)
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--exhaustive', action='store_true')
    parser.add_argument('--cell-size', type=float, default=None)
    parser.add_argument('--solutions-dir', default=None, help='write each solved plan here')
    parser.add_argument('--no-timing', action='store_true')
    parser.add_argument('-o', '--out', default=None, help='CSV path (stdout when omitted)')
    parser.set_defaults(handler=run)


def run(args) -> int:
    try:
        modes = [mode.strip() for mode in args.modes.split(',') if mode.strip()]
        rows = run_bench(args.corpus, modes, args.time_limit, args.jobs, args.seed, args.exhaustive,
                         args.cell_size, args.solutions_dir, args.no_timing)
        text = format_bench_csv(rows)
        if args.out:
            write_text(args.out, text)
            logger.info(f"Wrote {len(rows)} rows to {args.out}")
        else:
            sys.stdout.write(text)
        return EXIT_OK
    except (ValueError, OSError) as e:
        logger.error(f"Error running benchmark: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
