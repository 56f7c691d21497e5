import os
import logging
import warnings

from dotenv import load_dotenv

# Suppress numpy floating point chatter from degenerate sampling
warnings.filterwarnings('ignore', category=RuntimeWarning, module='numpy')

# load .env
load_dotenv()


def _env_bool(name: str, default: bool) -> bool:
    value = os.environ.get(name)
    if value is None:
        return default
    return value.strip().lower() in ('1', 'true', 'yes', 'on')


# Configuration
config = {
    'CELL_FRACTION': float(os.environ.get('REARRANGE_CELL_FRACTION', 10)),  # cell_size = r / CELL_FRACTION
    'ONE_DIFFERENCE_EDGES': _env_bool('REARRANGE_ONE_DIFFERENCE_EDGES', True),
    'MAX_GENERATION_ATTEMPTS': int(os.environ.get('REARRANGE_MAX_GENERATION_ATTEMPTS', 2000)),
    'MONOTONE_TIME_LIMIT': float(os.environ.get('REARRANGE_MONOTONE_TIME_LIMIT', 500)),
    'NONMONOTONE_TIME_LIMIT': float(os.environ.get('REARRANGE_NONMONOTONE_TIME_LIMIT', 300)),
    'MAX_OBJECTS_PER_NODE': int(os.environ.get('REARRANGE_MAX_OBJECTS_PER_NODE', 5)),
    'MAX_BUFFERS_PER_OBJECT': int(os.environ.get('REARRANGE_MAX_BUFFERS_PER_OBJECT', 5)),
    'BUFFER_SAMPLES_PER_SLOT': int(os.environ.get('REARRANGE_BUFFER_SAMPLES', 100)),
    'ORACLE_MAX_BUFFER_VISITS': int(os.environ.get('REARRANGE_ORACLE_MAX_BUFFER_VISITS', 2)),
    'SVG_SCALE': float(os.environ.get('REARRANGE_SVG_SCALE', 40)),
    'LOG_LEVEL': os.environ.get('REARRANGE_LOG_LEVEL', 'INFO'),
}


def configure_logging(level: str = None):
    """Configure logging - reduce verbosity of third-party libraries"""
    logging.basicConfig(
        level=getattr(logging, (level or config['LOG_LEVEL']).upper(), logging.INFO),
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )
    # Suppress verbose library logs
    logging.getLogger('networkx').setLevel(logging.WARNING)
