import json
import math
import time
from typing import Any, Dict, Iterable, List, Optional

from werkzeug.utils import secure_filename

from rearrangeflow.errors import DeadlineExceeded


class Deadline:
    """Cooperative wall-clock limit; ``seconds=None`` never expires"""

    def __init__(self, seconds: Optional[float] = None):
        self.seconds = seconds
        self.started = time.monotonic()

    @property
    def elapsed(self) -> float:
        return time.monotonic() - self.started

    def expired(self) -> bool:
        return self.seconds is not None and self.elapsed >= self.seconds

    def check(self, what: str = 'query'):
        if self.expired():
            raise DeadlineExceeded(f"{what} exceeded {self.seconds:.1f}s")


def sanitize_filename(filename: str) -> str:
    """Sanitize filename for safe storage"""
    cleaned = secure_filename(filename)
    return cleaned or 'unnamed'


def format_bool(value: bool) -> str:
    return 'true' if value else 'false'


def summary_line(solved: bool, actions: Optional[int], buffers: Optional[int], time_s: float) -> str:
    return (f"solved={format_bool(solved)} actions={actions if actions is not None else '-'} "
            f"buffers={buffers if buffers is not None else '-'} time_s={time_s:.3f}")


def format_float(value: float) -> str:
    """17 significant digits, keeping a decimal point so the value reads back as a float"""
    if not math.isfinite(value):
        return json.dumps(value)
    text = format(value, '.17g')
    if '.' not in text and 'e' not in text:
        text += '.0'
    return text


def _encode(data: Any) -> str:
    if isinstance(data, float):
        return format_float(data)
    if isinstance(data, dict):
        return '{' + ','.join(f"{json.dumps(str(key))}:{_encode(value)}" for key, value in data.items()) + '}'
    if isinstance(data, (list, tuple)):
        return '[' + ','.join(_encode(value) for value in data) + ']'
    return json.dumps(data)


def canonical_json(data: Any) -> str:
    """Compact JSON in insertion order; every float carries 17 significant digits"""
    return _encode(data) + '\n'


def _mean(values: List[float]) -> Optional[float]:
    if not values:
        return None
    return sum(values) / len(values)


def calculate_stats(rows: Iterable[Dict[str, Any]]) -> List[Dict[str, Any]]:
    """Aggregate bench rows per (mode, n).

    mean_buffers and mean_actions are over solved rows only; mean_time over
    every row of the group.
    """
    groups: Dict[tuple, List[Dict[str, Any]]] = {}
    for row in rows:
        groups.setdefault((row['mode'], int(row['n'])), []).append(row)

    stats = []
    for (mode, n), group in sorted(groups.items()):
        solved = [r for r in group if r['solved']]
        stats.append({
            'mode': mode,
            'n': n,
            'count': len(group),
            'success_rate': len(solved) / len(group),
            'mean_buffers': _mean([float(r['buffers']) for r in solved]),
            'mean_actions': _mean([float(r['actions']) for r in solved]),
            'mean_time': _mean([float(r['time_s']) for r in group]),
        })
    return stats
