import json
import logging
import os
from typing import Dict

from rearrangeflow.errors import ParseError
from rearrangeflow.models import Instance, Solution
from rearrangeflow.utils.helpers import canonical_json

logger = logging.getLogger(__name__)

REQUIRED_INSTANCE_FIELDS = ('workspace', 'radius', 'n', 'starts', 'goals')


def _read_json(path: str) -> Dict:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON in {path}: {e.msg}", line=e.lineno)
    if not isinstance(data, dict):
        raise ParseError(f"top-level value in {path} must be an object", line=1)
    return data


def write_text(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(text)


def _point_list(data: Dict, field: str):
    value = data.get(field)
    if not isinstance(value, list):
        raise ParseError("expected a list of [x, y] pairs", field=field)
    for index, point in enumerate(value):
        if (not isinstance(point, list) or len(point) != 2
                or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in point)):
            raise ParseError(f"entry {index} is not an [x, y] pair", field=field)
    return value


def instance_from_dict(data: Dict) -> Instance:
    for field in REQUIRED_INSTANCE_FIELDS:
        if field not in data:
            raise ParseError("missing required field", field=field)
    workspace = data['workspace']
    if not isinstance(workspace, dict) or 'width' not in workspace or 'height' not in workspace:
        raise ParseError("workspace needs width and height", field='workspace')
    if not isinstance(data['n'], int):
        raise ParseError("n must be an integer", field='n')
    _point_list(data, 'starts')
    _point_list(data, 'goals')
    if 'buffers' in data:
        _point_list(data, 'buffers')
    try:
        inst = Instance(data)
    except (TypeError, ValueError) as e:
        raise ParseError(f"bad numeric value: {e}")
    return inst.validate()


def load_instance(path: str) -> Instance:
    inst = instance_from_dict(_read_json(path))
    logger.debug(f"Loaded instance {path}: n={inst.n}, buffers={len(inst.buffers)}")
    return inst


def save_instance(inst: Instance, path: str):
    write_text(path, canonical_json(inst.to_dict()))


def load_solution(path: str) -> Solution:
    data = _read_json(path)
    if 'actions' not in data or not isinstance(data['actions'], list):
        raise ParseError("missing required field", field='actions')
    try:
        return Solution(data)
    except (TypeError, ValueError, KeyError) as e:
        raise ParseError(f"bad action entry: {e}", field='actions')


def save_solution(solution: Solution, path: str):
    write_text(path, canonical_json(solution.to_dict()))
