from enum import Enum
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from rearrangeflow.errors import ValidationError
from rearrangeflow.utils.geometry import (Position, Workspace, arrangement_feasible,
                                          colliding_pairs)

BUFFER_OBJECT = -1  # object field of buffer labels


class PoseKind(str, Enum):
    START = 'start'
    GOAL = 'goal'
    BUFFER = 'buffer'


class PoseLabel(NamedTuple):
    object: int
    kind: PoseKind
    buffer_id: Optional[int] = None

    @classmethod
    def start(cls, obj: int) -> 'PoseLabel':
        return cls(obj, PoseKind.START)

    @classmethod
    def goal(cls, obj: int) -> 'PoseLabel':
        return cls(obj, PoseKind.GOAL)

    @classmethod
    def buffer(cls, buffer_id: int) -> 'PoseLabel':
        return cls(BUFFER_OBJECT, PoseKind.BUFFER, buffer_id)

    @property
    def is_buffer(self) -> bool:
        return self.kind == PoseKind.BUFFER

    def belongs_to(self, obj: int) -> bool:
        return self.kind != PoseKind.BUFFER and self.object == obj

    def __str__(self) -> str:
        if self.kind == PoseKind.BUFFER:
            return f"B{self.buffer_id}"
        return f"{'S' if self.kind == PoseKind.START else 'G'}{self.object}"

    @classmethod
    def parse(cls, text: str) -> 'PoseLabel':
        text = text.strip()
        if len(text) < 2 or not text[1:].isdigit():
            raise ValueError(f"malformed pose label '{text}'")
        prefix, number = text[0].upper(), int(text[1:])
        if prefix == 'S':
            return cls.start(number)
        if prefix == 'G':
            return cls.goal(number)
        if prefix == 'B':
            return cls.buffer(number)
        raise ValueError(f"unknown pose label '{text}'")


class Instance:
    """Rearrangement instance: workspace, disc radius, start/goal arrangements, buffers"""

    def __init__(self, data: Dict):
        workspace = data.get('workspace', {})
        self.workspace = Workspace(float(workspace.get('width', 0.0)), float(workspace.get('height', 0.0)))
        self.radius = float(data.get('radius', 0.0))
        self.starts: Tuple[Position, ...] = tuple(Position(float(x), float(y)) for x, y in data.get('starts', []))
        self.goals: Tuple[Position, ...] = tuple(Position(float(x), float(y)) for x, y in data.get('goals', []))
        self.buffers: Tuple[Position, ...] = tuple(Position(float(x), float(y)) for x, y in data.get('buffers', []))
        self.n = int(data.get('n', len(self.starts)))

    @classmethod
    def create(cls, workspace: Workspace, radius: float, starts: Sequence[Sequence[float]],
               goals: Sequence[Sequence[float]], buffers: Sequence[Sequence[float]] = ()) -> 'Instance':
        return cls({
            'workspace': {'width': workspace[0], 'height': workspace[1]},
            'radius': radius,
            'n': len(starts),
            'starts': [tuple(p) for p in starts],
            'goals': [tuple(p) for p in goals],
            'buffers': [tuple(p) for p in buffers],
        })

    def to_dict(self) -> Dict:
        return {
            'workspace': {'width': self.workspace.width, 'height': self.workspace.height},
            'radius': self.radius,
            'n': self.n,
            'starts': [[p.x, p.y] for p in self.starts],
            'goals': [[p.x, p.y] for p in self.goals],
            'buffers': [[p.x, p.y] for p in self.buffers],
        }

    def __eq__(self, other) -> bool:
        return isinstance(other, Instance) and self.to_dict() == other.to_dict()

    def with_buffers(self, buffers: Iterable[Sequence[float]]) -> 'Instance':
        data = self.to_dict()
        data['buffers'] = [list(p) for p in buffers]
        return Instance(data)

    def validate(self) -> 'Instance':
        if self.workspace.width <= 0 or self.workspace.height <= 0:
            raise ValidationError(f"workspace must have positive size, got {self.workspace.width} x {self.workspace.height}")
        if self.radius <= 0:
            raise ValidationError(f"radius must be positive, got {self.radius}")
        if not self.workspace.admits(self.radius):
            raise ValidationError(f"workspace {self.workspace.width} x {self.workspace.height} too small for radius {self.radius}")
        if len(self.starts) != self.n or len(self.goals) != self.n:
            raise ValidationError(f"expected {self.n} starts and goals, got {len(self.starts)} and {len(self.goals)}")
        for label, position in self.poses():
            if not self.workspace.contains(position, self.radius):
                raise ValidationError(f"pose {label} at ({position.x}, {position.y}) outside configuration rectangle")
        for name, arrangement in (('starts', self.starts), ('goals', self.goals)):
            pairs = colliding_pairs(arrangement, self.radius)
            if pairs:
                i, j = pairs[0]
                raise ValidationError(f"{name} is not a feasible arrangement: objects {i} and {j} overlap")
        return self

    # Pose table

    def labels(self) -> List[PoseLabel]:
        """All pose labels in canonical order: starts, goals, buffers"""
        return ([PoseLabel.start(i) for i in range(self.n)]
                + [PoseLabel.goal(i) for i in range(self.n)]
                + [PoseLabel.buffer(k) for k in range(len(self.buffers))])

    def poses(self) -> List[Tuple[PoseLabel, Position]]:
        return [(label, self.position_of(label)) for label in self.labels()]

    def position_of(self, label: PoseLabel) -> Position:
        if label.kind == PoseKind.START:
            return self.starts[label.object]
        if label.kind == PoseKind.GOAL:
            return self.goals[label.object]
        return self.buffers[label.buffer_id]

    def at_goal_initially(self, obj: int) -> bool:
        return self.starts[obj] == self.goals[obj]

    @property
    def n_moved(self) -> int:
        """Objects whose start differs from their goal"""
        return sum(1 for i in range(self.n) if not self.at_goal_initially(i))

    def initial_arrangement(self) -> 'Arrangement':
        return Arrangement(PoseLabel.start(i) for i in range(self.n))

    def final_arrangement(self) -> 'Arrangement':
        return Arrangement(PoseLabel.goal(i) for i in range(self.n))


class Arrangement(tuple):
    """Pose label per object; hashable so it can key search trees"""

    def __new__(cls, labels: Iterable[PoseLabel]):
        return super().__new__(cls, tuple(labels))

    def positions(self, inst: Instance) -> List[Position]:
        return [inst.position_of(label) for label in self]

    def moved(self, obj: int, label: PoseLabel) -> 'Arrangement':
        labels = list(self)
        labels[obj] = label
        return Arrangement(labels)

    def is_at_goal(self, inst: Instance, obj: int) -> bool:
        label = self[obj]
        return label == PoseLabel.goal(obj) or inst.position_of(label) == inst.goals[obj]

    def objects_at_goal(self, inst: Instance) -> int:
        return sum(1 for i in range(len(self)) if self.is_at_goal(inst, i))

    def objects_not_at_goal(self, inst: Instance) -> List[int]:
        return [i for i in range(len(self)) if not self.is_at_goal(inst, i)]

    def occupied_by_others(self, obj: Optional[int] = None) -> List[PoseLabel]:
        return [label for i, label in enumerate(self) if i != obj]

    def holder_of(self, label: PoseLabel) -> Optional[int]:
        for i, held in enumerate(self):
            if held == label:
                return i
        return None

    def feasible(self, inst: Instance) -> bool:
        if len(set(self)) != len(self):
            return False
        return arrangement_feasible(self.positions(inst), inst.radius, inst.workspace)

    def encode(self) -> List[str]:
        """Compact mode vector, e.g. ['G0', 'S1', 'B3']"""
        return [str(label) for label in self]


class Perturbation(NamedTuple):
    object: int
    buffer: PoseLabel

    def __str__(self) -> str:
        return f"P(o{self.object}, {self.buffer})"


class ActionKind(str, Enum):
    TO_GOAL = 'to_goal'
    TO_BUFFER = 'to_buffer'


class Action:
    """One pick-and-place: object, endpoints, region walk and realized polyline"""

    def __init__(self, data: Dict):
        self.object = int(data.get('object', 0))
        self.kind = ActionKind(data.get('kind', ActionKind.TO_GOAL.value))
        self.from_pos = Position(*data.get('from', (0.0, 0.0)))
        self.to_pos = Position(*data.get('to', (0.0, 0.0)))
        self.from_label: Optional[PoseLabel] = data.get('from_label')
        self.to_label: Optional[PoseLabel] = data.get('to_label')
        self.walk: Tuple[int, ...] = tuple(int(r) for r in data.get('walk', []))
        self.polyline: List[Position] = [Position(*p) for p in data.get('polyline', [])]

    def to_dict(self) -> Dict:
        return {
            'object': self.object,
            'kind': self.kind.value,
            'from': [self.from_pos.x, self.from_pos.y],
            'to': [self.to_pos.x, self.to_pos.y],
            'walk': list(self.walk),
            'polyline': [[p.x, p.y] for p in self.polyline],
        }


class Solution:
    """Ordered actions plus the summary metrics written to solution files"""

    def __init__(self, data: Dict):
        self.actions: List[Action] = [a if isinstance(a, Action) else Action(a) for a in data.get('actions', [])]
        self.n = data.get('n')
        self.num_buffers = int(data.get('num_buffers', 0))
        self.time_s = float(data.get('time_s', 0.0))
        self.seed = data.get('seed')

    @classmethod
    def from_actions(cls, inst: Instance, actions: List[Action], time_s: float = 0.0,
                     seed: Optional[int] = None) -> 'Solution':
        return cls({
            'actions': actions,
            'n': inst.n,
            'num_buffers': len(actions) - inst.n_moved,
            'time_s': time_s,
            'seed': seed,
        })

    @property
    def num_actions(self) -> int:
        return len(self.actions)

    def to_dict(self) -> Dict:
        return {
            'actions': [a.to_dict() for a in self.actions],
            'num_actions': self.num_actions,
            'num_buffers': self.num_buffers,
            'time_s': self.time_s,
            'seed': self.seed,
            'n': self.n,
        }