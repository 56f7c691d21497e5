import logging
from typing import Dict, Iterable, List, NamedTuple, Optional, Tuple

from rearrangeflow.app import config
from rearrangeflow.errors import BufferOccupied, DeadlineExceeded, KeyAbsent
from rearrangeflow.models import (Action, ActionKind, Arrangement, Instance, Perturbation,
                                  PoseLabel, Solution)
from rearrangeflow.services.region_graph import RegionGraph, Walk, rg_dfs, walk_to_curve
from rearrangeflow.utils.geometry import discs_collide
from rearrangeflow.utils.helpers import Deadline

logger = logging.getLogger(__name__)

# Mode of the perturbed object: where it is, relative to its detour
AT_CURRENT, AT_BUFFER, AT_TARGET = 0, 1, 2


class ArrangementKey(NamedTuple):
    """Bit i set when object i sits at its target; pmode tracks the perturbed object"""
    mask: int
    pmode: int = AT_CURRENT


class TreeEdge(NamedTuple):
    parent: Optional[ArrangementKey]
    object: Optional[int]
    from_label: Optional[PoseLabel]
    to_label: Optional[PoseLabel]
    kind: Optional[ActionKind]
    walk: Optional[Walk]


class PathDictionary:
    """Walks found so far, keyed by (object, from pose, to pose).

    A stored walk answers a query when none of its regions touch an
    occupied pose. Occupancies that already failed are remembered so a
    superset occupancy is rejected without searching.
    """

    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self.walks: Dict[Tuple[int, PoseLabel, PoseLabel], List[Walk]] = {}
        self.failures: Dict[Tuple[int, PoseLabel, PoseLabel], List[int]] = {}
        self.searches = 0
        self.hits = 0

    def __len__(self) -> int:
        return sum(len(walks) for walks in self.walks.values())

    def lookup_or_search(self, g: RegionGraph, moving: int, from_label: PoseLabel, to_label: PoseLabel,
                         occupied: Iterable[PoseLabel]) -> Optional[Walk]:
        occupied = list(occupied)
        blocked = g.mask_of(occupied)
        key = (moving, from_label, to_label)

        if self.enabled:
            for walk in self.walks.get(key, ()):
                if walk.valid_under(blocked):
                    self.hits += 1
                    return walk
            for failed in self.failures.get(key, ()):
                if failed & blocked == failed:
                    self.hits += 1
                    return None

        self.searches += 1
        walk = rg_dfs(g, moving, from_label, to_label, occupied)
        if self.enabled:
            if walk is None:
                self.failures.setdefault(key, []).append(blocked)
            else:
                self.walks.setdefault(key, []).append(walk)
        return walk


def lookup_or_search(paths: PathDictionary, g: RegionGraph, moving: int, from_label: PoseLabel,
                     to_label: PoseLabel, occupied: Iterable[PoseLabel]) -> Optional[Walk]:
    return paths.lookup_or_search(g, moving, from_label, to_label, occupied)


class MonotoneTree:
    """Depth-first DP tree over arrangements reachable by moving each object at most once.

    With a perturbation the chosen object must visit the buffer before its
    target; every other object moves straight to its target.
    """

    def __init__(self, inst: Instance, g: RegionGraph, root: Arrangement, target: Arrangement,
                 perturbation: Optional[Perturbation] = None):
        self.inst = inst
        self.g = g
        self.root = Arrangement(root)
        self.target = Arrangement(target)
        self.perturbation = perturbation
        self.expansions = 0
        self.deadline_exceeded = False

        if perturbation is not None:
            holder = self.root.holder_of(perturbation.buffer)
            if holder is not None:
                raise BufferOccupied(f"buffer {perturbation.buffer} is held by object {holder}")

        mask = 0
        for i in range(len(self.root)):
            if perturbation is not None and i == perturbation.object:
                continue
            if self._at_target(self.root, i):
                mask |= 1 << i
        self.root_key = ArrangementKey(mask, AT_CURRENT)
        self.nodes: Dict[ArrangementKey, TreeEdge] = {self.root_key: TreeEdge(None, None, None, None, None, None)}

        full = (1 << len(self.root)) - 1
        if perturbation is None:
            self.target_key = ArrangementKey(full, AT_CURRENT)
        else:
            self.target_key = ArrangementKey(full & ~(1 << perturbation.object), AT_TARGET)

    def _at_target(self, arrangement: Arrangement, obj: int) -> bool:
        label, goal = arrangement[obj], self.target[obj]
        return label == goal or self.inst.position_of(label) == self.inst.position_of(goal)

    def __contains__(self, key: ArrangementKey) -> bool:
        return key in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def solved(self) -> bool:
        return self.target_key in self.nodes

    def decode(self, key: ArrangementKey) -> Arrangement:
        labels = list(self.root)
        for i in range(len(labels)):
            if key.mask >> i & 1:
                labels[i] = self.target[i]
        if self.perturbation is not None:
            obj = self.perturbation.object
            if key.pmode == AT_BUFFER:
                labels[obj] = self.perturbation.buffer
            elif key.pmode == AT_TARGET:
                labels[obj] = self.target[obj]
        return Arrangement(labels)

    def _transitions(self, key: ArrangementKey):
        """(object, new key, kind) in ascending object order"""
        perturbed = self.perturbation.object if self.perturbation is not None else None
        for i in range(len(self.root)):
            if i == perturbed:
                if key.pmode == AT_CURRENT:
                    yield i, ArrangementKey(key.mask, AT_BUFFER), ActionKind.TO_BUFFER
                elif key.pmode == AT_BUFFER:
                    yield i, ArrangementKey(key.mask, AT_TARGET), ActionKind.TO_GOAL
            elif not key.mask >> i & 1:
                yield i, ArrangementKey(key.mask | 1 << i, key.pmode), ActionKind.TO_GOAL

    def grow(self, paths: PathDictionary, deadline: Optional[Deadline] = None) -> 'MonotoneTree':
        deadline = deadline or Deadline()
        try:
            self._expand(self.root_key, paths, deadline)
        except DeadlineExceeded:
            self.deadline_exceeded = True
            logger.info(f"Monotone search stopped by deadline after {self.expansions} expansions")
        return self

    def _expand(self, key: ArrangementKey, paths: PathDictionary, deadline: Deadline) -> bool:
        deadline.check('monotone search')
        self.expansions += 1
        if key == self.target_key:
            return True
        current = self.decode(key)
        for obj, new_key, kind in self._transitions(key):
            if new_key in self.nodes:
                continue
            new = self.decode(new_key)
            from_label, to_label = current[obj], new[obj]
            destination = self.inst.position_of(to_label)
            if any(discs_collide(destination, self.inst.position_of(label), self.inst.radius)
                   for j, label in enumerate(current) if j != obj):
                continue
            walk = paths.lookup_or_search(self.g, obj, from_label, to_label, current.occupied_by_others(obj))
            if walk is None:
                continue
            self.nodes[new_key] = TreeEdge(key, obj, from_label, to_label, kind, walk)
            if self._expand(new_key, paths, deadline):
                return True
        return False

    def path_to(self, key: ArrangementKey) -> List[TreeEdge]:
        if key not in self.nodes:
            raise KeyAbsent(f"arrangement {self.decode(key).encode()} is not in the tree")
        edges = []
        while self.nodes[key].parent is not None:
            edges.append(self.nodes[key])
            key = self.nodes[key].parent
        return edges[::-1]


def dfs_dp(inst: Instance, g: RegionGraph, from_arrangement: Arrangement, to_arrangement: Arrangement,
           paths: Optional[PathDictionary] = None, deadline: Optional[Deadline] = None) -> MonotoneTree:
    tree = MonotoneTree(inst, g, from_arrangement, to_arrangement)
    return tree.grow(paths if paths is not None else PathDictionary(), deadline)


def realize_edge(inst: Instance, g: RegionGraph, edge: TreeEdge, before: Arrangement) -> Action:
    """Action for one tree edge; ``before`` is the arrangement the move starts from"""
    start = inst.position_of(edge.from_label)
    end = inst.position_of(edge.to_label)
    resting = [inst.position_of(label) for j, label in enumerate(before) if j != edge.object]
    return Action({
        'object': edge.object,
        'kind': edge.kind.value,
        'from': start,
        'to': end,
        'from_label': edge.from_label,
        'to_label': edge.to_label,
        'walk': edge.walk.region_ids,
        'polyline': walk_to_curve(g, edge.walk, start, end, resting),
    })


def extract_actions(tree: MonotoneTree, key: Optional[ArrangementKey] = None) -> List[Action]:
    key = tree.target_key if key is None else key
    return [realize_edge(tree.inst, tree.g, edge, tree.decode(edge.parent)) for edge in tree.path_to(key)]


def extract_solution(tree: MonotoneTree, key: Optional[ArrangementKey] = None, time_s: float = 0.0,
                     seed: Optional[int] = None) -> Solution:
    return Solution.from_actions(tree.inst, extract_actions(tree, key), time_s, seed)


def solve_monotone(inst: Instance, g: RegionGraph, time_limit: Optional[float] = None,
                   paths: Optional[PathDictionary] = None) -> Tuple[Optional[Solution], MonotoneTree]:
    """Run DFS_DP from the start arrangement to the goal arrangement"""
    deadline = Deadline(config['MONOTONE_TIME_LIMIT'] if time_limit is None else time_limit)
    tree = dfs_dp(inst, g, inst.initial_arrangement(), inst.final_arrangement(), paths, deadline)
    logger.info(f"Monotone search: {len(tree)} nodes, {tree.expansions} expansions, "
                f"solved={tree.solved} in {deadline.elapsed:.3f}s")
    if not tree.solved:
        return None, tree
    return extract_solution(tree, time_s=deadline.elapsed), tree
