"""Reference solvers used to check the planners: exhaustive search, ordering backtracking, random ablation."""
import copy
import logging
import math
from collections import deque
from typing import Dict, List, Optional, Tuple

from rearrangeflow.app import config
from rearrangeflow.errors import Infeasible, ValidationError
from rearrangeflow.models import ActionKind, Arrangement, Instance, PoseLabel, Solution
from rearrangeflow.services.monotone import PathDictionary, TreeEdge, realize_edge
from rearrangeflow.services.nonmonotone import InformedSearch, SearchConfig
from rearrangeflow.services.region_graph import RegionGraph
from rearrangeflow.utils.geometry import SWEEP_TOLERANCE, Position, discs_collide, sweep_clear
from rearrangeflow.utils.helpers import Deadline

logger = logging.getLogger(__name__)


def _destination_free(inst: Instance, current: Arrangement, obj: int, label: PoseLabel) -> bool:
    destination = inst.position_of(label)
    return not any(discs_collide(destination, inst.position_of(other), inst.radius)
                   for j, other in enumerate(current) if j != obj)


def brute_force_optimal(inst: Instance, g: RegionGraph, max_buffer_visits: Optional[int] = None,
                        deadline: Optional[Deadline] = None) -> Tuple[int, Solution]:
    """Breadth-first search over whole arrangements for a minimum-action plan.

    Object i may occupy its start, its goal or any candidate buffer. Plans
    longer than ``n_moved + max_buffer_visits`` actions are not explored.
    """
    max_buffer_visits = config['ORACLE_MAX_BUFFER_VISITS'] if max_buffer_visits is None else max_buffer_visits
    deadline = deadline or Deadline()
    paths = PathDictionary()
    bound = inst.n_moved + max_buffer_visits
    buffers = [PoseLabel.buffer(k) for k in range(len(inst.buffers))]

    initial = inst.initial_arrangement()
    parents: Dict[Arrangement, Tuple[Optional[Arrangement], Optional[TreeEdge]]] = {initial: (None, None)}
    depth = {initial: 0}
    queue = deque([initial])
    expanded = 0

    while queue:
        deadline.check('brute-force search')
        current = queue.popleft()
        expanded += 1
        remaining = current.objects_not_at_goal(inst)
        if not remaining:
            steps = []
            node = current
            while parents[node][0] is not None:
                steps.append(parents[node])
                node = parents[node][0]
            actions = [realize_edge(inst, g, edge, before) for before, edge in reversed(steps)]
            logger.info(f"Brute force: {len(actions)} actions after {expanded} expansions")
            return len(actions), Solution.from_actions(inst, actions, deadline.elapsed)
        if depth[current] + len(remaining) > bound:
            continue

        held = set(current)
        occupied_cache = {}
        for obj in range(inst.n):
            modes = [PoseLabel.start(obj), PoseLabel.goal(obj)] + buffers
            for label in modes:
                if label == current[obj] or label in held:
                    continue
                if not _destination_free(inst, current, obj, label):
                    continue
                arrangement = current.moved(obj, label)
                if arrangement in parents:
                    continue
                occupied = occupied_cache.setdefault(obj, current.occupied_by_others(obj))
                walk = paths.lookup_or_search(g, obj, current[obj], label, occupied)
                if walk is None:
                    continue
                kind = ActionKind.TO_GOAL if label == PoseLabel.goal(obj) else ActionKind.TO_BUFFER
                parents[arrangement] = (current, TreeEdge(None, obj, current[obj], label, kind, walk))
                depth[arrangement] = depth[current] + 1
                queue.append(arrangement)

    raise Infeasible(f"no plan within {bound} actions ({max_buffer_visits} buffer visits), "
                     f"{expanded} arrangements expanded")


class MrsPlanner:
    """Backtracking over object orderings without memoization"""

    def __init__(self, inst: Instance, g: RegionGraph, paths: Optional[PathDictionary] = None):
        self.inst = inst
        self.g = g
        self.paths = paths if paths is not None else PathDictionary()
        self.expansions = 0

    def solve(self, deadline: Optional[Deadline] = None) -> Optional[Solution]:
        deadline = deadline or Deadline()
        steps = self._search(self.inst.initial_arrangement(), deadline)
        logger.info(f"mRS: solved={steps is not None} after {self.expansions} expansions")
        if steps is None:
            return None
        actions = [realize_edge(self.inst, self.g, edge, before) for before, edge in steps]
        return Solution.from_actions(self.inst, actions, deadline.elapsed)

    def _search(self, current: Arrangement, deadline: Deadline) -> Optional[List[Tuple[Arrangement, TreeEdge]]]:
        deadline.check('mRS search')
        self.expansions += 1
        remaining = current.objects_not_at_goal(self.inst)
        if not remaining:
            return []
        for obj in remaining:
            goal = PoseLabel.goal(obj)
            if not _destination_free(self.inst, current, obj, goal):
                continue
            walk = self.paths.lookup_or_search(self.g, obj, current[obj], goal, current.occupied_by_others(obj))
            if walk is None:
                continue
            rest = self._search(current.moved(obj, goal), deadline)
            if rest is not None:
                return [(current, TreeEdge(None, obj, current[obj], goal, ActionKind.TO_GOAL, walk))] + rest
        return None


def mrs_backtracking(inst: Instance, g: RegionGraph, deadline: Optional[Deadline] = None) -> Optional[Solution]:
    return MrsPlanner(inst, g).solve(deadline)


class RandomAblationSearch(InformedSearch):
    """Perturbation search with random root, object and buffer choices"""

    def _choose(self):
        roots = [node.root for node in self.tree.super_nodes if node.root not in self._spent]
        while roots:
            current = roots.pop(int(self.rng.integers(len(roots))))
            objects = current.objects_not_at_goal(self.inst)
            if not objects:
                self._spent.add(current)
                continue
            obj = objects[int(self.rng.integers(len(objects)))]
            options = self._untried(current, [obj], None, self.config.exhaustive)
            if not options:
                options = self._untried(current, objects, None, self.config.exhaustive)
            if not options:
                self._spent.add(current)
                continue
            return current, [options[int(self.rng.integers(len(options)))]]
        return self._random_fallback()


def random_ablation_search(inst: Instance, g: RegionGraph, deadline: Optional[Deadline] = None,
                           seed: int = 0, search_config: Optional[SearchConfig] = None):
    search_config = copy.copy(search_config) if search_config is not None else SearchConfig()
    search_config.seed = seed
    return RandomAblationSearch(inst, g, search_config, deadline).run()


def replay_solution(inst: Instance, g: RegionGraph, solution: Solution, tolerance: Optional[float] = None) -> bool:
    """Simulate a plan from the start arrangement and check every step.

    Each polyline is checked exactly against the resting discs; ``tolerance``
    only absorbs float rounding. Raises ValidationError on the first bad action.
    """
    tolerance = SWEEP_TOLERANCE if tolerance is None else tolerance
    positions: List[Position] = list(inst.starts)

    for step, action in enumerate(solution.actions):
        if not 0 <= action.object < inst.n:
            raise ValidationError(f"action {step}: object {action.object} out of range for n={inst.n}")
        here = positions[action.object]
        if not (math.isclose(here.x, action.from_pos.x, abs_tol=1e-9)
                and math.isclose(here.y, action.from_pos.y, abs_tol=1e-9)):
            raise ValidationError(f"action {step}: object {action.object} is at ({here.x}, {here.y}), "
                                  f"not ({action.from_pos.x}, {action.from_pos.y})")
        if not inst.workspace.contains(action.to_pos, inst.radius):
            raise ValidationError(f"action {step}: destination outside the configuration rectangle")
        others = [p for j, p in enumerate(positions) if j != action.object]
        if any(discs_collide(action.to_pos, p, inst.radius) for p in others):
            raise ValidationError(f"action {step}: destination collides with a resting object")
        if action.polyline and not sweep_clear(action.polyline, others, inst.radius, tolerance):
            raise ValidationError(f"action {step}: object {action.object} sweeps through a resting object")
        positions[action.object] = Position(*action.to_pos)

    for i, (p, goal) in enumerate(zip(positions, inst.goals)):
        if not (math.isclose(p.x, goal.x, abs_tol=1e-9) and math.isclose(p.y, goal.y, abs_tol=1e-9)):
            raise ValidationError(f"object {i} ends at ({p.x}, {p.y}) instead of its goal")
    return True
