"""Buffer-based search for instances that need objects moved more than once.

The search grows a tree of arrangements. Nodes reachable from a common root
by straight-to-goal moves form a super node; every other super node is
rooted at an arrangement reached by parking one object at a buffer. Roots
with fewer perturbations are expanded first.
"""
import logging
from typing import Dict, List, NamedTuple, Optional, Set, Tuple

import networkx as nx
import numpy as np

from rearrangeflow.app import config
from rearrangeflow.errors import DeadlineExceeded
from rearrangeflow.models import (ActionKind, Arrangement, Instance, Perturbation, PoseLabel,
                                  Solution)
from rearrangeflow.services.monotone import (MonotoneTree, PathDictionary, TreeEdge, dfs_dp,
                                             realize_edge)
from rearrangeflow.services.region_graph import RegionGraph
from rearrangeflow.utils.geometry import Position, discs_collide
from rearrangeflow.utils.helpers import Deadline

logger = logging.getLogger(__name__)


class SearchConfig:
    """Caps and switches for the perturbation search"""

    def __init__(self, exhaustive: bool = False, max_objects_per_node: Optional[int] = None,
                 max_buffers_per_object: Optional[int] = None, seed: int = 0):
        self.exhaustive = exhaustive
        self.max_objects_per_node = max_objects_per_node or config['MAX_OBJECTS_PER_NODE']
        self.max_buffers_per_object = max_buffers_per_object or config['MAX_BUFFERS_PER_OBJECT']
        self.seed = seed

    @property
    def object_cap(self) -> Optional[int]:
        return None if self.exhaustive else self.max_objects_per_node

    @property
    def buffer_cap(self) -> Optional[int]:
        return None if self.exhaustive else self.max_buffers_per_object


class SearchNode(NamedTuple):
    parent: Optional[Arrangement]
    edge: Optional[TreeEdge]
    super_id: int


class SuperNode:
    def __init__(self, super_id: int, root: Arrangement, perturbation_count: int):
        self.id = super_id
        self.root = root
        self.perturbation_count = perturbation_count
        self.members: List[Arrangement] = [root]
        # None until ranked at first selection
        self.pending: Optional[List[Perturbation]] = None

    @property
    def has_untried(self) -> bool:
        return self.pending is None or bool(self.pending)

    def __repr__(self) -> str:
        return f"SuperNode({self.id}, {self.root.encode()}, count={self.perturbation_count})"


class SearchTree:
    """Arrangements seen so far, grouped into super nodes"""

    def __init__(self, inst: Instance, root: Arrangement):
        self.inst = inst
        self.root = Arrangement(root)
        self.nodes: Dict[Arrangement, SearchNode] = {}
        self.super_nodes: List[SuperNode] = []
        self.tried: Set[Tuple[Arrangement, int, PoseLabel]] = set()
        self.new_super_node(self.root, None, None, 0)

    def __contains__(self, arrangement: Arrangement) -> bool:
        return arrangement in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    def new_super_node(self, root: Arrangement, parent: Optional[Arrangement], edge: Optional[TreeEdge],
                       count: int) -> SuperNode:
        node = SuperNode(len(self.super_nodes), root, count)
        self.super_nodes.append(node)
        self.nodes[root] = SearchNode(parent, edge, node.id)
        return node

    def add_member(self, arrangement: Arrangement, parent: Arrangement, edge: TreeEdge) -> int:
        super_id = self.nodes[parent].super_id
        self.nodes[arrangement] = SearchNode(parent, edge, super_id)
        self.super_nodes[super_id].members.append(arrangement)
        return super_id

    def super_node_of(self, arrangement: Arrangement) -> SuperNode:
        return self.super_nodes[self.nodes[arrangement].super_id]

    def merge(self, partial: MonotoneTree) -> Optional[Arrangement]:
        """Add a local planner's tree; returns the target arrangement when reached.

        Arrangements already present keep their first-seen parent and super
        node. A move to a buffer opens a new super node one perturbation
        deeper than its parent's.
        """
        for key, edge in partial.nodes.items():
            if edge.parent is None:
                continue
            arrangement = partial.decode(key)
            if arrangement in self.nodes:
                continue
            parent = partial.decode(edge.parent)
            if edge.kind == ActionKind.TO_BUFFER:
                count = self.super_node_of(parent).perturbation_count + 1
                self.new_super_node(arrangement, parent, edge, count)
            else:
                self.add_member(arrangement, parent, edge)
        if partial.solved:
            return partial.decode(partial.target_key)
        return None

    def steps_to(self, arrangement: Arrangement) -> List[Tuple[Arrangement, TreeEdge]]:
        """(arrangement before the move, edge) pairs from the root"""
        steps = []
        while self.nodes[arrangement].parent is not None:
            node = self.nodes[arrangement]
            steps.append((node.parent, node.edge))
            arrangement = node.parent
        return steps[::-1]

    def best_arrangement(self) -> Arrangement:
        """Most objects at goal; earliest on ties"""
        return max(self.nodes, key=lambda a: a.objects_at_goal(self.inst))


class SearchFailure:
    def __init__(self, reason: str, tree: Optional[SearchTree], best_arrangement: Optional[Arrangement],
                 time_s: float = 0.0):
        self.reason = reason
        self.tree = tree
        self.best_arrangement = best_arrangement
        self.time_s = time_s

    def __bool__(self) -> bool:
        return False

    def __repr__(self) -> str:
        best = self.best_arrangement.encode() if self.best_arrangement is not None else None
        return f"SearchFailure({self.reason}, best={best})"


def edfs_dp(inst: Instance, g: RegionGraph, from_arrangement: Arrangement, to_arrangement: Arrangement,
            perturbation: Perturbation, paths: Optional[PathDictionary] = None,
            deadline: Optional[Deadline] = None) -> MonotoneTree:
    """DFS_DP where ``perturbation.object`` must visit its buffer before its target"""
    tree = MonotoneTree(inst, g, from_arrangement, to_arrangement, perturbation)
    return tree.grow(paths if paths is not None else PathDictionary(), deadline)


def select_expansion_node(tree: SearchTree) -> Optional[SuperNode]:
    """Fewest perturbations first, then most objects at goal, then oldest"""
    best = None
    best_rank = None
    for node in tree.super_nodes:
        if not node.has_untried:
            continue
        rank = (node.perturbation_count, -node.root.objects_at_goal(tree.inst))
        if best_rank is None or rank < best_rank:
            best, best_rank = node, rank
    return best


def dependency_graph(inst: Instance, current: Arrangement, final: Arrangement) -> nx.DiGraph:
    """Edge j -> i when object i currently sits on object j's goal"""
    graph = nx.DiGraph()
    pending = [i for i in range(inst.n) if not current.is_at_goal(inst, i)]
    graph.add_nodes_from(pending)
    for i in pending:
        here = inst.position_of(current[i])
        for j in pending:
            if j != i and discs_collide(here, inst.position_of(final[j]), inst.radius):
                graph.add_edge(j, i)
    return graph


def rank_perturbation_objects(inst: Instance, current: Arrangement, final: Arrangement) -> List[int]:
    graph = dependency_graph(inst, current, final)
    return sorted(graph.nodes, key=lambda i: (-(graph.in_degree(i) + graph.out_degree(i)), i))


def generate_candidate_buffers(inst: Instance, count: int, samples_per_slot: Optional[int] = None,
                               seed: int = 0) -> List[Position]:
    """Greedy pick of the sample overlapping the fewest starts, goals and chosen buffers, per slot"""
    if count < 1:
        raise ValueError(f"buffer count must be at least 1, got {count}")
    samples_per_slot = samples_per_slot or config['BUFFER_SAMPLES_PER_SLOT']
    rng = np.random.default_rng(seed)
    xmin, ymin, xmax, ymax = inst.workspace.inset_bounds(inst.radius)
    fixed = np.asarray(list(inst.starts) + list(inst.goals), dtype=float).reshape(-1, 2)
    limit = 4.0 * inst.radius ** 2

    chosen: List[Position] = []
    for _ in range(count):
        samples = rng.uniform([xmin, ymin], [xmax, ymax], size=(samples_per_slot, 2))
        obstacles = np.vstack([fixed, np.asarray(chosen, dtype=float).reshape(-1, 2)])
        diff = samples[:, None, :] - obstacles[None, :, :]
        scores = np.sum(np.einsum('ijk,ijk->ij', diff, diff) < limit, axis=1)
        best = samples[int(np.argmin(scores))]
        chosen.append(Position(float(best[0]), float(best[1])))
    return chosen


def buffer_overlap_score(inst: Instance, p: Position) -> int:
    return sum(1 for q in list(inst.starts) + list(inst.goals) if discs_collide(p, q, inst.radius))


def prepare_buffers(inst: Instance, seed: int = 0, count: Optional[int] = None) -> Instance:
    """Instance with generated candidate buffers when it carries none"""
    if inst.buffers:
        return inst
    buffers = generate_candidate_buffers(inst, count or inst.n, seed=seed)
    logger.debug(f"Generated {len(buffers)} candidate buffers with seed {seed}")
    return inst.with_buffers(buffers)


def rank_buffers(inst: Instance, g: RegionGraph, current: Arrangement, obj: int,
                 paths: Optional[PathDictionary] = None, exhaustive: bool = False,
                 cap: Optional[int] = None) -> List[PoseLabel]:
    """Buffer labels for ``obj`` in preference order.

    Clean candidate buffers reachable now come first, then starts of objects
    already at goal, then goals nobody holds. Exhaustive mode skips the
    reachability and current-collision filters and appends the candidate
    buffers that overlap some start or goal.
    """
    here = current[obj]
    others = [(j, label) for j, label in enumerate(current) if j != obj]
    held = set(current)

    def usable(label: PoseLabel) -> bool:
        p = inst.position_of(label)
        if label in held or p == inst.position_of(here):
            return False
        if exhaustive:
            return True
        return not any(discs_collide(p, inst.position_of(other), inst.radius) for _, other in others)

    clean, dirty = [], []
    for k, p in enumerate(inst.buffers):
        (dirty if buffer_overlap_score(inst, p) else clean).append(PoseLabel.buffer(k))

    tier1 = [label for label in clean if usable(label)]
    if not exhaustive:
        paths = paths if paths is not None else PathDictionary()
        occupied = current.occupied_by_others(obj)
        tier1 = [label for label in tier1
                 if paths.lookup_or_search(g, obj, here, label, occupied) is not None]
    tier2 = [PoseLabel.start(j) for j, _ in others
             if current.is_at_goal(inst, j) and usable(PoseLabel.start(j))]
    tier3 = [PoseLabel.goal(j) for j, _ in others if usable(PoseLabel.goal(j))]
    tier4 = [label for label in dirty if usable(label)] if exhaustive else []

    ranked = []
    for label in tier1 + tier2 + tier3 + tier4:
        if label not in ranked:
            ranked.append(label)
    return ranked if cap is None else ranked[:cap]


class InformedSearch:
    """Monotone attempt first, then perturbations from the most promising super node roots"""

    def __init__(self, inst: Instance, g: RegionGraph, search_config: Optional[SearchConfig] = None,
                 deadline: Optional[Deadline] = None):
        self.inst = inst
        self.g = g
        self.config = search_config or SearchConfig()
        self.deadline = deadline or Deadline(config['NONMONOTONE_TIME_LIMIT'])
        self.rng = np.random.default_rng(self.config.seed)
        self.paths = PathDictionary()
        self.final = inst.final_arrangement()
        self.tree: Optional[SearchTree] = None
        self.local_runs = 0
        self._spent: Set[Arrangement] = set()

    def run(self):
        initial = self.inst.initial_arrangement()
        monotone = dfs_dp(self.inst, self.g, initial, self.final, self.paths, self.deadline)
        self.tree = SearchTree(self.inst, initial)
        reached = self.tree.merge(monotone)
        if reached is not None:
            return self._solution(reached)

        try:
            while True:
                self.deadline.check('perturbation search')
                choice = self._choose()
                if choice is None:
                    logger.info(f"Perturbation search exhausted after {self.local_runs} local runs")
                    return self._failure('exhausted')
                current, perturbations = choice
                for perturbation in perturbations:
                    self.deadline.check('perturbation search')
                    reached = self._try(current, perturbation)
                    if reached is not None:
                        return self._solution(reached)
        except DeadlineExceeded:
            logger.info(f"Perturbation search hit its deadline after {self.local_runs} local runs")
            return self._failure('deadline')

    def _try(self, current: Arrangement, perturbation: Perturbation) -> Optional[Arrangement]:
        self.tree.tried.add((current, perturbation.object, perturbation.buffer))
        self.local_runs += 1
        partial = edfs_dp(self.inst, self.g, current, self.final, perturbation, self.paths, self.deadline)
        reached = self.tree.merge(partial)
        if partial.deadline_exceeded and reached is None:
            raise DeadlineExceeded("perturbation search ran out of time")
        return reached

    def _untried(self, current: Arrangement, objects: List[int], cap: Optional[int],
                 exhaustive: bool) -> List[Perturbation]:
        perturbations = []
        for obj in objects:
            for label in rank_buffers(self.inst, self.g, current, obj, self.paths, exhaustive, cap):
                if (current, obj, label) not in self.tree.tried:
                    perturbations.append(Perturbation(obj, label))
        return perturbations

    def _rank(self, node: SuperNode) -> List[Perturbation]:
        objects = rank_perturbation_objects(self.inst, node.root, self.final)
        if self.config.object_cap is not None:
            objects = objects[:self.config.object_cap]
        return self._untried(node.root, objects, self.config.buffer_cap, self.config.exhaustive)

    def _choose(self) -> Optional[Tuple[Arrangement, List[Perturbation]]]:
        while True:
            node = select_expansion_node(self.tree)
            if node is None:
                return self._random_fallback()
            if node.pending is None:
                node.pending = self._rank(node)
            if node.pending:
                batch, node.pending = node.pending, []
                return node.root, batch

    def _random_fallback(self) -> Optional[Tuple[Arrangement, List[Perturbation]]]:
        """Uniform tree node with an uncapped, untried perturbation"""
        while True:
            self.deadline.check('perturbation search')
            candidates = [a for a in self.tree.nodes if a not in self._spent]
            if not candidates:
                return None
            current = candidates[int(self.rng.integers(len(candidates)))]
            objects = current.objects_not_at_goal(self.inst)
            options = self._untried(current, objects, None, self.config.exhaustive)
            if not options:
                self._spent.add(current)
                continue
            return current, [options[int(self.rng.integers(len(options)))]]

    def _solution(self, reached: Arrangement) -> Solution:
        actions = [realize_edge(self.inst, self.g, edge, before)
                   for before, edge in self.tree.steps_to(reached)]
        solution = Solution.from_actions(self.inst, actions, self.deadline.elapsed, self.config.seed)
        logger.info(f"Solved with {solution.num_actions} actions, {solution.num_buffers} buffers, "
                    f"{self.local_runs} local runs in {self.deadline.elapsed:.3f}s")
        return solution

    def _failure(self, reason: str) -> SearchFailure:
        return SearchFailure(reason, self.tree, self.tree.best_arrangement(), self.deadline.elapsed)


def informed_search(inst: Instance, g: RegionGraph, deadline: Optional[Deadline] = None,
                    search_config: Optional[SearchConfig] = None):
    """Solution, or SearchFailure carrying the tree and the best partial arrangement"""
    return InformedSearch(inst, g, search_config, deadline).run()
