import logging
from typing import Dict, Optional

from rearrangeflow.app import config
from rearrangeflow.errors import BufferOccupied, DeadlineExceeded, Infeasible
from rearrangeflow.models import Instance, Perturbation, PoseLabel, Solution
from rearrangeflow.services.monotone import PathDictionary, extract_solution, solve_monotone
from rearrangeflow.services.nonmonotone import (SearchConfig, SearchFailure, edfs_dp, informed_search,
                                                prepare_buffers)
from rearrangeflow.services.oracles import MrsPlanner, brute_force_optimal, random_ablation_search
from rearrangeflow.services.region_graph import build_region_graph
from rearrangeflow.utils.helpers import Deadline

logger = logging.getLogger(__name__)

MODES = ('monotone', 'informed', 'random', 'edfs', 'oracle', 'mrs')
MONOTONE_MODES = ('monotone', 'mrs')

SOLVED, DEADLINE, INFEASIBLE = 'solved', 'deadline', 'infeasible'


class QueryResult:
    """Outcome of one solver run on one instance"""

    def __init__(self, data: Dict):
        self.mode = data.get('mode')
        self.status = data.get('status', INFEASIBLE)
        self.solution: Optional[Solution] = data.get('solution')
        self.time_s = float(data.get('time_s', 0.0))
        self.seed = data.get('seed')
        self.detail = data.get('detail', '')

    @property
    def solved(self) -> bool:
        return self.status == SOLVED

    @property
    def actions(self) -> Optional[int]:
        return self.solution.num_actions if self.solution is not None else None

    @property
    def buffers(self) -> Optional[int]:
        return self.solution.num_buffers if self.solution is not None else None


def default_time_limit(mode: str) -> float:
    if mode in MONOTONE_MODES:
        return config['MONOTONE_TIME_LIMIT']
    return config['NONMONOTONE_TIME_LIMIT']


def run_query(inst: Instance, mode: str, time_limit: Optional[float] = None, seed: int = 0,
              exhaustive: bool = False, cell_size: Optional[float] = None,
              max_buffer_visits: Optional[int] = None, perturbed_object: Optional[int] = None,
              buffer_label: Optional[str] = None) -> QueryResult:
    """Build the region graph and dispatch to the requested planner"""
    if mode not in MODES:
        raise ValueError(f"unknown mode '{mode}', expected one of {', '.join(MODES)}")
    deadline = Deadline(default_time_limit(mode) if time_limit is None else time_limit)
    if mode not in MONOTONE_MODES:
        inst = prepare_buffers(inst, seed)
    g = build_region_graph(inst, cell_size)
    logger.info(f"Solving n={inst.n} with mode={mode}: {g.num_regions} regions, {g.num_edges} edges")

    status, solution, detail = INFEASIBLE, None, ''
    try:
        if mode == 'monotone':
            solution, tree = solve_monotone(inst, g, deadline.seconds)
            if solution is None:
                status = DEADLINE if tree.deadline_exceeded else INFEASIBLE
                detail = f"{len(tree)} arrangements reached"
        elif mode == 'mrs':
            solution = MrsPlanner(inst, g).solve(deadline)
        elif mode == 'oracle':
            _, solution = brute_force_optimal(inst, g, max_buffer_visits, deadline)
        elif mode == 'edfs':
            solution, status, detail = _run_edfs(inst, g, deadline, perturbed_object, buffer_label)
        else:
            search_config = SearchConfig(exhaustive=exhaustive, seed=seed)
            if mode == 'informed':
                outcome = informed_search(inst, g, deadline, search_config)
            else:
                outcome = random_ablation_search(inst, g, deadline, seed, search_config)
            if isinstance(outcome, SearchFailure):
                status = DEADLINE if outcome.reason == 'deadline' else INFEASIBLE
                detail = f"best arrangement {outcome.best_arrangement.encode()}"
            else:
                solution = outcome
    except DeadlineExceeded as e:
        status, detail = DEADLINE, str(e)
    except (Infeasible, BufferOccupied) as e:
        status, detail = INFEASIBLE, str(e)

    if solution is not None:
        status = SOLVED
        solution.time_s = deadline.elapsed
        solution.seed = seed
    return QueryResult({'mode': mode, 'status': status, 'solution': solution,
                        'time_s': deadline.elapsed, 'seed': seed, 'detail': detail})


def _run_edfs(inst, g, deadline, perturbed_object, buffer_label):
    if perturbed_object is None or not (buffer_label or "").strip():
        raise ValueError("edfs mode needs an object and a buffer label")
    buffer_label = buffer_label.strip()
    label = PoseLabel.parse(buffer_label) if not buffer_label.isdigit() else PoseLabel.buffer(int(buffer_label))
    if label not in inst.labels():
        raise ValueError(f"pose {label} is not in the instance")
    if not 0 <= perturbed_object < inst.n:
        raise ValueError(f"object {perturbed_object} is not in the instance")
    tree = edfs_dp(inst, g, inst.initial_arrangement(), inst.final_arrangement(),
                   Perturbation(perturbed_object, label), PathDictionary(), deadline)
    if tree.solved:
        return extract_solution(tree), SOLVED, ''
    status = DEADLINE if tree.deadline_exceeded else INFEASIBLE
    return None, status, f"{len(tree)} arrangements reached"
