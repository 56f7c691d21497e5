import csv
import glob
import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Any, Dict, List, Optional, Sequence

from rearrangeflow.errors import GenerationFailure, RearrangeError
from rearrangeflow.services.instance_service import generate_instance
from rearrangeflow.services.monotone import dfs_dp
from rearrangeflow.services.region_graph import build_region_graph
from rearrangeflow.services.solver_service import MODES, run_query
from rearrangeflow.utils.geometry import Workspace
from rearrangeflow.utils.helpers import Deadline, calculate_stats, format_bool, sanitize_filename
from rearrangeflow.utils.storage import load_instance, save_solution

logger = logging.getLogger(__name__)

ROW_FIELDS = ['instance', 'mode', 'solved', 'actions', 'buffers', 'time_s', 'seed']
AGGREGATE_FIELDS = ['mode', 'n', 'count', 'success_rate', 'mean_buffers', 'mean_actions', 'mean_time']
SURVEY_FIELDS = ['density', 'attempts', 'monotone', 'nonmonotone', 'undetermined', 'failed']


def list_corpus(corpus_dir: str) -> List[str]:
    return sorted(glob.glob(os.path.join(corpus_dir, '*.json')))


def bench_query(task: Dict[str, Any]) -> Dict[str, Any]:
    """Run one (instance, mode) pair; failures become unsolved rows"""
    path, mode = task['path'], task['mode']
    name = os.path.splitext(os.path.basename(path))[0]
    row = {'instance': name, 'mode': mode, 'solved': False, 'actions': None, 'buffers': None,
           'time_s': 0.0, 'seed': task['seed'], 'n': 0}
    try:
        inst = load_instance(path)
    except (RearrangeError, OSError) as e:
        logger.warning(f"Skipping unreadable corpus file {path}: {e}")
        return row
    row['n'] = inst.n
    try:
        result = run_query(inst, mode, task['time_limit'], task['seed'], task['exhaustive'], task['cell_size'])
        row.update({'solved': result.solved, 'actions': result.actions, 'buffers': result.buffers,
                    'time_s': 0.0 if task['no_timing'] else result.time_s})
        if result.solved and task['solutions_dir']:
            if task['no_timing']:
                result.solution.time_s = 0.0
            filename = sanitize_filename(f"{name}_{mode}.json")
            save_solution(result.solution, os.path.join(task['solutions_dir'], filename))
    except (RearrangeError, OSError) as e:
        logger.error(f"Error running {mode} on {path}: {e}")
    return row


def run_bench(corpus_dir: str, modes: Sequence[str], time_limit: Optional[float] = None, jobs: int = 1,
              seed: int = 0, exhaustive: bool = False, cell_size: Optional[float] = None,
              solutions_dir: Optional[str] = None, no_timing: bool = False) -> List[Dict[str, Any]]:
    for mode in modes:
        if mode not in MODES:
            raise ValueError(f"unknown mode '{mode}'")
    tasks = [{'path': path, 'mode': mode, 'time_limit': time_limit, 'seed': seed, 'exhaustive': exhaustive,
              'cell_size': cell_size, 'solutions_dir': solutions_dir, 'no_timing': no_timing}
             for path in list_corpus(corpus_dir) for mode in modes]
    logger.info(f"Benchmarking {len(tasks)} queries from {corpus_dir} with {jobs} job(s)")

    if jobs <= 1 or len(tasks) <= 1:
        rows = [bench_query(task) for task in tasks]
    else:
        rows = []
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            futures = [executor.submit(bench_query, task) for task in tasks]
            for future in as_completed(futures):
                rows.append(future.result())

    order = {mode: i for i, mode in enumerate(modes)}
    rows.sort(key=lambda row: (row['instance'], order[row['mode']]))
    return rows


def _cell(value: Any) -> str:
    if value is None:
        return ''
    if isinstance(value, bool):
        return format_bool(value)
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def format_bench_csv(rows: List[Dict[str, Any]]) -> str:
    """Data rows, then a blank line and the per-(mode, n) aggregate block"""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator='\n')
    writer.writerow(ROW_FIELDS)
    for row in rows:
        writer.writerow([_cell(row['time_s']) if field == 'time_s' else _cell(row[field])
                         for field in ROW_FIELDS])
    if rows:
        writer.writerow([])
        writer.writerow(AGGREGATE_FIELDS)
        for stats in calculate_stats(rows):
            writer.writerow([_cell(stats[field]) for field in AGGREGATE_FIELDS])
    return out.getvalue()


def survey_densities(n: int, densities: Sequence[float], count: int, workspace: Workspace, seed: int = 0,
                     time_limit: Optional[float] = None,
                     cell_size: Optional[float] = None) -> List[Dict[str, Any]]:
    """Classify generated instances per density.

    A search cut short by the deadline is undetermined, not non-monotone.
    """
    rows = []
    for density in densities:
        tally = {'density': density, 'attempts': count, 'monotone': 0, 'nonmonotone': 0, 'undetermined': 0,
                 'failed': 0}
        for offset in range(count):
            try:
                inst = generate_instance(n, density, workspace, seed + offset)
            except GenerationFailure as e:
                logger.debug(f"density {density} seed {seed + offset}: {e}")
                tally['failed'] += 1
                continue
            g = build_region_graph(inst, cell_size)
            tree = dfs_dp(inst, g, inst.initial_arrangement(), inst.final_arrangement(),
                          deadline=Deadline(time_limit))
            if tree.solved:
                tally['monotone'] += 1
            elif tree.deadline_exceeded:
                tally['undetermined'] += 1
            else:
                tally['nonmonotone'] += 1
        logger.info(f"Survey density={density}: {tally}")
        rows.append(tally)
    return rows


def format_survey_csv(rows: List[Dict[str, Any]]) -> str:
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=SURVEY_FIELDS, lineterminator='\n')
    writer.writeheader()
    for row in rows:
        writer.writerow({**row, 'density': f"{row['density']:g}"})
    return out.getvalue()
