"""Interference-region decomposition of the configuration rectangle.

The inset rectangle available to disc centres is rasterized into square-ish
cells. Every cell is labelled with the interference set of its centre (the
poses whose conflict disc contains it), cells holding a pose centre take the
exact interference set of that pose, and each label class is split into
4-connected components. Those components are the regions; two regions are
adjacent when some of their cells are 4-neighbours.
"""
import logging
import math
from collections import deque
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np
from scipy import ndimage

from rearrangeflow.app import config
from rearrangeflow.errors import RealizationFailure, ResolutionTooCoarse, UnmappedPose
from rearrangeflow.models import Instance, PoseLabel
from rearrangeflow.utils.geometry import Position, Workspace, conflict_mask, sweep_clear

logger = logging.getLogger(__name__)

FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


def _bits(mask: int) -> Iterable[int]:
    index = 0
    while mask:
        if mask & 1:
            yield index
        mask >>= 1
        index += 1


class Grid:
    """Raster over the inset rectangle ``[r, w-r] x [r, h-r]``"""

    def __init__(self, workspace: Workspace, radius: float, cell_size: float):
        self.cell_size = cell_size
        self.x0, self.y0, x1, y1 = workspace.inset_bounds(radius)
        self.cols = max(1, math.ceil((x1 - self.x0) / cell_size))
        self.rows = max(1, math.ceil((y1 - self.y0) / cell_size))
        self.dx = (x1 - self.x0) / self.cols
        self.dy = (y1 - self.y0) / self.rows

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    def centers(self) -> Tuple[np.ndarray, np.ndarray]:
        xs = self.x0 + (np.arange(self.cols) + 0.5) * self.dx
        ys = self.y0 + (np.arange(self.rows) + 0.5) * self.dy
        return np.meshgrid(xs, ys)

    def cell_of(self, p: Sequence[float]) -> Tuple[int, int]:
        col = min(max(int(math.floor((p[0] - self.x0) / self.dx)), 0), self.cols - 1)
        row = min(max(int(math.floor((p[1] - self.y0) / self.dy)), 0), self.rows - 1)
        return row, col

    def center_of(self, cell: Tuple[int, int]) -> Position:
        row, col = cell
        return Position(self.x0 + (col + 0.5) * self.dx, self.y0 + (row + 0.5) * self.dy)

    def flat(self, cell: Tuple[int, int]) -> int:
        return cell[0] * self.cols + cell[1]

    def unflat(self, index: int) -> Tuple[int, int]:
        return divmod(int(index), self.cols)


class Region:
    """Connected set of cells sharing one interference set"""

    def __init__(self, region_id: int, mask: int, interference: FrozenSet[PoseLabel],
                 cells: np.ndarray, seed: int):
        self.id = region_id
        self.mask = mask
        self.interference = interference
        self.cells = cells  # flat cell indices
        self.seed = seed

    def __repr__(self) -> str:
        labels = ','.join(sorted(str(label) for label in self.interference))
        return f"Region({self.id}, {{{labels}}}, cells={len(self.cells)})"


class Walk:
    """Sequence of adjacent regions plus the union of their interference"""

    def __init__(self, region_ids: Sequence[int], interference: FrozenSet[PoseLabel], mask: int,
                 blocking_mask: Optional[int] = None):
        if not region_ids:
            raise ValueError("a walk needs at least one region")
        self.region_ids: Tuple[int, ...] = tuple(region_ids)
        self.interference = interference
        self.mask = mask
        # union before dropping the mover's own labels
        self.blocking_mask = mask if blocking_mask is None else blocking_mask

    def valid_under(self, blocked: int) -> bool:
        return not self.blocking_mask & blocked

    def __len__(self) -> int:
        return len(self.region_ids)

    def __eq__(self, other) -> bool:
        return isinstance(other, Walk) and self.region_ids == other.region_ids

    def __hash__(self) -> int:
        return hash(self.region_ids)

    def __repr__(self) -> str:
        return f"Walk({list(self.region_ids)})"


class RegionGraph:
    """Regions, their adjacency graph and the pose-to-region lookup"""

    def __init__(self, workspace: Workspace, radius: float, labels: List[PoseLabel],
                 positions: List[Position], grid: Grid, region_map: np.ndarray,
                 regions: List[Region], graph: nx.Graph, pose_region: Dict[PoseLabel, int],
                 one_difference: bool):
        self.workspace = workspace
        self.radius = radius
        self.labels = labels
        self.positions = positions
        self.label_index = {label: i for i, label in enumerate(labels)}
        self.grid = grid
        self.region_map = region_map
        self.regions = regions
        self.graph = graph
        self.pose_region = pose_region
        self.one_difference = one_difference

    @property
    def cell_size(self) -> float:
        return self.grid.cell_size

    @property
    def num_regions(self) -> int:
        return len(self.regions)

    @property
    def num_edges(self) -> int:
        return self.graph.number_of_edges()

    def mask_of(self, labels: Iterable[PoseLabel]) -> int:
        mask = 0
        for label in labels:
            index = self.label_index.get(label)
            if index is None:
                raise UnmappedPose(f"pose {label} is not part of this region graph")
            mask |= 1 << index
        return mask

    def labels_of(self, mask: int) -> FrozenSet[PoseLabel]:
        return frozenset(self.labels[i] for i in _bits(mask))

    def own_mask(self, obj: int) -> int:
        mask = 0
        for i, label in enumerate(self.labels):
            if label.belongs_to(obj):
                mask |= 1 << i
        return mask

    def make_walk(self, region_ids: Sequence[int], exclude_object: Optional[int] = None) -> Walk:
        raw = 0
        for region_id in region_ids:
            raw |= self.regions[region_id].mask
        mask = raw & ~self.own_mask(exclude_object) if exclude_object is not None else raw
        return Walk(region_ids, self.labels_of(mask), mask, raw)

    def region_at_cell(self, cell: Tuple[int, int]) -> int:
        return int(self.region_map[cell])


def default_cell_size(radius: float) -> float:
    return radius / config['CELL_FRACTION']


def decompose(workspace: Workspace, radius: float, poses: Sequence[Tuple[PoseLabel, Sequence[float]]],
              cell_size: Optional[float] = None, one_difference: Optional[bool] = None) -> RegionGraph:
    """Build the region graph over the given labelled poses"""
    if cell_size is None:
        cell_size = default_cell_size(radius)
    if one_difference is None:
        one_difference = config['ONE_DIFFERENCE_EDGES']
    if cell_size <= 0 or cell_size > radius / 4:
        raise ResolutionTooCoarse(f"cell size {cell_size:.6g} must be in (0, r/4 = {radius / 4:.6g}]")

    labels = [label for label, _ in poses]
    positions = [Position(float(p[0]), float(p[1])) for _, p in poses]
    for label, p in zip(labels, positions):
        workspace.require(p, radius, what=f"pose {label}")

    grid = Grid(workspace, radius, cell_size)
    xs, ys = grid.centers()
    count = len(positions)

    # Per-cell interference bitsets, bit k = pose k
    membership = np.zeros(grid.shape + (count,), dtype=bool)
    for k, p in enumerate(positions):
        membership[:, :, k] = conflict_mask(xs, ys, p, radius)

    # Cells holding a pose centre take that pose's exact interference
    pose_cells: Dict[Tuple[int, int], List[int]] = {}
    for k, p in enumerate(positions):
        pose_cells.setdefault(grid.cell_of(p), []).append(k)
    pose_xs = np.array([p.x for p in positions])
    pose_ys = np.array([p.y for p in positions])
    for cell, members in pose_cells.items():
        exact = np.zeros(count, dtype=bool)
        for k in members:
            exact |= conflict_mask(pose_xs, pose_ys, positions[k], radius)
        membership[cell] = exact

    if count == 0:
        class_map = np.zeros(grid.shape, dtype=np.int64)
        class_masks = [0]
    else:
        packed = np.packbits(membership, axis=2, bitorder='little').reshape(grid.rows * grid.cols, -1)
        unique_rows, inverse = np.unique(packed, axis=0, return_inverse=True)
        class_map = inverse.reshape(grid.shape)
        class_masks = [int.from_bytes(row.tobytes(), 'little') for row in unique_rows]

    # Split each label class into 4-connected components
    component_map = np.full(grid.shape, -1, dtype=np.int64)
    component_masks: List[int] = []
    for class_id, window in enumerate(ndimage.find_objects(class_map + 1)):
        if window is None:
            continue
        components, found = ndimage.label(class_map[window] == class_id, structure=FOUR_CONNECTED)
        offset = len(component_masks)
        target = component_map[window]
        target[components > 0] = components[components > 0] - 1 + offset
        component_masks.extend([class_masks[class_id]] * found)

    # Renumber regions by first cell in row-major order
    flat_components = component_map.ravel()
    _, first_cells = np.unique(flat_components, return_index=True)
    order = np.argsort(first_cells)
    renumber = np.empty(len(order), dtype=np.int64)
    renumber[order] = np.arange(len(order))
    region_map = renumber[component_map]
    region_masks = [component_masks[old] for old in order]

    flat_regions = region_map.ravel()
    sorted_cells = np.argsort(flat_regions, kind='stable')
    boundaries = np.searchsorted(flat_regions[sorted_cells], np.arange(len(region_masks) + 1))

    pose_region: Dict[PoseLabel, int] = {}
    seeds: Dict[int, int] = {}
    for label, p in zip(labels, positions):
        cell = grid.cell_of(p)
        region_id = int(region_map[cell])
        pose_region[label] = region_id
        seeds.setdefault(region_id, grid.flat(cell))

    regions = []
    for region_id, mask in enumerate(region_masks):
        cells = sorted_cells[boundaries[region_id]:boundaries[region_id + 1]]
        regions.append(Region(region_id, mask, frozenset(labels[i] for i in _bits(mask)),
                              cells, seeds.get(region_id, int(cells[0]))))

    graph = nx.Graph()
    graph.add_nodes_from(range(len(regions)))
    pose_regions = set(pose_region.values())
    for a, b in _adjacent_pairs(region_map):
        if one_difference and a not in pose_regions and b not in pose_regions:
            if (region_masks[a] ^ region_masks[b]).bit_count() != 1:
                continue
        graph.add_edge(a, b)

    logger.debug(f"Decomposed {grid.cols}x{grid.rows} cells over {count} poses into "
                 f"{len(regions)} regions, {graph.number_of_edges()} edges")
    return RegionGraph(workspace, radius, labels, positions, grid, region_map, regions,
                       graph, pose_region, one_difference)


def _adjacent_pairs(region_map: np.ndarray) -> List[Tuple[int, int]]:
    horizontal = np.stack([region_map[:, :-1].ravel(), region_map[:, 1:].ravel()], axis=1)
    vertical = np.stack([region_map[:-1, :].ravel(), region_map[1:, :].ravel()], axis=1)
    pairs = np.concatenate([horizontal, vertical])
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    if len(pairs) == 0:
        return []
    pairs = np.unique(np.sort(pairs, axis=1), axis=0)
    return [(int(a), int(b)) for a, b in pairs]


def build_region_graph(inst: Instance, cell_size: Optional[float] = None,
                       one_difference: Optional[bool] = None) -> RegionGraph:
    """Decompose over every start, goal and buffer of the instance"""
    return decompose(inst.workspace, inst.radius, inst.poses(), cell_size, one_difference)


def region_of(g: RegionGraph, p: Sequence[float]) -> int:
    g.workspace.require(p, g.radius)
    return g.region_at_cell(g.grid.cell_of(p))


def rg_dfs(g: RegionGraph, moving: int, from_label: PoseLabel, to_label: PoseLabel,
           occupied: Iterable[PoseLabel]) -> Optional[Walk]:
    """Walk from one pose to another through regions free of occupied poses.

    The reported interference drops the moving object's own labels. A label
    of the moving object that another object currently holds (a repurposed
    start used as a buffer) still blocks.
    """
    for label in (from_label, to_label):
        if label not in g.pose_region:
            raise UnmappedPose(f"pose {label} is not part of this region graph")
    blocked = g.mask_of(occupied)
    source = g.pose_region[from_label]
    target = g.pose_region[to_label]
    regions = g.regions

    if regions[source].mask & blocked or regions[target].mask & blocked:
        return None
    if source == target:
        return g.make_walk([source], exclude_object=moving)

    traversable = nx.subgraph_view(g.graph, filter_node=lambda r: not regions[r].mask & blocked)
    try:
        path = nx.bidirectional_shortest_path(traversable, source, target)
    except nx.NetworkXNoPath:
        return None
    return g.make_walk(path, exclude_object=moving)


def _segment_cells(grid: Grid, p: Position, q: Position) -> List[Tuple[int, int]]:
    """Cells crossed by segment pq in order, without diagonal jumps"""
    ts = {0.0, 1.0}
    for origin, step, a, b in ((grid.x0, grid.dx, p.x, q.x), (grid.y0, grid.dy, p.y, q.y)):
        if a == b:
            continue
        lo, hi = min(a, b), max(a, b)
        for k in range(math.ceil((lo - origin) / step), math.floor((hi - origin) / step) + 1):
            t = (origin + k * step - a) / (b - a)
            if 0.0 < t < 1.0:
                ts.add(t)
    ordered = sorted(ts)

    cells = [grid.cell_of(p)]
    for t0, t1 in zip(ordered, ordered[1:]):
        t = 0.5 * (t0 + t1)
        cells.append(grid.cell_of((p.x + t * (q.x - p.x), p.y + t * (q.y - p.y))))
    cells.append(grid.cell_of(q))

    path: List[Tuple[int, int]] = []
    for cell in cells:
        if path and path[-1] == cell:
            continue
        if path and path[-1][0] != cell[0] and path[-1][1] != cell[1]:
            path.append((path[-1][0], cell[1]))
        path.append(cell)
    return path


def curve_to_walk(g: RegionGraph, polyline: Sequence[Sequence[float]]) -> Walk:
    """Abstract a polyline into the compressed sequence of regions it visits.

    Consecutive regions share a cell boundary; an edge dropped by the
    one-difference restriction may still be crossed by a free curve.
    """
    if not polyline:
        raise ValueError("polyline must contain at least one point")
    points = [Position(float(p[0]), float(p[1])) for p in polyline]
    for p in points:
        g.workspace.require(p, g.radius)

    cells = [g.grid.cell_of(points[0])]
    for p, q in zip(points, points[1:]):
        cells.extend(_segment_cells(g.grid, p, q)[1:])

    region_ids: List[int] = []
    for cell in cells:
        region_id = g.region_at_cell(cell)
        if not region_ids or region_ids[-1] != region_id:
            region_ids.append(region_id)
    return g.make_walk(region_ids)


def _cell_path(g: RegionGraph, starts: Sequence[int], allowed: Optional[Set[int]], goal_region: Optional[int],
               goal_cells: Optional[Set[int]], passable: Optional[np.ndarray] = None) -> Optional[List[int]]:
    """4-connected multi-source BFS over cells of ``allowed`` regions (any region when None)"""
    rows, cols = g.grid.shape
    flat_regions = g.region_map.ravel()
    parents = {start: None for start in starts}
    queue = deque(starts)
    while queue:
        cell = queue.popleft()
        if (cell in goal_cells) if goal_cells is not None else flat_regions[cell] == goal_region:
            path = []
            while cell is not None:
                path.append(cell)
                cell = parents[cell]
            return path[::-1]
        row, col = divmod(cell, cols)
        for nr, nc in ((row - 1, col), (row + 1, col), (row, col - 1), (row, col + 1)):
            if 0 <= nr < rows and 0 <= nc < cols:
                neighbor = nr * cols + nc
                if neighbor in parents or (passable is not None and not passable[neighbor]):
                    continue
                if allowed is None or int(flat_regions[neighbor]) in allowed:
                    parents[neighbor] = cell
                    queue.append(neighbor)
    return None


def _walk_cells(g: RegionGraph, ids: Sequence[int], starts: Sequence[int], ends: Set[int],
                passable: Optional[np.ndarray] = None) -> Optional[List[int]]:
    """Cells entering the walk's regions in order, from one of ``starts`` to one of ``ends``"""
    cells = None
    frontier = list(starts)
    for previous, current in zip(ids, ids[1:]):
        leg = _cell_path(g, frontier, {previous, current}, current, None, passable)
        if leg is None:
            return None
        cells = leg if cells is None else cells + leg[1:]
        frontier = [leg[-1]]
    leg = _cell_path(g, frontier, {ids[-1]}, None, ends, passable)
    if leg is None:
        return None
    return leg if cells is None else cells + leg[1:]


def _clear_cells(g: RegionGraph, obstacles: np.ndarray) -> np.ndarray:
    """Flat mask of cells whose centre is far enough from every obstacle that a
    step to a 4-neighbour with the same property stays clear"""
    xs, ys = g.grid.centers()
    step = max(g.grid.dx, g.grid.dy)
    limit = 4.0 * g.radius ** 2 + 0.25 * step ** 2
    clear = np.ones(xs.shape, dtype=bool)
    for ox, oy in obstacles:
        clear &= (xs - ox) ** 2 + (ys - oy) ** 2 >= limit
    return clear.ravel()


def _linked_cells(g: RegionGraph, point: Position, clear: np.ndarray, obstacles: np.ndarray,
                  regions: Optional[Set[int]]) -> List[int]:
    """Clear cells within two cells of ``point`` joined to it by a clear straight segment"""
    row, col = g.grid.cell_of(point)
    rows, cols = g.grid.shape
    flat_regions = g.region_map.ravel()
    linked = []
    for r in range(max(0, row - 2), min(rows, row + 3)):
        for c in range(max(0, col - 2), min(cols, col + 3)):
            cell = r * cols + c
            if not clear[cell] or (regions is not None and int(flat_regions[cell]) not in regions):
                continue
            if sweep_clear([point, g.grid.center_of((r, c))], obstacles, g.radius):
                linked.append(cell)
    return sorted(linked, key=lambda cell: (abs(cell // cols - row) + abs(cell % cols - col), cell))


def _reroute(g: RegionGraph, walk: Walk, start: Position, end: Position,
             obstacles: np.ndarray) -> Optional[List[int]]:
    """Cell path that keeps clear of ``obstacles``: in walk order if possible,
    then anywhere in the walk's regions, then anywhere"""
    ids = walk.region_ids
    clear = _clear_cells(g, obstacles)
    attempts = (({ids[0]}, {ids[-1]}, ids), (set(ids), set(ids), None), (None, None, None))
    for start_regions, end_regions, ordered in attempts:
        starts = _linked_cells(g, start, clear, obstacles, start_regions)
        ends = set(_linked_cells(g, end, clear, obstacles, end_regions))
        if not starts or not ends:
            continue
        if ordered is not None:
            cells = _walk_cells(g, ordered, starts, ends, clear)
        else:
            cells = _cell_path(g, starts, end_regions, None, ends, clear)
        if cells is not None:
            return cells
    return None


def walk_to_curve(g: RegionGraph, walk: Walk, start: Optional[Sequence[float]] = None,
                  end: Optional[Sequence[float]] = None,
                  obstacles: Optional[Sequence[Sequence[float]]] = None) -> List[Position]:
    """Realize a walk as a polyline through cell centres.

    Endpoints default to the seeds of the first and last regions; actual
    pose positions are passed when realizing an action. With ``obstacles``
    (resting disc centres) every segment is checked exactly and the route
    is moved onto clear cells when the plain realization grazes a disc.
    """
    ids = walk.region_ids
    first, last = g.regions[ids[0]], g.regions[ids[-1]]
    start_cell = g.grid.flat(g.grid.cell_of(start)) if start is not None else first.seed
    end_cell = g.grid.flat(g.grid.cell_of(end)) if end is not None else last.seed
    if g.region_map.ravel()[start_cell] != first.id or g.region_map.ravel()[end_cell] != last.id:
        raise RealizationFailure(f"endpoints do not lie in the walk's end regions {first.id} -> {last.id}")

    cells = _walk_cells(g, ids, [start_cell], {end_cell})
    if cells is None:
        raise RealizationFailure(f"no cell path through regions {list(ids)}")
    polyline = _with_endpoints(g, cells, start, end)
    if obstacles is None or not len(obstacles) or sweep_clear(polyline, obstacles, g.radius):
        return polyline

    origin = Position(*polyline[0])
    target = Position(*polyline[-1])
    blocking = np.asarray(obstacles, dtype=float).reshape(-1, 2)
    cells = _reroute(g, walk, origin, target, blocking)
    if cells is None:
        raise RealizationFailure(f"no clear route from ({origin.x:.4g}, {origin.y:.4g}) "
                                 f"to ({target.x:.4g}, {target.y:.4g})")
    logger.debug(f"Rerouted walk {list(ids)} around resting discs")
    return [origin] + [g.grid.center_of(g.grid.unflat(cell)) for cell in cells] + [target]


def _with_endpoints(g: RegionGraph, cells: List[int], start: Optional[Sequence[float]],
                    end: Optional[Sequence[float]]) -> List[Position]:
    polyline = [Position(float(start[0]), float(start[1]))] if start is not None else []
    polyline.extend(g.grid.center_of(g.grid.unflat(cell)) for cell in cells)
    if end is not None:
        polyline.append(Position(float(end[0]), float(end[1])))
    return polyline


def sample_polyline(polyline: Sequence[Sequence[float]], step: float) -> np.ndarray:
    """Vertices plus evenly spaced points at most ``step`` apart on every segment"""
    points = np.asarray(polyline, dtype=float).reshape(-1, 2)
    samples = [points[:1]]
    for p, q in zip(points, points[1:]):
        pieces = max(1, math.ceil(float(np.hypot(*(q - p))) / step))
        t = np.linspace(0.0, 1.0, pieces + 1)[1:, None]
        samples.append(p + t * (q - p))
    return np.concatenate(samples)


def dense_sample_interference(g: RegionGraph, polyline: Sequence[Sequence[float]],
                              step: Optional[float] = None) -> FrozenSet[PoseLabel]:
    """Union of exact interference sets over points sampled along the polyline"""
    samples = sample_polyline(polyline, step or g.cell_size / 8)
    if not g.positions:
        return frozenset()
    poses = np.asarray(g.positions, dtype=float)
    diff = samples[:, None, :] - poses[None, :, :]
    hit = np.any(np.einsum('ijk,ijk->ij', diff, diff) < 4.0 * g.radius ** 2, axis=0)
    return frozenset(g.labels[k] for k in np.flatnonzero(hit))
