import logging
from typing import Dict, List, Optional, Sequence

import numpy as np

from rearrangeflow.app import config
from rearrangeflow.models import Instance, Solution
from rearrangeflow.services.region_graph import RegionGraph

logger = logging.getLogger(__name__)

# Fill per interference cardinality, light to dark; larger counts reuse the last entry
REGION_PALETTE = ['#ffffff', '#e3eef9', '#c6dbef', '#9ecae1', '#6baed6', '#4292c6', '#2171b5', '#08519c']
PATH_PALETTE = ['#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b', '#e377c2', '#17becf', '#bcbd22']


class SVGBuilder:
    """Accumulates SVG 1.1 elements in workspace coordinates (y up)"""

    def __init__(self, width: float, height: float, scale: Optional[float] = None):
        self.width = width
        self.height = height
        self.scale = scale or config['SVG_SCALE']
        self.lines: List[str] = []

    def _x(self, x: float) -> str:
        return f"{x * self.scale:.3f}"

    def _y(self, y: float) -> str:
        return f"{(self.height - y) * self.scale:.3f}"

    def rect(self, x: float, y: float, w: float, h: float, style: str):
        self.lines.append(f'<rect x="{self._x(x)}" y="{self._y(y + h)}" width="{w * self.scale:.3f}" '
                          f'height="{h * self.scale:.3f}" style="{style}"/>')

    def circle(self, x: float, y: float, r: float, style: str):
        self.lines.append(f'<circle cx="{self._x(x)}" cy="{self._y(y)}" r="{r * self.scale:.3f}" style="{style}"/>')

    def text(self, x: float, y: float, content: str, style: str = 'font-size:10px'):
        self.lines.append(f'<text x="{self._x(x)}" y="{self._y(y)}" style="{style}">{content}</text>')

    def path(self, d: str, style: str):
        self.lines.append(f'<path d="{d}" style="{style}"/>')

    def polyline(self, points: Sequence[Sequence[float]], style: str):
        coords = ' '.join(f"{self._x(p[0])},{self._y(p[1])}" for p in points)
        self.lines.append(f'<polyline points="{coords}" style="{style}"/>')

    def group(self, layer: str):
        self.lines.append(f'<g id="{layer}">')

    def end_group(self):
        self.lines.append('</g>')

    def document(self) -> str:
        w = self.width * self.scale
        h = self.height * self.scale
        header = [
            '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
            '<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.1//EN" "http://www.w3.org/Graphics/SVG/1.1/DTD/svg11.dtd">',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.3f}" height="{h:.3f}" '
            f'viewBox="0 0 {w:.3f} {h:.3f}">',
        ]
        return '\n'.join(header + self.lines + ['</svg>']) + '\n'


def _region_runs(builder: SVGBuilder, g: RegionGraph) -> Dict[int, List[str]]:
    """Horizontal runs of equal interference cardinality, as path fragments per cardinality"""
    sizes = np.array([len(region.interference) for region in g.regions])
    cardinality = sizes[g.region_map]
    grid = g.grid
    runs: Dict[int, List[str]] = {}
    for row in range(grid.rows):
        values = cardinality[row]
        breaks = np.flatnonzero(np.diff(values)) + 1
        starts = np.concatenate([[0], breaks])
        ends = np.concatenate([breaks, [grid.cols]])
        y_top = grid.y0 + (row + 1) * grid.dy
        for start, end in zip(starts, ends):
            x = grid.x0 + start * grid.dx
            width = (end - start) * grid.dx
            runs.setdefault(int(values[start]), []).append(
                f"M{builder._x(x)} {builder._y(y_top)}h{width * builder.scale:.3f}"
                f"v{grid.dy * builder.scale:.3f}h{-width * builder.scale:.3f}z")
    return runs


def render_svg(inst: Instance, g: Optional[RegionGraph] = None, solution: Optional[Solution] = None,
               show_regions: bool = True, show_poses: bool = True, show_paths: bool = True,
               scale: Optional[float] = None) -> str:
    builder = SVGBuilder(inst.workspace.width, inst.workspace.height, scale)
    r = inst.radius

    if show_regions and g is not None:
        builder.group('regions')
        for count, fragments in sorted(_region_runs(builder, g).items()):
            fill = REGION_PALETTE[min(count, len(REGION_PALETTE) - 1)]
            builder.path(''.join(fragments), f"fill:{fill};stroke:none")
        builder.end_group()

    builder.group('frame')
    builder.rect(0.0, 0.0, inst.workspace.width, inst.workspace.height, 'fill:none;stroke:#000000;stroke-width:2')
    builder.end_group()

    if show_poses:
        builder.group('poses')
        for k, p in enumerate(inst.buffers):
            builder.circle(p.x, p.y, r, 'fill:none;stroke:#7f7f7f;stroke-width:1;stroke-dasharray:4,3')
            builder.text(p.x, p.y, f"B{k}", 'font-size:9px;fill:#7f7f7f')
        for i, p in enumerate(inst.starts):
            builder.circle(p.x, p.y, r, 'fill:#fdd0a2;fill-opacity:0.8;stroke:#d94801;stroke-width:1')
            builder.text(p.x, p.y, f"S{i}", 'font-size:10px;fill:#000000')
        for i, p in enumerate(inst.goals):
            builder.circle(p.x, p.y, r, 'fill:none;stroke:#238b45;stroke-width:1.5')
            builder.text(p.x, p.y - 0.5 * r, f"G{i}", 'font-size:10px;fill:#238b45')
        builder.end_group()

    if show_paths and solution is not None:
        builder.group('paths')
        for step, action in enumerate(solution.actions):
            colour = PATH_PALETTE[step % len(PATH_PALETTE)]
            points = action.polyline or [action.from_pos, action.to_pos]
            builder.polyline(points, f"fill:none;stroke:{colour};stroke-width:1.5")
            mid = points[len(points) // 2]
            builder.text(mid[0], mid[1], f"{step + 1}:o{action.object}", f'font-size:9px;fill:{colour}')
        builder.end_group()

    logger.debug(f"Rendered SVG with {len(builder.lines)} elements")
    return builder.document()
