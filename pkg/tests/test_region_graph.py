import numpy as np
import pytest
from scipy import ndimage

from rearrangeflow.errors import PositionOutOfBounds, ResolutionTooCoarse, UnmappedPose
from rearrangeflow.models import PoseLabel
from rearrangeflow.services.monotone import dfs_dp
from rearrangeflow.services.region_graph import (FOUR_CONNECTED, build_region_graph, curve_to_walk,
                                                 decompose, dense_sample_interference, region_of,
                                                 rg_dfs, sample_polyline, walk_to_curve)
from rearrangeflow.utils.geometry import Workspace, sweep_clear

from tests.conftest import generated_corpus, make_instance


@pytest.fixture
def three_discs():
    return make_instance(12, 12, 1.0, [(5, 5), (7.5, 5.5)], [(6, 7.2), (3, 9)])


def _flood_fill_connected(g, source, target, blocked):
    """Raster oracle: 4-connected cells whose region avoids ``blocked``"""
    free = np.zeros(g.region_map.shape, dtype=bool)
    for region in g.regions:
        if not region.mask & blocked:
            free.flat[region.cells] = True
    components, _ = ndimage.label(free, structure=FOUR_CONNECTED)
    a = components[g.grid.cell_of(source)]
    b = components[g.grid.cell_of(target)]
    return a != 0 and a == b


class TestDecompose(object):

    def test_no_poses(self):
        g = decompose(Workspace(10, 10), 1.0, [])
        assert g.num_regions == 1
        assert g.num_edges == 0
        assert g.regions[0].interference == frozenset()

    def test_single_pose(self):
        label = PoseLabel.start(0)
        g = decompose(Workspace(20, 20), 1.0, [(label, (10, 10))])
        assert g.num_regions == 2
        assert g.num_edges == 1
        assert sorted(len(r.interference) for r in g.regions) == [0, 1]
        assert g.regions[g.pose_region[label]].interference == {label}

    def test_resolution_floor(self):
        with pytest.raises(ResolutionTooCoarse):
            decompose(Workspace(10, 10), 1.0, [], cell_size=0.5)

    def test_pose_out_of_bounds(self):
        with pytest.raises(PositionOutOfBounds):
            decompose(Workspace(10, 10), 1.0, [(PoseLabel.start(0), (0.5, 5))])

    def test_regions_partition_pure_and_connected(self, three_discs):
        g = build_region_graph(three_discs)
        seen = np.zeros(g.region_map.size, dtype=int)
        for region in g.regions:
            seen[region.cells] += 1
            assert np.all(g.region_map.flat[region.cells] == region.id)
            footprint = np.zeros(g.region_map.shape, dtype=bool)
            footprint.flat[region.cells] = True
            _, count = ndimage.label(footprint, structure=FOUR_CONNECTED)
            assert count == 1
        assert np.all(seen == 1)

    def test_cell_labels_match_brute_force(self, three_discs):
        g = build_region_graph(three_discs)
        pose_cells = {g.grid.flat(g.grid.cell_of(p)) for p in g.positions}
        rng = np.random.default_rng(0)
        for index in rng.choice(g.region_map.size, size=300, replace=False):
            if index in pose_cells:
                continue
            centre = g.grid.center_of(g.grid.unflat(index))
            expected = {label for label, p in zip(g.labels, g.positions)
                        if (centre.x - p.x) ** 2 + (centre.y - p.y) ** 2 < 4.0}
            assert g.regions[g.region_map.flat[index]].interference == expected

    def test_edges_are_sound(self, three_discs):
        g = build_region_graph(three_discs)
        pose_regions = set(g.pose_region.values())
        rows, cols = g.region_map.shape
        for a, b in g.graph.edges:
            cells_b = set(int(x) for x in g.regions[b].cells)
            touching = any(
                (r + dr) * cols + (c + dc) in cells_b
                for r, c in (divmod(int(x), cols) for x in g.regions[a].cells)
                for dr, dc in ((0, 1), (1, 0), (0, -1), (-1, 0))
                if 0 <= r + dr < rows and 0 <= c + dc < cols)
            assert touching
            if a not in pose_regions and b not in pose_regions:
                assert (g.regions[a].mask ^ g.regions[b].mask).bit_count() == 1

    def test_restriction_can_be_disabled(self, three_discs):
        restricted = build_region_graph(three_discs, one_difference=True)
        unrestricted = build_region_graph(three_discs, one_difference=False)
        assert restricted.num_regions == unrestricted.num_regions
        assert unrestricted.num_edges >= restricted.num_edges


class TestRegionOf(object):

    def test_pose_centre(self, single):
        g = build_region_graph(single)
        assert PoseLabel.start(0) in g.regions[region_of(g, (2, 2))].interference

    def test_open_space(self, single):
        g = build_region_graph(single)
        assert g.regions[region_of(g, (8, 2))].interference == frozenset()

    def test_same_cell(self, single):
        g = build_region_graph(single)
        x0, y0 = g.grid.center_of((10, 10))
        assert region_of(g, (x0, y0)) == region_of(g, (x0 + g.grid.dx / 4, y0 - g.grid.dy / 4))

    def test_out_of_bounds(self, single):
        g = build_region_graph(single)
        with pytest.raises(PositionOutOfBounds):
            region_of(g, (9.5, 5))


class TestRgDfs(object):

    def test_same_region(self, single):
        g = build_region_graph(single)
        walk = rg_dfs(g, 0, PoseLabel.start(0), PoseLabel.start(0), [])
        assert len(walk) == 1
        assert walk.interference == frozenset()

    def test_free_walk_excludes_own_labels(self, single):
        g = build_region_graph(single)
        walk = rg_dfs(g, 0, PoseLabel.start(0), PoseLabel.goal(0), [])
        assert walk is not None
        assert walk.interference == frozenset()

    def test_corridor_blocked(self, corridor):
        g = build_region_graph(corridor)
        assert rg_dfs(g, 0, PoseLabel.start(0), PoseLabel.goal(0), [PoseLabel.start(1)]) is None
        assert rg_dfs(g, 0, PoseLabel.start(0), PoseLabel.goal(0), [PoseLabel.goal(1)]) is None
        assert rg_dfs(g, 0, PoseLabel.start(0), PoseLabel.goal(0), []) is not None

    def test_unmapped_pose(self, single):
        g = build_region_graph(single)
        with pytest.raises(UnmappedPose):
            rg_dfs(g, 0, PoseLabel.start(0), PoseLabel.buffer(4), [])

    def test_walk_avoids_occupied(self, two_route):
        g = build_region_graph(two_route)
        occupied = [PoseLabel.start(1), PoseLabel.goal(1)]
        walk = rg_dfs(g, 0, PoseLabel.start(0), PoseLabel.goal(0), occupied)
        assert walk is not None
        assert not walk.interference & set(occupied)
        for a, b in zip(walk.region_ids, walk.region_ids[1:]):
            assert g.graph.has_edge(a, b)

    def test_agrees_with_flood_fill(self, two_route):
        g = build_region_graph(two_route)
        labels = [PoseLabel.start(1), PoseLabel.start(2), PoseLabel.goal(1), PoseLabel.goal(2)]
        for bits in range(16):
            occupied = [label for k, label in enumerate(labels) if bits >> k & 1]
            walk = rg_dfs(g, 0, PoseLabel.start(0), PoseLabel.goal(0), occupied)
            expected = _flood_fill_connected(g, two_route.starts[0], two_route.goals[0], g.mask_of(occupied))
            assert (walk is not None) == expected


class TestCurves(object):

    def test_curve_inside_one_region(self, single):
        g = build_region_graph(single)
        assert len(curve_to_walk(g, [(6, 2), (8, 2.5), (8.5, 3)])) == 1

    def test_curve_crossing_one_boundary(self):
        label = PoseLabel.start(0)
        g = decompose(Workspace(20, 20), 1.0, [(label, (10, 10))])
        walk = curve_to_walk(g, [(2, 10), (9, 10)])
        assert len(walk) == 2
        assert walk.interference == {label}

    def test_curve_out_of_bounds(self, single):
        g = build_region_graph(single)
        with pytest.raises(PositionOutOfBounds):
            curve_to_walk(g, [(2, 2), (9.5, 2)])

    def test_random_polylines_match_dense_sampling(self, three_discs):
        g = build_region_graph(three_discs)
        rng = np.random.default_rng(42)
        xmin, ymin, xmax, ymax = three_discs.workspace.inset_bounds(three_discs.radius)
        exact = 0
        for _ in range(20):
            polyline = rng.uniform([xmin, ymin], [xmax, ymax], size=(4, 2)).tolist()
            walk = curve_to_walk(g, polyline)
            dense = dense_sample_interference(g, polyline)
            if walk.interference == dense:
                exact += 1
                continue
            # disagreements only where the curve grazes a conflict disc
            samples = sample_polyline(polyline, g.cell_size / 8)
            for label in walk.interference ^ dense:
                p = g.positions[g.label_index[label]]
                nearest = np.min(np.hypot(samples[:, 0] - p.x, samples[:, 1] - p.y))
                assert abs(nearest - 2.0) <= 2 * g.cell_size
        assert exact >= 14

    def test_singleton_walk_realizes_at_pose(self, single):
        g = build_region_graph(single)
        walk = rg_dfs(g, 0, PoseLabel.start(0), PoseLabel.start(0), [])
        polyline = walk_to_curve(g, walk, single.starts[0], single.starts[0])
        assert polyline[0] == single.starts[0] and polyline[-1] == single.starts[0]
        assert curve_to_walk(g, polyline).region_ids == walk.region_ids

    def test_round_trip_for_planner_walks(self, two_route, corridor):
        for inst in (two_route, corridor):
            g = build_region_graph(inst)
            labels = list(g.pose_region)
            for source in labels:
                for target in labels:
                    walk = rg_dfs(g, 0, source, target, [])
                    if walk is None:
                        continue
                    polyline = walk_to_curve(g, walk, inst.position_of(source), inst.position_of(target))
                    assert curve_to_walk(g, polyline).region_ids == walk.region_ids

    def test_realized_curve_interference(self, two_route):
        g = build_region_graph(two_route)
        occupied = [PoseLabel.start(1), PoseLabel.goal(1)]
        walk = rg_dfs(g, 0, PoseLabel.start(0), PoseLabel.goal(0), occupied)
        polyline = walk_to_curve(g, walk, two_route.starts[0], two_route.goals[0])
        samples = sample_polyline(polyline, g.cell_size / 8)
        for label in occupied:
            p = two_route.position_of(label)
            assert np.min(np.hypot(samples[:, 0] - p.x, samples[:, 1] - p.y)) >= 2.0 - g.cell_size

    def test_realization_keeps_clear_of_near_tangent_disc(self):
        # the mover's pose cell centre can fall inside the neighbour's conflict disc
        grazing = 0
        for k in range(8):
            x = 5.0 + 0.0125 * k
            inst = make_instance(14, 10, 1.0, [(x, 5), (x + 2.0005, 5)], [(2, 5), (x + 2.0005, 5)])
            g = build_region_graph(inst)
            occupied = [PoseLabel.start(1), PoseLabel.goal(1)]
            walk = rg_dfs(g, 0, PoseLabel.start(0), PoseLabel.goal(0), occupied)
            assert walk is not None
            resting = [inst.starts[1]]
            plain = walk_to_curve(g, walk, inst.starts[0], inst.goals[0])
            grazing += not sweep_clear(plain, resting, inst.radius)
            polyline = walk_to_curve(g, walk, inst.starts[0], inst.goals[0], resting)
            assert polyline[0] == inst.starts[0] and polyline[-1] == inst.goals[0]
            assert sweep_clear(polyline, resting, inst.radius)
        assert grazing >= 1

    def test_round_trip_on_generated_trees(self):
        walks = 0
        for inst in generated_corpus([4, 6], [0.2, 0.3], range(3)):
            g = build_region_graph(inst)
            tree = dfs_dp(inst, g, inst.initial_arrangement(), inst.final_arrangement())
            for edge in tree.nodes.values():
                if edge.parent is None:
                    continue
                start, end = inst.position_of(edge.from_label), inst.position_of(edge.to_label)
                polyline = walk_to_curve(g, edge.walk, start, end)
                assert curve_to_walk(g, polyline).region_ids == edge.walk.region_ids
                walks += 1
        assert walks > 0
