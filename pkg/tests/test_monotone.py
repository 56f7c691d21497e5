import pytest

from rearrangeflow.errors import KeyAbsent
from rearrangeflow.models import ActionKind, Arrangement, PoseLabel
from rearrangeflow.services.monotone import (ArrangementKey, PathDictionary, dfs_dp, extract_solution,
                                             lookup_or_search, solve_monotone)
from rearrangeflow.services.oracles import mrs_backtracking, replay_solution
from rearrangeflow.services.region_graph import build_region_graph, curve_to_walk
from rearrangeflow.utils.helpers import Deadline

from tests.conftest import generated_corpus, make_instance


def _plan(inst, paths=None):
    g = build_region_graph(inst)
    return g, dfs_dp(inst, g, inst.initial_arrangement(), inst.final_arrangement(), paths)


class TestDfsDp(object):

    def test_single_object(self, single):
        g, tree = _plan(single)
        assert tree.solved
        solution = extract_solution(tree)
        assert solution.num_actions == 1
        action = solution.actions[0]
        assert action.kind == ActionKind.TO_GOAL
        assert action.polyline[0] == single.starts[0]
        assert action.polyline[-1] == single.goals[0]
        assert curve_to_walk(g, action.polyline).region_ids == action.walk

    def test_swap_is_not_monotone(self, swap):
        _, tree = _plan(swap)
        assert not tree.solved
        assert len(tree) == 1

    def test_chain_moves_front_object_first(self, chain):
        g, tree = _plan(chain)
        solution = extract_solution(tree)
        assert [a.object for a in solution.actions] == [2, 1, 0]
        assert solution.num_buffers == 0
        assert replay_solution(chain, g, solution)

    def test_node_count_bound(self, chain):
        _, tree = _plan(chain)
        assert len(tree) <= 2 ** chain.n

    def test_dictionary_does_not_change_answers(self, chain, swap, two_route):
        for inst in (chain, swap, two_route):
            _, cached = _plan(inst, PathDictionary())
            plain_paths = PathDictionary(enabled=False)
            _, plain = _plan(inst, plain_paths)
            assert cached.solved == plain.solved
            assert len(plain_paths) == 0

    def test_objects_already_placed(self):
        inst = make_instance(10, 10, 1.0, [(2, 2), (5, 5)], [(2, 2), (8, 8)])
        _, tree = _plan(inst)
        solution = extract_solution(tree)
        assert [a.object for a in solution.actions] == [1]
        assert solution.num_buffers == 0

    def test_root_is_target(self):
        inst = make_instance(10, 10, 1.0, [(2, 2)], [(2, 2)])
        _, tree = _plan(inst)
        assert tree.root_key == tree.target_key
        assert extract_solution(tree).num_actions == 0

    def test_missing_key(self, swap):
        _, tree = _plan(swap)
        with pytest.raises(KeyAbsent):
            extract_solution(tree, ArrangementKey(0b11))

    def test_deadline_returns_flagged_partial_tree(self, chain):
        g = build_region_graph(chain)
        tree = dfs_dp(chain, g, chain.initial_arrangement(), chain.final_arrangement(),
                      deadline=Deadline(0.0))
        assert tree.deadline_exceeded
        assert not tree.solved

    def test_from_intermediate_arrangement(self, chain):
        g = build_region_graph(chain)
        start = Arrangement([PoseLabel.start(0), PoseLabel.start(1), PoseLabel.goal(2)])
        tree = dfs_dp(chain, g, start, chain.final_arrangement())
        assert [a.object for a in extract_solution(tree).actions] == [1, 0]

    def test_solve_monotone_reports_time(self, single):
        g = build_region_graph(single)
        solution, tree = solve_monotone(single, g, time_limit=30)
        assert solution.num_actions == 1
        assert solution.time_s >= 0.0
        assert tree.expansions >= 2


class TestPathDictionary(object):

    def test_repeat_query_is_answered_from_the_dictionary(self, two_route):
        g = build_region_graph(two_route)
        paths = PathDictionary()
        occupied = [PoseLabel.start(1), PoseLabel.goal(1)]
        first = lookup_or_search(paths, g, 0, PoseLabel.start(0), PoseLabel.goal(0), occupied)
        second = lookup_or_search(paths, g, 0, PoseLabel.start(0), PoseLabel.goal(0), occupied)
        assert first is second
        assert paths.searches == 1
        assert paths.hits == 1

    def test_invalidated_walk_triggers_new_search(self, two_route):
        g = build_region_graph(two_route)
        paths = PathDictionary()
        top = lookup_or_search(paths, g, 0, PoseLabel.start(0), PoseLabel.goal(0),
                               [PoseLabel.start(1), PoseLabel.goal(1)])
        bottom = lookup_or_search(paths, g, 0, PoseLabel.start(0), PoseLabel.goal(0),
                                  [PoseLabel.start(1), PoseLabel.start(2)])
        assert top is not None and bottom is not None
        assert top != bottom
        assert paths.searches == 2
        assert len(paths) == 2

    def test_no_route_leaves_dictionary_unchanged(self, two_route):
        g = build_region_graph(two_route)
        paths = PathDictionary()
        lookup_or_search(paths, g, 0, PoseLabel.start(0), PoseLabel.goal(0), [PoseLabel.start(1)])
        assert len(paths) == 1
        blocked = [PoseLabel.start(1), PoseLabel.start(2), PoseLabel.goal(1)]
        assert lookup_or_search(paths, g, 0, PoseLabel.start(0), PoseLabel.goal(0), blocked) is None
        assert len(paths) == 1

    def test_failed_occupancy_short_circuits_supersets(self, corridor):
        g = build_region_graph(corridor)
        paths = PathDictionary()
        assert paths.lookup_or_search(g, 0, PoseLabel.start(0), PoseLabel.goal(0), [PoseLabel.start(1)]) is None
        searches = paths.searches
        blocked = [PoseLabel.start(1), PoseLabel.goal(1)]
        assert paths.lookup_or_search(g, 0, PoseLabel.start(0), PoseLabel.goal(0), blocked) is None
        assert paths.searches == searches


class TestGeneratedCorpus(object):

    def test_agrees_with_ordering_backtracking(self):
        checked = 0
        for inst in generated_corpus([3, 4, 5, 6], [0.1, 0.2], range(4)):
            g = build_region_graph(inst)
            paths = PathDictionary()
            tree = dfs_dp(inst, g, inst.initial_arrangement(), inst.final_arrangement(), paths)
            ordering = mrs_backtracking(inst, g, Deadline(60))
            assert tree.solved == (ordering is not None)
            if tree.solved:
                assert replay_solution(inst, g, extract_solution(tree))
                assert replay_solution(inst, g, ordering)
            checked += 1
        assert checked >= 24

    def test_verdict_survives_finer_cells(self):
        for inst in generated_corpus([3, 4, 5], [0.2, 0.3], range(3)):
            verdicts = []
            for cell_size in (inst.radius / 10, inst.radius / 20):
                g = build_region_graph(inst, cell_size)
                tree = dfs_dp(inst, g, inst.initial_arrangement(), inst.final_arrangement())
                verdicts.append(tree.solved)
            assert verdicts[0] == verdicts[1]
