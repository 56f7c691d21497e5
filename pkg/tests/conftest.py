import pytest

from rearrangeflow.errors import GenerationFailure
from rearrangeflow.models import Instance
from rearrangeflow.services.instance_service import generate_instance
from rearrangeflow.services.region_graph import build_region_graph
from rearrangeflow.utils.geometry import Workspace


def make_instance(width, height, radius, starts, goals, buffers=()):
    return Instance.create(Workspace(width, height), radius, starts, goals, buffers).validate()


def generated_corpus(sizes, densities, seeds, width=10.0, height=10.0):
    """Seeded random instances; seeds the generator cannot place are skipped"""
    for n in sizes:
        for density in densities:
            for seed in seeds:
                try:
                    yield generate_instance(n, density, Workspace(width, height), seed)
                except GenerationFailure:
                    continue


@pytest.fixture
def single():
    return make_instance(10, 10, 1.0, [(2, 2)], [(8, 8)])


@pytest.fixture
def chain():
    # each goal is the next object's start
    return make_instance(20, 8, 1.0, [(3, 4), (7, 4), (11, 4)], [(7, 4), (11, 4), (15, 4)])


@pytest.fixture
def swap():
    return make_instance(10, 7, 1.0, [(3, 3), (7, 3)], [(7, 3), (3, 3)], buffers=[(9, 6)])


@pytest.fixture
def swap_bad_buffer():
    return make_instance(10, 7, 1.0, [(3, 3), (7, 3)], [(7, 3), (3, 3)], buffers=[(3.5, 3)])


@pytest.fixture
def corridor():
    # centre band is 1.9 tall, less than one conflict disc
    return make_instance(20, 3.9, 1.0, [(2, 1.95), (10, 1.95)], [(18, 1.95), (14, 1.95)])


@pytest.fixture
def two_route():
    return make_instance(20, 12, 1.0, [(2, 6), (10, 6), (10, 9.5)], [(18, 6), (10, 2.5), (16, 10.5)])


@pytest.fixture
def graph_of():
    cache = {}

    def build(inst, cell_size=None):
        key = (id(inst), cell_size)
        if key not in cache:
            cache[key] = build_region_graph(inst, cell_size)
        return cache[key]
    return build
