import logging
import math
from typing import List

import numpy as np

from rearrangeflow.app import config
from rearrangeflow.errors import GenerationFailure
from rearrangeflow.models import Instance
from rearrangeflow.utils.geometry import Position, Workspace

logger = logging.getLogger(__name__)

SAMPLE_BATCH = 64


def density(inst: Instance) -> float:
    """Share of the workspace area covered by the objects"""
    return inst.n * math.pi * inst.radius ** 2 / (inst.workspace.width * inst.workspace.height)


def radius_for_density(n: int, target_density: float, workspace: Workspace) -> float:
    return math.sqrt(target_density * workspace.width * workspace.height / (n * math.pi))


class InstanceGenerator:
    """Rejection sampler for feasible start and goal arrangements"""

    def __init__(self, max_attempts: int = None):
        self.max_attempts = max_attempts or config['MAX_GENERATION_ATTEMPTS']

    def generate(self, n: int, target_density: float, workspace: Workspace, seed: int) -> Instance:
        if n < 1:
            raise ValueError(f"need at least one object, got n={n}")
        if not 0 < target_density < 0.9:
            raise ValueError(f"density must be in (0, 0.9), got {target_density}")

        radius = radius_for_density(n, target_density, workspace)
        if not workspace.admits(radius):
            raise GenerationFailure(f"radius {radius:.4g} leaves no room for disc centres in "
                                    f"{workspace.width} x {workspace.height}")

        rng = np.random.default_rng(seed)
        starts = self._sample_arrangement(rng, n, radius, workspace, 'start')
        goals = self._sample_arrangement(rng, n, radius, workspace, 'goal')
        inst = Instance.create(workspace, radius, starts, goals)
        logger.info(f"Generated instance n={n} density={target_density} seed={seed} r={radius:.4f}")
        return inst

    def _sample_arrangement(self, rng: np.random.Generator, n: int, radius: float,
                            workspace: Workspace, what: str) -> List[Position]:
        xmin, ymin, xmax, ymax = workspace.inset_bounds(radius)
        low = np.array([xmin, ymin])
        high = np.array([xmax, ymax])
        min_sq = 4.0 * radius * radius
        placed = np.empty((0, 2))

        for index in range(n):
            attempts = 0
            chosen = None
            while attempts < self.max_attempts and chosen is None:
                batch = min(SAMPLE_BATCH, self.max_attempts - attempts)
                candidates = rng.uniform(low, high, size=(batch, 2))
                attempts += batch
                if len(placed) == 0:
                    chosen = candidates[0]
                    break
                diff = candidates[:, None, :] - placed[None, :, :]
                free = np.all(np.einsum('ijk,ijk->ij', diff, diff) >= min_sq, axis=1)
                hits = np.flatnonzero(free)
                if hits.size:
                    chosen = candidates[hits[0]]
            if chosen is None:
                raise GenerationFailure(
                    f"no more space for a valid {what} placement: object {index} of {n} "
                    f"failed after {self.max_attempts} attempts")
            placed = np.vstack([placed, chosen])

        return [Position(float(x), float(y)) for x, y in placed]


# Global generator instance
instance_generator = InstanceGenerator()


def generate_instance(n: int, target_density: float, workspace: Workspace, seed: int,
                      max_attempts: int = None) -> Instance:
    if max_attempts is not None:
        return InstanceGenerator(max_attempts).generate(n, target_density, workspace, seed)
    return instance_generator.generate(n, target_density, workspace, seed)
