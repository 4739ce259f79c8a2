"""Observation noise: spatial edges are dropped or corrupted before the agent sees them."""

import logging
import math
import random
from .._compat import StrEnum

from ..graph.base import SPATIAL_PREDICATES, RelationEdge, SceneGraph
from ..graph.normalize import normalize

logger = logging.getLogger(__name__)

DROP_PROBABILITY = 0.5


class NoiseMode(StrEnum):
    # replace the predicate, keep both endpoints
    FLIP = "flip"
    # swap subject and object, keep the predicate
    REVERSE = "reverse"


def noisy_edge_count(edge_count: int, noise_ratio: float) -> int:
    # rounding first keeps 0.1 * 10 from ceiling to 2
    return min(edge_count, math.ceil(round(noise_ratio * edge_count, 9)))


def perturb(
    sg: SceneGraph,
    noise_ratio: float,
    rng: random.Random,
    mode: NoiseMode = NoiseMode.FLIP,
) -> SceneGraph:
    """Corrupt ``ceil(noise_ratio * |spatial edges|)`` distinct spatial edges.

    Each chosen edge is dropped with probability one half, otherwise flipped or
    reversed according to ``mode``. Holding edges and unary states are never
    touched and the result is normalized again.
    """
    if not 0.0 <= noise_ratio <= 1.0:
        raise ValueError(f"noise ratio {noise_ratio} outside [0, 1]")
    spatial = sorted(e for e in sg.edges if e.predicate in SPATIAL_PREDICATES)
    count = noisy_edge_count(len(spatial), noise_ratio)
    if count == 0:
        return sg

    edges = set(sg.edges)
    for edge in rng.sample(spatial, count):
        edges.discard(edge)
        if rng.random() < DROP_PROBABILITY:
            continue
        if mode == NoiseMode.REVERSE:
            edges.add(RelationEdge(edge.object, edge.predicate, edge.subject))
        else:
            choices = [p for p in SPATIAL_PREDICATES if p != edge.predicate]
            edges.add(RelationEdge(edge.subject, rng.choice(choices), edge.object))
    logger.debug(f"perturbed {count} of {len(spatial)} spatial edges")
    return normalize(sg.replace(edges=frozenset(edges)))
