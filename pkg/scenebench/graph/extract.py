"""Relation extraction from axis-aligned boxes.

Each unordered pair of objects is classified once, in this order:

1. inside(small, large) when the intersection covers more than ``inside_threshold``
   of the smaller box's volume;
2. ontop(upper, lower) when the vertical gap is within ``contact_tolerance`` and the
   horizontal overlap covers at least ``overlap_threshold`` of the smaller footprint;
3. beside(a, b) when the z-intervals overlap and the horizontal centre distance is at
   most ``beside_distance`` (subject is the smaller id).
"""

import logging
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..errors import DegenerateGeometry, DuplicateNode, UnknownNode
from .base import (
    ROBOT,
    ObjectNode,
    Predicate,
    RelationEdge,
    RobotState,
    SceneGraph,
    UnaryState,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, kw_only=True)
class ExtractionConfig:
    inside_threshold: float = 0.5
    overlap_threshold: float = 0.25
    contact_tolerance: float = 0.01
    beside_distance: float = 0.15
    # defaults handed to generated articulations and grippers
    joint_threshold: float = 0.05
    gripper_threshold: float = 0.5


DEFAULT_EXTRACTION = ExtractionConfig()


def relate_pair(a: ObjectNode, b: ObjectNode, config: ExtractionConfig = DEFAULT_EXTRACTION) -> RelationEdge | None:
    """Classify one pair with the same ladder :func:`extract_relations` applies."""
    lo = [max(x, y) for x, y in zip(a.aabb.min, b.aabb.min)]
    hi = [min(x, y) for x, y in zip(a.aabb.max, b.aabb.max)]
    ox, oy, oz = (max(h - l, 0.0) for l, h in zip(lo, hi))
    inter_volume = ox * oy * oz
    inter_area = ox * oy
    z_overlap = hi[2] - lo[2]
    sizes = {n.id: [mx - mn for mn, mx in zip(n.aabb.min, n.aabb.max)] for n in (a, b)}
    volume = {k: s[0] * s[1] * s[2] for k, s in sizes.items()}
    footprint = {k: s[0] * s[1] for k, s in sizes.items()}
    center_z = {n.id: (n.aabb.min[2] + n.aabb.max[2]) / 2 for n in (a, b)}
    by_id = {a.id: a, b.id: b}

    small, large = sorted((a.id, b.id), key=lambda k: (volume[k], k))
    if inter_volume / volume[small] > config.inside_threshold:
        return RelationEdge(small, Predicate.INSIDE, large)

    lower, upper = sorted((a.id, b.id), key=lambda k: (center_z[k], k))
    gap = by_id[upper].aabb.min[2] - by_id[lower].aabb.max[2]
    smaller_footprint = min(footprint.values())
    if (
        -config.contact_tolerance <= gap <= config.contact_tolerance
        and smaller_footprint > 0
        and inter_area / smaller_footprint >= config.overlap_threshold
    ):
        return RelationEdge(upper, Predicate.ONTOP, lower)

    ca, cb = a.aabb.center, b.aabb.center
    distance = float(np.hypot(ca[0] - cb[0], ca[1] - cb[1]))
    if z_overlap > 0 and distance <= config.beside_distance:
        first, second = sorted((a.id, b.id))
        return RelationEdge(first, Predicate.BESIDE, second)
    return None


def extract_relations(
    objects: Iterable[ObjectNode],
    robot: RobotState | None = None,
    config: ExtractionConfig = DEFAULT_EXTRACTION,
) -> SceneGraph:
    """Build a canonical scene graph from object geometry and the gripper reading."""
    robot = robot or RobotState(gripper_threshold=config.gripper_threshold)
    nodes: dict[str, ObjectNode] = {}
    for node in objects:
        if node.id in nodes:
            raise DuplicateNode(f"duplicate node id {node.id!r}")
        nodes[node.id] = node
    ids = sorted(nodes)
    if not ids:
        if robot.held_object is not None:
            raise UnknownNode(robot.held_object)
        return SceneGraph(robot=robot)

    mins = np.array([nodes[i].aabb.min for i in ids], dtype=float)
    maxs = np.array([nodes[i].aabb.max for i in ids], dtype=float)
    sizes = maxs - mins
    volume = sizes[:, 0] * sizes[:, 1] * sizes[:, 2]
    degenerate = np.flatnonzero(volume <= 0)
    if degenerate.size:
        raise DegenerateGeometry(f"zero-volume box on {ids[int(degenerate[0])]}")
    footprint = sizes[:, 0] * sizes[:, 1]

    lo = np.maximum(mins[:, None, :], mins[None, :, :])
    hi = np.minimum(maxs[:, None, :], maxs[None, :, :])
    overlap = np.clip(hi - lo, 0.0, None)
    inter_volume = overlap[..., 0] * overlap[..., 1] * overlap[..., 2]
    inter_area = overlap[..., 0] * overlap[..., 1]
    z_overlap = hi[..., 2] - lo[..., 2]
    centers = np.array([nodes[i].aabb.center for i in ids], dtype=float)
    center_z = (mins[:, 2] + maxs[:, 2]) / 2
    distance = np.hypot(
        centers[:, None, 0] - centers[None, :, 0],
        centers[:, None, 1] - centers[None, :, 1],
    )

    edges: set[RelationEdge] = set()
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            small, large = sorted((i, j), key=lambda k: (volume[k], ids[k]))
            if inter_volume[i, j] / volume[small] > config.inside_threshold:
                edges.add(RelationEdge(ids[small], Predicate.INSIDE, ids[large]))
                continue
            lower, upper = sorted((i, j), key=lambda k: (center_z[k], ids[k]))
            gap = mins[upper, 2] - maxs[lower, 2]
            smaller_footprint = min(footprint[i], footprint[j])
            if (
                -config.contact_tolerance <= gap <= config.contact_tolerance
                and smaller_footprint > 0
                and inter_area[i, j] / smaller_footprint >= config.overlap_threshold
            ):
                edges.add(RelationEdge(ids[upper], Predicate.ONTOP, ids[lower]))
                continue
            if z_overlap[i, j] > 0 and distance[i, j] <= config.beside_distance:
                edges.add(RelationEdge(ids[i], Predicate.BESIDE, ids[j]))

    for node_id in ids:
        node = nodes[node_id]
        if node.articulation is None:
            continue
        state = UnaryState.OPEN if node.articulation.is_open else UnaryState.CLOSED
        states = (set(node.states) - {UnaryState.OPEN, UnaryState.CLOSED}) | {state}
        nodes[node_id] = node.replace(states=frozenset(states))

    held = None
    if robot.held_object is not None and robot.gripper_value > robot.gripper_threshold:
        if robot.held_object not in nodes:
            raise UnknownNode(robot.held_object)
        held = robot.held_object
        edges.add(RelationEdge(ROBOT, Predicate.HOLDING, held))
    logger.debug(f"extracted {len(edges)} edges over {len(ids)} objects")
    return SceneGraph(
        nodes={i: nodes[i] for i in ids},
        edges=frozenset(edges),
        robot=RobotState(
            gripper_value=robot.gripper_value,
            gripper_threshold=robot.gripper_threshold,
            held_object=held,
        ),
    )
