import random

import numpy as np
import pytest

from scenebench.bench.assets import random_scene
from scenebench.errors import DegenerateGeometry, DuplicateNode, UnknownNode
from scenebench.graph.base import (
    ROBOT,
    Aabb,
    Articulation,
    ObjectNode,
    Predicate,
    RelationEdge,
    RobotState,
    UnaryState,
    check_invariants,
)
from scenebench.graph.extract import DEFAULT_EXTRACTION, ExtractionConfig, extract_relations, relate_pair


def box(node_id: str, lo, hi, **kwargs) -> ObjectNode:
    return ObjectNode(id=node_id, category=node_id.rsplit("_", 1)[0], aabb=Aabb(min=lo, max=hi), **kwargs)


def test_resting_cube_is_ontop_of_box():
    sg = extract_relations(
        [
            box("cube_01", (0, 0, 0.10), (0.05, 0.05, 0.15)),
            box("box_01", (0, 0, 0), (0.2, 0.2, 0.10)),
        ]
    )
    assert sg.edges == {RelationEdge("cube_01", Predicate.ONTOP, "box_01")}


def test_enclosed_cube_is_inside_without_contains_edge():
    sg = extract_relations(
        [
            box("cube_01", (0.05, 0.05, 0.02), (0.10, 0.10, 0.07)),
            box("box_01", (0, 0, 0), (0.2, 0.2, 0.10)),
        ]
    )
    assert sg.edges == {RelationEdge("cube_01", Predicate.INSIDE, "box_01")}


def test_distant_objects_have_no_edges():
    sg = extract_relations(
        [
            box("cube_01", (0, 0, 0), (0.05, 0.05, 0.05)),
            box("cube_02", (5, 0, 0), (5.05, 0.05, 0.05)),
        ]
    )
    assert sg.edges == frozenset()


def test_neighbours_are_beside_with_smaller_id_first():
    sg = extract_relations(
        [
            box("mug_01", (0.1, 0, 0), (0.18, 0.08, 0.1)),
            box("cube_02", (0, 0, 0), (0.05, 0.05, 0.05)),
        ]
    )
    assert sg.edges == {RelationEdge("cube_02", Predicate.BESIDE, "mug_01")}


def test_stacked_boxes_chain():
    sg = extract_relations(
        [
            box("box_01", (0, 0, 0), (0.5, 0.5, 0.2)),
            box("box_02", (0, 0, 0.2), (0.5, 0.5, 0.4)),
            box("box_03", (0, 0, 0.4), (0.5, 0.5, 0.6)),
        ]
    )
    assert sg.relations(predicate=Predicate.ONTOP) == [
        RelationEdge("box_02", Predicate.ONTOP, "box_01"),
        RelationEdge("box_03", Predicate.ONTOP, "box_02"),
    ]


@pytest.mark.parametrize("joint, state", [(0.12, UnaryState.OPEN), (0.05, UnaryState.CLOSED), (0.0, UnaryState.CLOSED)])
def test_articulation_sets_open_state(joint, state):
    drawer = box(
        "drawer_01",
        (0, 0, 0),
        (0.5, 0.5, 0.2),
        articulation=Articulation(joint_value=joint, joint_max=0.3, open_threshold=0.05),
    )
    sg = extract_relations([drawer])
    assert sg.nodes["drawer_01"].states == {state}


def test_gripper_above_threshold_holds():
    cube = box("cube_01", (0, -3, 3), (0.05, -2.95, 3.05))
    held = extract_relations([cube], RobotState(gripper_value=0.9, held_object="cube_01"))
    assert RelationEdge(ROBOT, Predicate.HOLDING, "cube_01") in held.edges
    assert held.robot.held_object == "cube_01"

    loose = extract_relations([cube], RobotState(gripper_value=0.1, held_object="cube_01"))
    assert loose.edges == frozenset()
    assert loose.robot.held_object is None


def test_held_object_must_exist():
    with pytest.raises(UnknownNode):
        extract_relations([], RobotState(gripper_value=1.0, held_object="cube_01"))


def test_duplicate_ids_rejected():
    cube = box("cube_01", (0, 0, 0), (0.05, 0.05, 0.05))
    with pytest.raises(DuplicateNode):
        extract_relations([cube, cube])


def test_zero_volume_rejected():
    with pytest.raises(DegenerateGeometry):
        extract_relations([box("plate_01", (0, 0, 0), (0.1, 0.1, 0))])


def test_thresholds_are_configurable():
    nodes = [box("cube_01", (0, 0, 0), (0.05, 0.05, 0.05)), box("cube_02", (0.25, 0, 0), (0.3, 0.05, 0.05))]
    assert extract_relations(nodes).edges == frozenset()
    wide = ExtractionConfig(beside_distance=0.3)
    assert extract_relations(nodes, config=wide).edges == {RelationEdge("cube_01", Predicate.BESIDE, "cube_02")}


def brute_force(nodes: list[ObjectNode], config: ExtractionConfig = DEFAULT_EXTRACTION) -> set[RelationEdge]:
    """Plain re-evaluation of the inside / ontop / beside ladder, one pair at a time."""

    def size(n):
        return [hi - lo for lo, hi in zip(n.aabb.min, n.aabb.max)]

    def volume(n):
        s = size(n)
        return s[0] * s[1] * s[2]

    def overlap(a, b, axis):
        return max(0.0, min(a.aabb.max[axis], b.aabb.max[axis]) - max(a.aabb.min[axis], b.aabb.min[axis]))

    edges = set()
    for i, a in enumerate(nodes):
        for b in nodes[i + 1 :]:
            inter = overlap(a, b, 0) * overlap(a, b, 1) * overlap(a, b, 2)
            small, large = sorted((a, b), key=lambda n: (volume(n), n.id))
            if inter / volume(small) > config.inside_threshold:
                edges.add(RelationEdge(small.id, Predicate.INSIDE, large.id))
                continue
            lower, upper = sorted((a, b), key=lambda n: ((n.aabb.min[2] + n.aabb.max[2]) / 2, n.id))
            gap = upper.aabb.min[2] - lower.aabb.max[2]
            area = overlap(a, b, 0) * overlap(a, b, 1)
            footprint = min(size(a)[0] * size(a)[1], size(b)[0] * size(b)[1])
            if abs(gap) <= config.contact_tolerance and footprint > 0 and area / footprint >= config.overlap_threshold:
                edges.add(RelationEdge(upper.id, Predicate.ONTOP, lower.id))
                continue
            z_overlap = min(a.aabb.max[2], b.aabb.max[2]) - max(a.aabb.min[2], b.aabb.min[2])
            ca, cb = a.aabb.center, b.aabb.center
            if z_overlap > 0 and float(np.hypot(ca[0] - cb[0], ca[1] - cb[1])) <= config.beside_distance:
                first, second = sorted((a.id, b.id))
                edges.add(RelationEdge(first, Predicate.BESIDE, second))
    return edges


def _scenes(count: int):
    for seed in range(count):
        rng = random.Random(seed)
        yield random_scene(rng, rng.randint(2, 20))


def test_matches_brute_force_on_random_scenes():
    for nodes in _scenes(50):
        assert extract_relations(nodes).edges == brute_force(sorted(nodes, key=lambda n: n.id))


@pytest.mark.slow
def test_matches_brute_force_on_many_random_scenes():
    mismatches = 0
    for nodes in _scenes(1000):
        if extract_relations(nodes).edges != brute_force(sorted(nodes, key=lambda n: n.id)):
            mismatches += 1
    assert mismatches == 0


def test_relate_pair_agrees_with_extraction():
    for nodes in _scenes(20):
        sg = extract_relations(nodes)
        ordered = sorted(nodes, key=lambda n: n.id)
        pairwise = {
            edge
            for i, a in enumerate(ordered)
            for b in ordered[i + 1 :]
            if (edge := relate_pair(a, b)) is not None
        }
        assert pairwise == sg.edges


def test_extracted_graphs_are_canonical():
    for nodes in _scenes(100):
        sg = check_invariants(extract_relations(nodes))
        assert {e.predicate for e in sg.edges} <= set(Predicate)
