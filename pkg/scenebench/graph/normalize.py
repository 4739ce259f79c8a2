import logging

from ..errors import UnknownPredicate
from .base import (
    ROBOT,
    STATE_PAIRS,
    ObjectNode,
    Predicate,
    RelationEdge,
    RobotState,
    SceneGraph,
    UnaryState,
)

logger = logging.getLogger(__name__)

# alias -> (canonical predicate, reversed direction)
PREDICATE_ALIASES: dict[str, tuple[Predicate, bool]] = {
    "ontop": (Predicate.ONTOP, False),
    "on": (Predicate.ONTOP, False),
    "up": (Predicate.ONTOP, False),
    "stack": (Predicate.ONTOP, False),
    "under": (Predicate.ONTOP, True),
    "inside": (Predicate.INSIDE, False),
    "in": (Predicate.INSIDE, False),
    "contains": (Predicate.INSIDE, True),
    "beside": (Predicate.BESIDE, False),
    "next_to": (Predicate.BESIDE, False),
    "holding": (Predicate.HOLDING, False),
    "grasping": (Predicate.HOLDING, False),
}


def canonical_edge(edge: RelationEdge) -> RelationEdge:
    token = str(edge.predicate).strip().lower()
    if token not in PREDICATE_ALIASES:
        raise UnknownPredicate(token)
    predicate, flipped = PREDICATE_ALIASES[token]
    subject, obj = (edge.object, edge.subject) if flipped else (edge.subject, edge.object)
    if predicate == Predicate.BESIDE and subject > obj:
        subject, obj = obj, subject
    if predicate == Predicate.HOLDING:
        subject = ROBOT
    return RelationEdge(subject, predicate, obj)


def _canonical_states(node: ObjectNode) -> frozenset[str]:
    states = set()
    for token in node.states:
        token = str(token).strip().lower()
        try:
            states.add(UnaryState(token))
        except ValueError:
            raise UnknownPredicate(token) from None
    for a, b in STATE_PAIRS:
        if a in states and b in states:
            logger.warning(f"{node.id} is both {a} and {b}; dropping both")
            states -= {a, b}
    return frozenset(states)


def normalize(sg: SceneGraph) -> SceneGraph:
    """Rewrite a possibly inconsistent graph into canonical form.

    Alias predicates become canonical, bidirectional duplicates collapse, missing
    endpoints get stub nodes and the robot's held object follows the holding edge.
    """
    edges: set[RelationEdge] = set()
    for edge in sg.edges:
        canonical = canonical_edge(edge)
        if canonical.subject == canonical.object:
            logger.warning(f"dropping self relation {edge}")
            continue
        edges.add(canonical)

    holding = sorted(e for e in edges if e.predicate == Predicate.HOLDING)
    for extra in holding[1:]:
        logger.warning(f"gripper can hold one object, dropping {extra}")
        edges.discard(extra)
    held = holding[0].object if holding else None

    nodes = {node_id: node.replace(states=_canonical_states(node)) for node_id, node in sg.nodes.items()}
    for edge in sorted(edges):
        for endpoint in (edge.subject, edge.object):
            if endpoint == ROBOT and edge.predicate == Predicate.HOLDING:
                continue
            if endpoint not in nodes:
                logger.info(f"synthesizing node {endpoint} from edge {edge}")
                nodes[endpoint] = ObjectNode.stub(endpoint)
    for node_id, node in list(nodes.items()):
        children = tuple(c for c in node.children if c in nodes and c != node_id)
        if children != node.children:
            nodes[node_id] = node.replace(children=children)

    return SceneGraph(
        nodes={node_id: nodes[node_id] for node_id in sorted(nodes)},
        edges=frozenset(edges),
        robot=RobotState(
            gripper_value=sg.robot.gripper_value,
            gripper_threshold=sg.robot.gripper_threshold,
            held_object=held,
        ),
    )
