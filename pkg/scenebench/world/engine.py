"""Action execution over scene graphs.

Motion is abstracted away: an action succeeds unless a symbolic blocker exists or
no collision-free placement is left. Geometry is kept consistent with the edges so
that re-extracting relations after any transition reproduces the symbolic update.
"""

import logging
from typing import Iterable, Mapping

from ..errors import IllegalTransition, UnknownNode
from ..graph.base import (
    ROBOT,
    Aabb,
    Articulation,
    ObjectNode,
    Predicate,
    RelationEdge,
    RobotState,
    SceneGraph,
)
from ..graph.extract import DEFAULT_EXTRACTION, ExtractionConfig, extract_relations, relate_pair
from ..graph.geometry import (
    container_slots,
    free_spots,
    in_slot,
    parked,
    reserved_zones,
    resting_on,
    volumes_overlap,
)
from . import rules
from .base import OK, ActionCommand, ExecutionResult, Feasibility, GoalSpec, Verb, Verdict, VerdictKind
from .rules import SURFACE_CATEGORIES, Facts, Layout
from .scripts import SCRIPTS_BY_VERB

logger = logging.getLogger(__name__)

OPEN_MARGIN = 0.25


def resolve(sg: SceneGraph, command: ActionCommand) -> str | None:
    """Node a command acts on; dotted child qualifiers select the child."""
    if command.verb == Verb.END:
        return None
    if command.target not in sg.nodes:
        raise UnknownNode(command.target)
    children = {node_id: node.children for node_id, node in sg.nodes.items()}
    return rules.resolve_target(command, children)


def _others(nodes: Mapping[str, ObjectNode], *skip: str) -> list[ObjectNode]:
    return [node for node_id, node in sorted(nodes.items()) if node_id not in skip]


def _contacts(candidate: ObjectNode, others: Iterable[ObjectNode], config: ExtractionConfig) -> set[RelationEdge]:
    contacts = set()
    for other in others:
        edge = relate_pair(candidate, other, config)
        if edge is not None and edge.predicate != Predicate.BESIDE:
            contacts.add(edge)
    return contacts


def placement(sg: SceneGraph, verb: Verb, target: str, config: ExtractionConfig = DEFAULT_EXTRACTION) -> Aabb | None:
    """Box for the held object that yields exactly the intended relation, if any."""
    held = sg.nodes[sg.robot.held_object]
    surface = sg.nodes[target]
    size = held.aabb.size
    others = _others(sg.nodes, held.id)
    predicate = Predicate.ONTOP if verb == Verb.PLACE_ON else Predicate.INSIDE
    intended = {RelationEdge(held.id, predicate, target)}

    if verb == Verb.PLACE_INSIDE:
        candidates = (in_slot(surface.aabb, slot, size) for slot in container_slots(surface.aabb))
        candidates = (
            aabb
            for aabb in candidates
            if not any(volumes_overlap(aabb, other.aabb) for other in others if other.id != target)
        )
    elif surface.category in SURFACE_CATEGORIES:
        obstacles = [o.aabb for o in others if o.id != target] + reserved_zones(others)
        candidates = free_spots(surface.aabb, size, obstacles)
    else:
        candidates = iter([resting_on(surface.aabb, surface.aabb.center[:2], size)])

    for aabb in candidates:
        if _contacts(held.moved(aabb), others, config) == intended:
            return aabb
    return None


def preconditions(sg: SceneGraph, command: ActionCommand, config: ExtractionConfig = DEFAULT_EXTRACTION) -> Feasibility:
    """Whether ``command`` can run on ``sg``; unknown targets raise UnknownNode."""
    target = resolve(sg, command)
    reason = rules.check(Facts.from_graph(sg), Layout.from_graph(sg), command.verb, target)
    if reason is not None:
        return Feasibility.blocked(reason)
    if command.verb in (Verb.PLACE_ON, Verb.PLACE_INSIDE) and placement(sg, command.verb, target, config) is None:
        return Feasibility.blocked(f"no free spot on {target}")
    return OK


def _set_joint(node: ObjectNode, open_: bool) -> ObjectNode:
    art = node.articulation
    value = min(art.joint_max, art.open_threshold + OPEN_MARGIN) if open_ else art.joint_min
    return node.replace(
        articulation=Articulation(
            joint_value=round(value, 6),
            joint_min=art.joint_min,
            joint_max=art.joint_max,
            open_threshold=art.open_threshold,
        )
    )


def transition(sg: SceneGraph, command: ActionCommand, config: ExtractionConfig = DEFAULT_EXTRACTION) -> SceneGraph:
    """Apply ``command`` to ``sg``; raises IllegalTransition when it is blocked."""
    feasibility = preconditions(sg, command, config)
    if not feasibility:
        raise IllegalTransition(feasibility.reason)
    if command.verb == Verb.END:
        return sg

    target = resolve(sg, command)
    facts = rules.apply(Facts.from_graph(sg), command.verb, target)
    nodes = dict(sg.nodes)
    robot = sg.robot
    moved: set[str] = set()

    if command.verb == Verb.PICK:
        node = nodes[target]
        nodes[target] = node.moved(parked(node.aabb.size))
        robot = RobotState(gripper_value=1.0, gripper_threshold=robot.gripper_threshold, held_object=target)
        moved.add(target)
    elif command.verb in (Verb.PLACE_ON, Verb.PLACE_INSIDE):
        held = robot.held_object
        nodes[held] = nodes[held].moved(placement(sg, command.verb, target, config))
        robot = RobotState(gripper_value=0.0, gripper_threshold=robot.gripper_threshold, held_object=None)
        moved.add(held)
    elif command.verb in (Verb.OPEN, Verb.CLOSE, Verb.PUSH):
        before = nodes[target]
        after = _set_joint(before, command.verb == Verb.OPEN)
        nodes[target] = after
        if before.category == "drawer":
            # drawers slide toward the robot, carrying their contents
            dy = -(after.articulation.joint_value - before.articulation.joint_value)
            for node_id in [target] + [e.subject for e in sg.relations(predicate=Predicate.INSIDE, object=target)]:
                nodes[node_id] = nodes[node_id].moved(nodes[node_id].aabb.translated(dy=dy))
                moved.add(node_id)

    states: dict[str, set[str]] = {node_id: set() for node_id in nodes}
    for fact in facts.states:
        states[fact.node].add(fact.state)
    nodes = {node_id: node.replace(states=frozenset(states[node_id])) for node_id, node in nodes.items()}

    beside = {
        e
        for e in sg.edges
        if e.predicate == Predicate.BESIDE and e.subject not in moved and e.object not in moved
    }
    for node_id in sorted(moved):
        for other in _others(nodes, node_id):
            edge = relate_pair(nodes[node_id], other, config)
            if edge is not None and edge.predicate == Predicate.BESIDE:
                beside.add(edge)

    result = SceneGraph(nodes=nodes, edges=facts.edges | frozenset(beside), robot=robot)
    logger.debug(f"{command} -> {len(result.edges)} edges")
    return result


def execute(sg: SceneGraph, command: ActionCommand, config: ExtractionConfig = DEFAULT_EXTRACTION) -> ExecutionResult:
    """Run the command's waypoint script with per-stage verification.

    Unknown targets fail with an empty log. A blocked command fails with a single
    stage-0 verdict and the graph unchanged. The first failing stage aborts.
    """
    if command.verb != Verb.END and command.target not in sg.nodes:
        logger.debug(f"{command}: unknown target")
        return ExecutionResult(success=False, graph=sg)
    target = resolve(sg, command)
    feasibility = preconditions(sg, command, config)
    if not feasibility:
        return ExecutionResult(
            success=False,
            graph=sg,
            log=(Verdict(stage=0, kind=VerdictKind.BLOCKED, message=feasibility.reason),),
        )

    held = sg.robot.held_object
    graph = sg
    log: list[Verdict] = []
    for index, stage in enumerate(SCRIPTS_BY_VERB[command.verb].stages, start=1):
        if stage.applies_effect:
            graph = transition(graph, command, config)
        failure = stage.verify(graph, target, held)
        verdict = Verdict(
            stage=index,
            kind=VerdictKind.PASS if failure is None else VerdictKind.FAIL,
            message=failure or stage.name,
        )
        log.append(verdict)
        if not verdict:
            logger.info(f"{command} failed at {stage.name}: {failure}")
            return ExecutionResult(success=False, graph=graph, log=tuple(log))
    return ExecutionResult(success=True, graph=graph, log=tuple(log))


def _check_known(sg: SceneGraph, node_ids: Iterable[str]):
    for node_id in node_ids:
        if node_id != ROBOT and node_id not in sg.nodes:
            raise UnknownNode(node_id)


def satisfied(sg: SceneGraph, goal: GoalSpec) -> bool:
    """True when every goal fact and quantified clause holds in ``sg``."""
    for fact in goal.facts:
        _check_known(sg, (fact.node,) if hasattr(fact, "node") else (fact.subject, fact.object))
    _check_known(sg, (clause.object for clause in goal.clauses))
    return goal.atomic_facts(sg.nodes.values()) <= sg.facts()


def geometry_mismatch(sg: SceneGraph, config: ExtractionConfig = DEFAULT_EXTRACTION) -> frozenset[RelationEdge]:
    """Edges on which the symbolic graph and a fresh extraction from its geometry disagree."""
    extracted = extract_relations(sg.nodes.values(), sg.robot, config)
    return extracted.edges ^ sg.edges
