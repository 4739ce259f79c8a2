"""Edge deltas between consecutive scene graphs."""

from dataclasses import dataclass
from typing import Any

from ..errors import DeltaMismatch, SchemaError, UnknownNode
from .base import (
    ROBOT,
    Fact,
    Predicate,
    RelationEdge,
    RobotState,
    SceneGraph,
    StateFact,
)


@dataclass(frozen=True, kw_only=True)
class EdgeDelta:
    added: frozenset[Fact] = frozenset()
    removed: frozenset[Fact] = frozenset()

    def __post_init__(self):
        overlap = self.added & self.removed
        if overlap:
            raise DeltaMismatch(f"facts both added and removed: {sorted(map(str, overlap))}")

    def __bool__(self):
        return bool(self.added or self.removed)

    def to_document(self) -> dict[str, Any]:
        return {"added": _fact_documents(self.added), "removed": _fact_documents(self.removed)}

    @classmethod
    def from_document(cls, doc: dict[str, Any]) -> "EdgeDelta":
        try:
            return cls(added=_facts_from(doc["added"]), removed=_facts_from(doc["removed"]))
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed edge delta: {exc}") from exc


def _fact_documents(facts) -> list[dict[str, Any]]:
    docs = []
    for fact in facts:
        if isinstance(fact, StateFact):
            docs.append({"subject": fact.node, "predicate": str(fact.state), "object": None})
        else:
            docs.append({"subject": fact.subject, "predicate": str(fact.predicate), "object": fact.object})
    return sorted(docs, key=lambda d: (d["subject"], d["predicate"], d["object"] or ""))


def _facts_from(docs) -> frozenset[Fact]:
    facts: set[Fact] = set()
    for doc in docs:
        if doc["object"] is None:
            facts.add(StateFact(doc["subject"], doc["predicate"]))
        else:
            facts.add(RelationEdge(doc["subject"], doc["predicate"], doc["object"]))
    return frozenset(facts)


def diff(before: SceneGraph, after: SceneGraph) -> EdgeDelta:
    old, new = before.facts(), after.facts()
    return EdgeDelta(added=new - old, removed=old - new)


def apply_delta(sg: SceneGraph, delta: EdgeDelta) -> SceneGraph:
    """Apply ``delta`` to the relational content of ``sg``.

    Geometry is not part of a delta, so the result matches the graph the delta came
    from under :meth:`SceneGraph.same_facts`. The gripper follows the holding edge.
    """
    facts = sg.facts()
    missing = delta.removed - facts
    if missing:
        raise DeltaMismatch(f"delta removes absent facts: {sorted(map(str, missing))}")
    for fact in delta.added:
        endpoints = (fact.node,) if isinstance(fact, StateFact) else (fact.subject, fact.object)
        for endpoint in endpoints:
            if endpoint == ROBOT and isinstance(fact, RelationEdge) and fact.predicate == Predicate.HOLDING:
                continue
            if endpoint not in sg.nodes:
                raise UnknownNode(endpoint)

    edges = (sg.edges - delta.removed) | {f for f in delta.added if isinstance(f, RelationEdge)}
    states: dict[str, set[str]] = {node_id: set(node.states) for node_id, node in sg.nodes.items()}
    for fact in delta.removed:
        if isinstance(fact, StateFact):
            states[fact.node].discard(fact.state)
    for fact in delta.added:
        if isinstance(fact, StateFact):
            states[fact.node].add(fact.state)

    holding = sorted(e.object for e in edges if e.predicate == Predicate.HOLDING)
    held = holding[0] if holding else None
    gripper = sg.robot.gripper_value
    if (held is None) != (sg.robot.held_object is None):
        gripper = 1.0 if held else 0.0
    return SceneGraph(
        nodes={
            node_id: node.replace(states=frozenset(states[node_id]))
            for node_id, node in sg.nodes.items()
        },
        edges=frozenset(edges),
        robot=RobotState(
            gripper_value=gripper,
            gripper_threshold=sg.robot.gripper_threshold,
            held_object=held,
        ),
    )
