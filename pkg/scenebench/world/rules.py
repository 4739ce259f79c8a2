"""Symbolic preconditions and effects over relational facts.

The engine and the oracle planner share these rules. They see only the facts
(ontop, inside and holding edges plus unary states) and the static layout of the
scene; geometry is the engine's concern.
"""

from dataclasses import dataclass
from typing import Mapping

from ..graph.base import (
    OPPOSITE_STATE,
    ROBOT,
    Predicate,
    RelationEdge,
    SceneGraph,
    StateFact,
    UnaryState,
    Vec3,
)
from ..graph.geometry import fits_inside, slot_capacity
from .base import ActionCommand, Verb

FIXED_CATEGORIES = frozenset({"table", "cabinet", "drawer"})
CONTAINER_CATEGORIES = frozenset({"box", "drawer", "bowl", "bin", "basket"})
SURFACE_CATEGORIES = frozenset({"table"})


@dataclass(frozen=True, kw_only=True)
class NodeInfo:
    id: str
    category: str
    size: Vec3
    articulated: bool = False
    switchable: bool = False
    cabinet: str | None = None
    level: float = 0.0

    @property
    def fixed(self) -> bool:
        return self.category in FIXED_CATEGORIES

    @property
    def container(self) -> bool:
        return self.category in CONTAINER_CATEGORIES

    @property
    def drawer(self) -> bool:
        return self.category == "drawer"

    @property
    def lidded(self) -> bool:
        return self.articulated and self.container and not self.drawer


@dataclass(frozen=True, kw_only=True)
class Layout:
    """Static facts about a scene that no action changes."""

    nodes: Mapping[str, NodeInfo]

    @classmethod
    def from_graph(cls, sg: SceneGraph) -> "Layout":
        parents = {child: node.id for node in sg.nodes.values() for child in node.children}
        infos = {}
        for node in sg.nodes.values():
            infos[node.id] = NodeInfo(
                id=node.id,
                category=node.category,
                size=node.aabb.size,
                articulated=node.articulation is not None,
                switchable=bool({UnaryState.ON, UnaryState.OFF} & set(node.states)),
                cabinet=parents.get(node.id),
                level=node.aabb.min[2],
            )
        return cls(nodes=infos)

    def __contains__(self, node_id: str) -> bool:
        return node_id in self.nodes

    def drawers_above(self, drawer: str) -> list[str]:
        info = self.nodes[drawer]
        if not info.drawer or info.cabinet is None:
            return []
        return sorted(
            other.id
            for other in self.nodes.values()
            if other.drawer and other.cabinet == info.cabinet and other.level > info.level
        )

    def siblings(self, drawer: str) -> list[str]:
        info = self.nodes[drawer]
        if info.cabinet is None:
            return []
        return sorted(o.id for o in self.nodes.values() if o.drawer and o.cabinet == info.cabinet)


@dataclass(frozen=True, kw_only=True)
class Facts:
    """Hashable symbolic state: ontop, inside, holding edges and unary states."""

    edges: frozenset[RelationEdge]
    states: frozenset[StateFact]

    @classmethod
    def from_graph(cls, sg: SceneGraph) -> "Facts":
        return cls(
            edges=frozenset(e for e in sg.edges if e.predicate != Predicate.BESIDE),
            states=sg.state_facts,
        )

    @property
    def held(self) -> str | None:
        for edge in self.edges:
            if edge.predicate == Predicate.HOLDING:
                return edge.object
        return None

    def has(self, node: str, state: str) -> bool:
        return StateFact(node, state) in self.states

    def supported(self, node: str) -> list[RelationEdge]:
        """Edges with ``node`` on top of or inside something."""
        return sorted(
            e for e in self.edges if e.subject == node and e.predicate in (Predicate.ONTOP, Predicate.INSIDE)
        )

    def on_top_of(self, node: str) -> list[str]:
        return sorted(e.subject for e in self.edges if e.object == node and e.predicate == Predicate.ONTOP)

    def contents(self, node: str) -> list[str]:
        return sorted(e.subject for e in self.edges if e.object == node and e.predicate == Predicate.INSIDE)


def resolve_target(command: ActionCommand, children: Mapping[str, tuple[str, ...]]) -> str | None:
    """Target a dotted qualifier names when it is a child node, else the base target."""
    if command.qualifier and command.qualifier in children.get(command.target or "", ()):
        return command.qualifier
    return command.target


def check(facts: Facts, layout: Layout, verb: Verb, target: str | None) -> str | None:
    """Reason the action is blocked, or None when it is feasible."""
    if verb == Verb.END:
        return None
    info = layout.nodes[target]
    held = facts.held

    if verb == Verb.PICK:
        if info.fixed:
            return f"{target} is fixed in place"
        if held is not None:
            return f"gripper already holds {held}"
        for edge in facts.supported(target):
            if edge.predicate == Predicate.INSIDE and facts.has(edge.object, UnaryState.CLOSED):
                return "inside closed container"
        blockers = facts.on_top_of(target)
        if blockers:
            return f"occluded by {blockers[0]}"
        contents = facts.contents(target)
        if contents:
            return f"{target} still contains {contents[0]}"
        return None

    if verb in (Verb.PLACE_ON, Verb.PLACE_INSIDE):
        if held is None:
            return "gripper is empty"
        if held == target:
            return f"cannot place {held} relative to itself"
        for edge in facts.supported(target):
            if edge.predicate == Predicate.INSIDE:
                return f"{target} is inside {edge.object}"
        blockers = facts.on_top_of(target)
        if verb == Verb.PLACE_ON:
            if info.drawer:
                return f"{target} is a drawer; place inside it"
            if blockers and info.category not in SURFACE_CATEGORIES:
                return f"{target} is occupied by {blockers[0]}"
            return None
        if not info.container:
            return f"{target} is not a container"
        if facts.has(target, UnaryState.CLOSED):
            return f"{target} is closed"
        for above in layout.drawers_above(target):
            if facts.has(above, UnaryState.OPEN):
                return f"blocked by open {above}"
        if blockers:
            return f"{target} is covered by {blockers[0]}"
        held_info = layout.nodes[held]
        if not fits_inside(held_info.size, info.size):
            return f"{held} does not fit inside {target}"
        if len(facts.contents(target)) >= slot_capacity(info.size):
            return f"{target} is full"
        return None

    if verb in (Verb.OPEN, Verb.CLOSE, Verb.PUSH):
        if not info.articulated:
            return f"{target} does not open or close"
        if verb == Verb.PUSH and not info.drawer:
            return f"{target} is not a drawer"
        want = UnaryState.OPEN if verb == Verb.OPEN else UnaryState.CLOSED
        if facts.has(target, want):
            return f"{target} is already {want}"
        for above in layout.drawers_above(target):
            if facts.has(above, UnaryState.OPEN):
                return f"blocked by open {above}"
        if info.lidded:
            blockers = facts.on_top_of(target)
            if blockers:
                return f"lid of {target} is covered by {blockers[0]}"
        return None

    if verb in (Verb.TURN_ON, Verb.TURN_OFF):
        if not info.switchable:
            return f"{target} cannot be switched"
        want = UnaryState.ON if verb == Verb.TURN_ON else UnaryState.OFF
        if facts.has(target, want):
            return f"{target} is already {want}"
        return None

    return f"unsupported verb {verb}"


def apply(facts: Facts, verb: Verb, target: str | None) -> Facts:
    """Symbolic effect of a feasible action."""
    edges, states = set(facts.edges), set(facts.states)
    held = facts.held
    if verb == Verb.PICK:
        edges = {e for e in edges if e.subject != target}
        edges.add(RelationEdge(ROBOT, Predicate.HOLDING, target))
    elif verb in (Verb.PLACE_ON, Verb.PLACE_INSIDE):
        edges.discard(RelationEdge(ROBOT, Predicate.HOLDING, held))
        predicate = Predicate.ONTOP if verb == Verb.PLACE_ON else Predicate.INSIDE
        edges.add(RelationEdge(held, predicate, target))
    elif verb in (Verb.OPEN, Verb.CLOSE, Verb.PUSH, Verb.TURN_ON, Verb.TURN_OFF):
        new = {
            Verb.OPEN: UnaryState.OPEN,
            Verb.CLOSE: UnaryState.CLOSED,
            Verb.PUSH: UnaryState.CLOSED,
            Verb.TURN_ON: UnaryState.ON,
            Verb.TURN_OFF: UnaryState.OFF,
        }[verb]
        states.discard(StateFact(target, OPPOSITE_STATE[new]))
        states.add(StateFact(target, new))
    return Facts(edges=frozenset(edges), states=frozenset(states))
