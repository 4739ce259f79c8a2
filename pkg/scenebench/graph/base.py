"""Scene graph value types.

A scene graph is a set of object nodes plus binary relation edges. Every type here
is immutable once built; operations return new values.
"""

import math
import re
from dataclasses import dataclass, field, replace
from .._compat import StrEnum
from typing import Any, Iterable, Mapping

from ..errors import DegenerateGeometry, SchemaError

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]

ROBOT = "robot"
NODE_ID_PATTERN = re.compile(r"^[a-z][a-z0-9_]*_\d{2}$")


class Predicate(StrEnum):
    ONTOP = "ontop"
    INSIDE = "inside"
    BESIDE = "beside"
    HOLDING = "holding"


SPATIAL_PREDICATES = (Predicate.ONTOP, Predicate.INSIDE, Predicate.BESIDE)


class UnaryState(StrEnum):
    OPEN = "open"
    CLOSED = "closed"
    ON = "on"
    OFF = "off"
    EMPTY = "empty"
    FULL = "full"
    FOLDED = "folded"
    UNFOLDED = "unfolded"


# mutually exclusive state families
STATE_PAIRS: tuple[tuple[UnaryState, UnaryState], ...] = (
    (UnaryState.OPEN, UnaryState.CLOSED),
    (UnaryState.ON, UnaryState.OFF),
    (UnaryState.EMPTY, UnaryState.FULL),
    (UnaryState.FOLDED, UnaryState.UNFOLDED),
)
OPPOSITE_STATE = {a: b for a, b in STATE_PAIRS} | {b: a for a, b in STATE_PAIRS}


def category_of(node_id: str) -> str:
    """Category prefix of an id, ``cup_01`` -> ``cup``."""
    stem, sep, index = node_id.rpartition("_")
    if sep and index.isdigit():
        return stem
    return node_id


@dataclass(frozen=True, kw_only=True)
class Pose:
    position: Vec3 = (0.0, 0.0, 0.0)
    orientation: Quat = (1.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        norm = math.sqrt(sum(c * c for c in self.orientation))
        if abs(norm - 1.0) > 1e-6:
            raise DegenerateGeometry(f"orientation {self.orientation} is not a unit quaternion")


@dataclass(frozen=True, kw_only=True)
class Aabb:
    min: Vec3
    max: Vec3

    def __post_init__(self):
        if any(lo > hi for lo, hi in zip(self.min, self.max)):
            raise DegenerateGeometry(f"box min {self.min} exceeds max {self.max}")

    @classmethod
    def from_center(cls, center: Vec3, size: Vec3) -> "Aabb":
        half = [s / 2 for s in size]
        return cls(
            min=tuple(round(c - h, 6) for c, h in zip(center, half)),
            max=tuple(round(c + h, 6) for c, h in zip(center, half)),
        )

    @property
    def size(self) -> Vec3:
        return tuple(round(hi - lo, 6) for lo, hi in zip(self.min, self.max))

    @property
    def center(self) -> Vec3:
        return tuple(round((lo + hi) / 2, 6) for lo, hi in zip(self.min, self.max))

    @property
    def volume(self) -> float:
        sx, sy, sz = self.size
        return sx * sy * sz

    def translated(self, dx: float = 0.0, dy: float = 0.0, dz: float = 0.0) -> "Aabb":
        offset = (dx, dy, dz)
        return Aabb(
            min=tuple(round(v + d, 6) for v, d in zip(self.min, offset)),
            max=tuple(round(v + d, 6) for v, d in zip(self.max, offset)),
        )


@dataclass(frozen=True, kw_only=True)
class Keypoint:
    name: str
    position: Vec3
    role: str = ""


@dataclass(frozen=True, kw_only=True)
class Articulation:
    joint_value: float
    joint_min: float = 0.0
    joint_max: float = 1.0
    open_threshold: float = 0.05

    def __post_init__(self):
        if not self.joint_min <= self.joint_value <= self.joint_max:
            raise DegenerateGeometry(
                f"joint {self.joint_value} outside [{self.joint_min}, {self.joint_max}]"
            )

    @property
    def is_open(self) -> bool:
        return self.joint_value > self.open_threshold


@dataclass(frozen=True, kw_only=True)
class ObjectNode:
    id: str
    category: str
    pose: Pose = field(default_factory=Pose)
    aabb: Aabb = field(default_factory=lambda: Aabb(min=(0.0, 0.0, 0.0), max=(0.0, 0.0, 0.0)))
    keypoints: tuple[Keypoint, ...] = ()
    children: tuple[str, ...] = ()
    articulation: Articulation | None = None
    states: frozenset[str] = frozenset()
    attributes: Mapping[str, str] = field(default_factory=dict)

    @classmethod
    def stub(cls, node_id: str) -> "ObjectNode":
        """A geometry-less node reconstructed from an id alone."""
        return cls(id=node_id, category=category_of(node_id))

    def replace(self, **kwargs) -> "ObjectNode":
        return replace(self, **kwargs)

    def moved(self, aabb: Aabb) -> "ObjectNode":
        """Relocate to ``aabb``, carrying pose and keypoints along."""
        shift = [new - old for new, old in zip(aabb.center, self.aabb.center)]
        keypoints = tuple(
            replace(kp, position=tuple(round(p + d, 6) for p, d in zip(kp.position, shift)))
            for kp in self.keypoints
        )
        return replace(self, aabb=aabb, pose=replace(self.pose, position=aabb.center), keypoints=keypoints)


@dataclass(frozen=True, order=True)
class RelationEdge:
    subject: str
    predicate: str
    object: str

    def __str__(self):
        return f"{self.subject} {self.predicate} {self.object}"


@dataclass(frozen=True, order=True)
class StateFact:
    node: str
    state: str

    def __str__(self):
        return f"{self.node} {self.state}"


Fact = RelationEdge | StateFact


@dataclass(frozen=True, kw_only=True)
class RobotState:
    gripper_value: float = 0.0
    gripper_threshold: float = 0.5
    held_object: str | None = None


@dataclass(frozen=True, kw_only=True)
class SceneGraph:
    """Object nodes, relation edges and the robot gripper.

    Construction does not validate, so graphs parsed from outside text may carry
    alias predicates until :func:`scenebench.graph.normalize` runs.
    """

    nodes: Mapping[str, ObjectNode] = field(default_factory=dict)
    edges: frozenset[RelationEdge] = frozenset()
    robot: RobotState = field(default_factory=RobotState)

    @classmethod
    def build(
        cls,
        nodes: Iterable[ObjectNode],
        edges: Iterable[RelationEdge] = (),
        robot: RobotState | None = None,
    ) -> "SceneGraph":
        return cls(
            nodes={node.id: node for node in nodes},
            edges=frozenset(edges),
            robot=robot or RobotState(),
        )

    def replace(self, **kwargs) -> "SceneGraph":
        return replace(self, **kwargs)

    def with_nodes(self, *nodes: ObjectNode) -> "SceneGraph":
        return replace(self, nodes={**self.nodes, **{node.id: node for node in nodes}})

    @property
    def state_facts(self) -> frozenset[StateFact]:
        return frozenset(
            StateFact(node.id, state) for node in self.nodes.values() for state in node.states
        )

    def facts(self) -> frozenset[Fact]:
        return self.edges | self.state_facts

    def relations(
        self,
        *,
        subject: str | None = None,
        predicate: str | None = None,
        object: str | None = None,
    ) -> list[RelationEdge]:
        return sorted(
            edge
            for edge in self.edges
            if (subject is None or edge.subject == subject)
            and (predicate is None or edge.predicate == predicate)
            and (object is None or edge.object == object)
        )

    def same_facts(self, other: "SceneGraph") -> bool:
        """Equal relational content; node geometry and gripper value are ignored."""
        return (
            self.nodes.keys() == other.nodes.keys()
            and self.facts() == other.facts()
            and self.robot.held_object == other.robot.held_object
        )


def invariant_problems(sg: SceneGraph) -> list[str]:
    """List every broken scene graph invariant, empty when the graph is sound."""
    problems: list[str] = []
    for node_id, node in sg.nodes.items():
        if node_id != node.id:
            problems.append(f"node keyed {node_id} has id {node.id}")
        if not NODE_ID_PATTERN.match(node.id):
            problems.append(f"node id {node.id} does not match <category>_<NN>")
        elif category_of(node.id) != node.category and not category_of(node.id).endswith(
            f"_{node.category}"
        ):
            problems.append(f"node id {node.id} does not name category {node.category}")
        if len({kp.name for kp in node.keypoints}) != len(node.keypoints):
            problems.append(f"node {node.id} repeats a keypoint name")
        for child in node.children:
            if child not in sg.nodes:
                problems.append(f"node {node.id} lists missing child {child}")
        for a, b in STATE_PAIRS:
            if a in node.states and b in node.states:
                problems.append(f"node {node.id} is both {a} and {b}")
        unknown = set(node.states) - set(UnaryState)
        if unknown:
            problems.append(f"node {node.id} carries unknown states {sorted(unknown)}")
    problems.extend(_child_cycles(sg))

    holding = [e for e in sg.edges if e.predicate == Predicate.HOLDING]
    for edge in sorted(sg.edges):
        if edge.predicate not in set(Predicate):
            problems.append(f"edge {edge} uses a non-canonical predicate")
        if edge.subject == edge.object:
            problems.append(f"edge {edge} relates a node to itself")
        if edge.subject not in sg.nodes and not (
            edge.predicate == Predicate.HOLDING and edge.subject == ROBOT
        ):
            problems.append(f"edge {edge} names missing subject")
        if edge.object not in sg.nodes:
            problems.append(f"edge {edge} names missing object")
        if edge.predicate == Predicate.BESIDE and edge.subject > edge.object:
            problems.append(f"beside edge {edge} is not stored subject-first")
    if len(holding) > 1:
        problems.append(f"gripper holds {len(holding)} objects")
    held = holding[0].object if len(holding) == 1 else None
    if held != sg.robot.held_object:
        problems.append(f"held object {sg.robot.held_object} disagrees with holding edge {held}")
    return problems


def _child_cycles(sg: SceneGraph) -> list[str]:
    visiting: set[str] = set()
    done: set[str] = set()
    problems: list[str] = []

    def visit(node_id: str):
        if node_id in done or node_id not in sg.nodes:
            return
        if node_id in visiting:
            problems.append(f"children of {node_id} form a cycle")
            return
        visiting.add(node_id)
        for child in sg.nodes[node_id].children:
            visit(child)
        visiting.discard(node_id)
        done.add(node_id)

    for node_id in sorted(sg.nodes):
        visit(node_id)
    return problems


def check_invariants(sg: SceneGraph) -> SceneGraph:
    problems = invariant_problems(sg)
    if problems:
        raise SchemaError("; ".join(problems))
    return sg


def attributes_of(raw: Any) -> dict[str, str]:
    return {str(k): str(v) for k, v in sorted(dict(raw or {}).items())}
