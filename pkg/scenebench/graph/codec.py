"""Scene graph text formats.

``structured`` is a compact JSON document; ``prompt-text`` renders one sorted fact
per line (``cube_01 ontop table_01``) for language-model prompts.
"""

import json
import re
from .._compat import StrEnum
from typing import Any

import jsonschema

from ..errors import ParseError, SchemaError
from .base import (
    ROBOT,
    Aabb,
    Articulation,
    Keypoint,
    ObjectNode,
    Pose,
    Predicate,
    RelationEdge,
    RobotState,
    SceneGraph,
    UnaryState,
    attributes_of,
)


class TextFormat(StrEnum):
    STRUCTURED = "structured"
    PROMPT = "prompt-text"


_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}

SCENE_GRAPH_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["nodes", "edges"],
    "properties": {
        "nodes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "category"],
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "category": {"type": "string"},
                    "pose": {
                        "type": "object",
                        "properties": {
                            "position": _VEC3,
                            "orientation": {
                                "type": "array",
                                "items": {"type": "number"},
                                "minItems": 4,
                                "maxItems": 4,
                            },
                        },
                    },
                    "aabb": {
                        "type": "object",
                        "required": ["min", "max"],
                        "properties": {"min": _VEC3, "max": _VEC3},
                    },
                    "keypoints": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["name", "position"],
                            "properties": {
                                "name": {"type": "string"},
                                "position": _VEC3,
                                "role": {"type": "string"},
                            },
                        },
                    },
                    "children": {"type": "array", "items": {"type": "string"}},
                    "states": {"type": "array", "items": {"type": "string"}},
                    "attributes": {"type": "object"},
                    "articulation": {
                        "type": ["object", "null"],
                        "required": ["joint_value"],
                        "properties": {
                            "joint_value": {"type": "number"},
                            "joint_min": {"type": "number"},
                            "joint_max": {"type": "number"},
                            "open_threshold": {"type": "number"},
                        },
                    },
                },
            },
        },
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["subject", "predicate"],
                "properties": {
                    "subject": {"type": "string"},
                    "predicate": {"type": "string"},
                    "object": {"type": ["string", "null"]},
                },
            },
        },
        "robot": {
            "type": "object",
            "properties": {
                "gripper_value": {"type": "number"},
                "gripper_threshold": {"type": "number"},
                "held_object": {"type": ["string", "null"]},
            },
        },
    },
}

# canonical documents only carry canonical predicates and states
STRICT_PREDICATES = sorted(set(Predicate) | set(UnaryState))

_validator = jsonschema.Draft202012Validator(SCENE_GRAPH_SCHEMA)


def to_document(sg: SceneGraph) -> dict[str, Any]:
    nodes = []
    for node_id in sorted(sg.nodes):
        node = sg.nodes[node_id]
        doc: dict[str, Any] = {
            "id": node.id,
            "category": node.category,
            "pose": {"position": list(node.pose.position), "orientation": list(node.pose.orientation)},
            "aabb": {"min": list(node.aabb.min), "max": list(node.aabb.max)},
            "keypoints": [
                {"name": kp.name, "position": list(kp.position), "role": kp.role} for kp in node.keypoints
            ],
            "children": list(node.children),
            "states": sorted(str(s) for s in node.states),
            "attributes": attributes_of(node.attributes),
        }
        if node.articulation is not None:
            art = node.articulation
            doc["articulation"] = {
                "joint_value": art.joint_value,
                "joint_min": art.joint_min,
                "joint_max": art.joint_max,
                "open_threshold": art.open_threshold,
            }
        nodes.append(doc)

    edges = [
        {"subject": e.subject, "predicate": str(e.predicate), "object": e.object} for e in sg.edges
    ] + [
        {"subject": f.node, "predicate": str(f.state), "object": None} for f in sg.state_facts
    ]
    edges.sort(key=lambda d: (d["subject"], d["predicate"], d["object"] or ""))
    return {
        "nodes": nodes,
        "edges": edges,
        "robot": {
            "gripper_value": sg.robot.gripper_value,
            "gripper_threshold": sg.robot.gripper_threshold,
            "held_object": sg.robot.held_object,
        },
    }


def from_document(doc: Any, *, strict: bool = True) -> SceneGraph:
    errors = sorted(_validator.iter_errors(doc), key=lambda e: list(e.path))
    if errors:
        error = errors[0]
        where = "/".join(str(p) for p in error.path) or "<root>"
        raise SchemaError(f"scene graph schema violation at {where}: {error.message}")

    nodes: dict[str, ObjectNode] = {}
    for raw in doc["nodes"]:
        if raw["id"] in nodes:
            raise SchemaError(f"duplicate node id {raw['id']!r}")
        pose = raw.get("pose") or {}
        aabb = raw.get("aabb") or {"min": [0.0, 0.0, 0.0], "max": [0.0, 0.0, 0.0]}
        art = raw.get("articulation")
        nodes[raw["id"]] = ObjectNode(
            id=raw["id"],
            category=raw["category"],
            pose=Pose(
                position=tuple(pose.get("position", (0.0, 0.0, 0.0))),
                orientation=tuple(pose.get("orientation", (1.0, 0.0, 0.0, 0.0))),
            ),
            aabb=Aabb(min=tuple(aabb["min"]), max=tuple(aabb["max"])),
            keypoints=tuple(
                Keypoint(name=kp["name"], position=tuple(kp["position"]), role=kp.get("role", ""))
                for kp in raw.get("keypoints", [])
            ),
            children=tuple(raw.get("children", [])),
            articulation=None
            if art is None
            else Articulation(
                joint_value=art["joint_value"],
                joint_min=art.get("joint_min", 0.0),
                joint_max=art.get("joint_max", 1.0),
                open_threshold=art.get("open_threshold", 0.05),
            ),
            states=frozenset(_token(s, strict) for s in raw.get("states", [])),
            attributes=attributes_of(raw.get("attributes")),
        )

    edges: set[RelationEdge] = set()
    extra_states: dict[str, set[str]] = {}
    for raw in doc["edges"]:
        predicate = _token(raw["predicate"], strict)
        if raw.get("object") is None:
            extra_states.setdefault(raw["subject"], set()).add(predicate)
            continue
        edges.add(RelationEdge(raw["subject"], predicate, raw["object"]))
    for node_id, states in extra_states.items():
        if node_id not in nodes:
            nodes[node_id] = ObjectNode.stub(node_id)
        nodes[node_id] = nodes[node_id].replace(states=nodes[node_id].states | frozenset(states))

    robot = doc.get("robot") or {}
    return SceneGraph(
        nodes=nodes,
        edges=frozenset(edges),
        robot=RobotState(
            gripper_value=robot.get("gripper_value", 0.0),
            gripper_threshold=robot.get("gripper_threshold", 0.5),
            held_object=robot.get("held_object"),
        ),
    )


def _token(value: str, strict: bool) -> str:
    if not strict:
        return value.strip().lower()
    if value in set(Predicate):
        return Predicate(value)
    if value in set(UnaryState):
        return UnaryState(value)
    raise SchemaError(f"non-canonical predicate {value!r}; expected one of {STRICT_PREDICATES}")


def to_prompt_text(sg: SceneGraph) -> str:
    lines = [str(edge) for edge in sg.edges]
    lines += [f"{fact.node} {fact.state}" for fact in sg.state_facts]
    for node in sg.nodes.values():
        lines += [f"{node.id} {key}={value}" for key, value in attributes_of(node.attributes).items()]
    mentioned = {token for line in lines for token in line.split()[:1]} | {
        edge.object for edge in sg.edges
    }
    lines += [node_id for node_id in sg.nodes if node_id not in mentioned]
    return "\n".join(sorted(lines))


_FACT_LINE = re.compile(r"^([A-Za-z][\w.]*)\s*\(?\s*([A-Za-z_]+)\s*\)?\s*([A-Za-z][\w.]*)$")


def from_prompt_text(text: str, *, strict: bool = True) -> SceneGraph:
    """Rebuild the relational content of a prompt-text rendering; geometry is lost."""
    nodes: dict[str, ObjectNode] = {}
    edges: set[RelationEdge] = set()
    states: dict[str, set[str]] = {}
    attributes: dict[str, dict[str, str]] = {}

    def touch(node_id: str):
        if node_id != ROBOT and node_id not in nodes:
            nodes[node_id] = ObjectNode.stub(node_id)

    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) == 1 and "(" not in line:
            touch(tokens[0])
        elif len(tokens) == 2 and "=" in tokens[1]:
            key, _, value = tokens[1].partition("=")
            touch(tokens[0])
            attributes.setdefault(tokens[0], {})[key] = value
        elif len(tokens) == 2 and "(" not in line:
            touch(tokens[0])
            states.setdefault(tokens[0], set()).add(_token(tokens[1], strict))
        elif match := _FACT_LINE.match(line):
            subject, predicate, obj = match.groups()
            predicate = _token(predicate, strict)
            touch(subject)
            touch(obj)
            edges.add(RelationEdge(subject, predicate, obj))
        else:
            raise ParseError(f"cannot read fact {line!r}", line=number, column=1)

    for node_id, values in states.items():
        nodes[node_id] = nodes[node_id].replace(states=frozenset(values))
    for node_id, values in attributes.items():
        nodes[node_id] = nodes[node_id].replace(attributes=dict(sorted(values.items())))
    held = sorted(e.object for e in edges if e.subject == ROBOT and e.predicate == Predicate.HOLDING)
    return SceneGraph(
        nodes={node_id: nodes[node_id] for node_id in sorted(nodes)},
        edges=frozenset(edges),
        robot=RobotState(gripper_value=1.0 if held else 0.0, held_object=held[0] if held else None),
    )


def serialize(sg: SceneGraph, format: TextFormat | str = TextFormat.STRUCTURED) -> str:
    if TextFormat(format) == TextFormat.PROMPT:
        return to_prompt_text(sg)
    return json.dumps(to_document(sg), separators=(",", ":"))


def parse(text: str, *, strict: bool = True) -> SceneGraph:
    """Parse either text format; structured documents start with ``{``."""
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=exc.lineno, column=exc.colno) from exc
        return from_document(doc, strict=strict)
    return from_prompt_text(text, strict=strict)
