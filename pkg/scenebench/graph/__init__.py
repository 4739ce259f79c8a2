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
    StateFact,
    UnaryState,
    check_invariants,
    invariant_problems,
)
from .codec import TextFormat, parse, serialize
from .delta import EdgeDelta, apply_delta, diff
from .extract import DEFAULT_EXTRACTION, ExtractionConfig, extract_relations
from .normalize import normalize

__all__ = [
    "ROBOT",
    "Aabb",
    "Articulation",
    "DEFAULT_EXTRACTION",
    "EdgeDelta",
    "ExtractionConfig",
    "Keypoint",
    "ObjectNode",
    "Pose",
    "Predicate",
    "RelationEdge",
    "RobotState",
    "SceneGraph",
    "StateFact",
    "TextFormat",
    "UnaryState",
    "apply_delta",
    "check_invariants",
    "diff",
    "extract_relations",
    "invariant_problems",
    "normalize",
    "parse",
    "serialize",
]
