"""Offline grader for agent responses.

Three components score one response against a scene graph snapshot: a step
reward (exactly one atomic action, and a correct end), a grounding reward (every
named object exists) and a termination reward (end only once the goal holds).
The total is their weighted sum. Nothing is executed.
"""

import logging
from dataclasses import dataclass, field, replace
from ._compat import StrEnum
from typing import Any, Mapping

from .errors import SchemaError, UnknownNode
from .graph.base import SceneGraph
from .graph.codec import from_document, parse
from .graph.normalize import normalize
from .world.base import ActionCommand, GoalSpec, Verb
from .world.engine import satisfied
from .world.grammar import format_command, scan

logger = logging.getLogger(__name__)


class Diagnostic(StrEnum):
    MULTI_STEP = "multi_step"
    UNGROUNDED_OBJECT = "ungrounded_object"
    PREMATURE_END = "premature_end"
    MISSING_END = "missing_end"


@dataclass(frozen=True, kw_only=True)
class RewardWeights:
    step: float = 1.0
    grounding: float = 1.0
    termination: float = 1.0
    # penalty for answering with more than one action
    alpha: float = 0.5
    # penalty for ending before the goal holds
    beta: float = 1.0

    def __post_init__(self):
        for name in ("step", "grounding", "termination", "alpha", "beta"):
            if getattr(self, name) < 0:
                raise SchemaError(f"reward weight {name} must be non-negative")

    def replace(self, **kwargs) -> "RewardWeights":
        return replace(self, **kwargs)

    @classmethod
    def parse(cls, text: str, **kwargs) -> "RewardWeights":
        """``"1,1,1"`` as step, grounding and termination weights."""
        try:
            step, grounding, termination = (float(part) for part in text.split(","))
        except ValueError:
            raise SchemaError(f"expected three comma separated weights, got {text!r}") from None
        return cls(step=step, grounding=grounding, termination=termination, **kwargs)

    def to_document(self) -> dict[str, float]:
        return {
            "step": self.step,
            "grounding": self.grounding,
            "termination": self.termination,
            "alpha": self.alpha,
            "beta": self.beta,
        }


DEFAULT_WEIGHTS = RewardWeights()


@dataclass(frozen=True, kw_only=True)
class GradedResponse:
    text: str
    actions: tuple[ActionCommand, ...]
    r_s: float
    r_g: float
    r_t: float
    r_total: float
    diagnostics: tuple[Diagnostic, ...] = field(default_factory=tuple)

    @property
    def count(self) -> int:
        return len(self.actions)

    def to_document(self) -> dict[str, Any]:
        return {
            "r_s": self.r_s,
            "r_g": self.r_g,
            "r_t": self.r_t,
            "r_total": self.r_total,
            "N": self.count,
            "actions": [format_command(a) for a in self.actions],
            "diagnostics": [str(d) for d in self.diagnostics],
        }


def parse_actions(response: str) -> tuple[list[ActionCommand], int]:
    actions = scan(response)
    return actions, len(actions)


def _goal_holds(sg: SceneGraph, goal: GoalSpec) -> bool:
    try:
        return satisfied(sg, goal)
    except UnknownNode as exc:
        logger.debug(f"goal names {exc.node_id}, treating it as unsatisfied")
        return False


def reward_step(parsed: list[ActionCommand], sg: SceneGraph, goal: GoalSpec, weights: RewardWeights = DEFAULT_WEIGHTS) -> float:
    if len(parsed) > 1:
        return -weights.alpha
    if len(parsed) == 1 and parsed[0].verb == Verb.END and _goal_holds(sg, goal):
        return 1.0
    return 0.0


def reward_grounding(parsed: list[ActionCommand], sg: SceneGraph) -> float:
    # no action names nothing, which is not a grounded answer
    if not parsed:
        return 0.0
    return 1.0 if all(a.verb == Verb.END or a.target in sg.nodes for a in parsed) else 0.0


def reward_termination(
    parsed: list[ActionCommand], sg: SceneGraph, goal: GoalSpec, weights: RewardWeights = DEFAULT_WEIGHTS
) -> float:
    if not parsed or parsed[0].verb != Verb.END:
        return 0.0
    return 1.0 if _goal_holds(sg, goal) else -weights.beta


def grade(response: str, sg: SceneGraph, goal: GoalSpec, weights: RewardWeights = DEFAULT_WEIGHTS) -> GradedResponse:
    parsed, count = parse_actions(response)
    r_s = reward_step(parsed, sg, goal, weights)
    r_g = reward_grounding(parsed, sg)
    r_t = reward_termination(parsed, sg, goal, weights)

    diagnostics = []
    if count > 1:
        diagnostics.append(Diagnostic.MULTI_STEP)
    if count and not r_g:
        diagnostics.append(Diagnostic.UNGROUNDED_OBJECT)
    if r_t < 0:
        diagnostics.append(Diagnostic.PREMATURE_END)
    if (not parsed or parsed[0].verb != Verb.END) and _goal_holds(sg, goal):
        diagnostics.append(Diagnostic.MISSING_END)

    return GradedResponse(
        text=response,
        actions=tuple(parsed),
        r_s=r_s,
        r_g=r_g,
        r_t=r_t,
        r_total=weights.step * r_s + weights.grounding * r_g + weights.termination * r_t,
        diagnostics=tuple(diagnostics),
    )


def _graph_of(raw: Any) -> SceneGraph:
    if isinstance(raw, str):
        return normalize(parse(raw, strict=False))
    return from_document(raw)


def grade_record(record: Mapping[str, Any], weights: RewardWeights = DEFAULT_WEIGHTS) -> dict[str, Any]:
    """Grade one ``{response, scene_graph, goal, weights?}`` record, returning it with rewards appended."""
    try:
        sg = _graph_of(record["scene_graph"])
        goal = GoalSpec.from_document(record["goal"])
        response = record["response"]
    except KeyError as exc:
        raise SchemaError(f"record misses {exc}") from exc
    if record.get("weights"):
        overrides = record["weights"]
        if not isinstance(overrides, Mapping):
            raise SchemaError(f"weights must be an object, got {overrides!r}")
        unknown = sorted(set(overrides) - set(weights.to_document()))
        if unknown:
            raise SchemaError(f"unknown reward weights: {', '.join(map(str, unknown))}")
        weights = RewardWeights(**{**weights.to_document(), **overrides})
    return {**record, **grade(response, sg, goal, weights).to_document()}
