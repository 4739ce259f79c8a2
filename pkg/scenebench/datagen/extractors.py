"""
Training samples drawn from trajectories.

Every record carries a task ``prompt`` in its input; goal-conditioned modalities
also carry the instruction. Graphs are stored as canonical structured text.
"""

import logging
from dataclasses import dataclass, field
from .._compat import StrEnum
from typing import Any, Iterable

from ..errors import NoInstruction, SchemaError
from ..graph.base import Predicate, SceneGraph
from ..graph.codec import TextFormat, from_prompt_text, serialize, to_prompt_text
from ..graph.delta import diff
from ..graph.normalize import normalize
from ..world.grammar import format_command
from .trajectory import ENGINE_PROVENANCE, Trajectory

logger = logging.getLogger(__name__)

DEFAULT_HORIZONS = (1, 2, 3)


class Modality(StrEnum):
    GROUNDING = "grounding"
    WORLD_MODELING = "world_modeling"
    FORWARD_REASONING = "forward_reasoning"
    GOAL_PLANNING = "goal_planning"
    GOAL_INTERPRETATION = "goal_interpretation"


PLANNING_FAMILY = (Modality.WORLD_MODELING, Modality.FORWARD_REASONING, Modality.GOAL_PLANNING)

PROMPTS = {
    Modality.GROUNDING: "Convert the scene description into a scene graph.",
    Modality.WORLD_MODELING: "Predict how the scene graph changes when the action is executed.",
    Modality.FORWARD_REASONING: "List the actions that turn the first scene graph into the second.",
    Modality.GOAL_PLANNING: "Give the next action towards the instruction.",
    Modality.GOAL_INTERPRETATION: "Predict the scene graph once the instruction is fulfilled.",
}

# which input and output keys each modality carries
RECORD_KEYS = {
    Modality.GROUNDING: ({"prompt", "description"}, {"scene_graph"}),
    Modality.WORLD_MODELING: ({"prompt", "scene_graph", "action"}, {"delta"}),
    Modality.FORWARD_REASONING: ({"prompt", "scene_graph", "target_scene_graph"}, {"actions"}),
    Modality.GOAL_PLANNING: ({"prompt", "scene_graph", "instruction"}, {"action"}),
    Modality.GOAL_INTERPRETATION: ({"prompt", "scene_graph", "instruction"}, {"scene_graph"}),
}


@dataclass(frozen=True, kw_only=True)
class DataRecord:
    modality: Modality
    input: dict[str, Any]
    output: dict[str, Any]
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        inputs, outputs = RECORD_KEYS[self.modality]
        if set(self.input) != inputs or set(self.output) != outputs:
            raise SchemaError(
                f"{self.modality} record needs input {sorted(inputs)} and output {sorted(outputs)}, "
                f"got {sorted(self.input)} and {sorted(self.output)}"
            )

    @property
    def tags(self) -> list[str]:
        return list(self.meta.get("augmentation", []))

    def to_document(self) -> dict[str, Any]:
        return {"modality": str(self.modality), "input": self.input, "output": self.output, "meta": self.meta}

    @classmethod
    def from_document(cls, doc: dict[str, Any]) -> "DataRecord":
        try:
            return cls(
                modality=Modality(doc["modality"]),
                input=dict(doc["input"]),
                output=dict(doc["output"]),
                meta=dict(doc.get("meta") or {}),
            )
        except (KeyError, ValueError) as exc:
            raise SchemaError(f"malformed data record: {exc}") from exc


def _text(sg: SceneGraph) -> str:
    return serialize(sg, TextFormat.STRUCTURED)


def _meta(traj: Trajectory, step: int | None = None, **extra) -> dict[str, Any]:
    meta: dict[str, Any] = {"trajectory": traj.id}
    if step is not None:
        meta["step"] = step
    meta.update(extra)
    meta["augmentation"] = []
    return meta


def _require_instruction(traj: Trajectory):
    if not traj.instruction.strip():
        raise NoInstruction(f"trajectory {traj.id} has no instruction")


def world_modeling_samples(traj: Trajectory) -> list[DataRecord]:
    """One ``(SG_t, A_t) -> delta`` record per step.

    Imported trajectories are checked against the engine and inconsistent steps
    are left out with a warning.
    """
    flagged = set(traj.inconsistent_steps()) if traj.provenance != ENGINE_PROVENANCE else set()
    records = []
    for index, step in enumerate(traj.steps):
        if index in flagged:
            logger.warning(f"{traj.id} step {index}: recorded successor disagrees with the engine, not emitted")
            continue
        records.append(
            DataRecord(
                modality=Modality.WORLD_MODELING,
                input={
                    "prompt": PROMPTS[Modality.WORLD_MODELING],
                    "scene_graph": _text(step.graph),
                    "action": format_command(step.action),
                },
                output={"delta": diff(step.graph, traj.graph_after(index)).to_document()},
                meta=_meta(traj, index),
            )
        )
    return records


def horizons_for(traj: Trajectory, horizons: Iterable[int] = DEFAULT_HORIZONS, full: bool = True) -> list[int]:
    wanted = {n for n in horizons if n >= 1}
    if full:
        wanted.add(len(traj))
    return sorted(n for n in wanted if n <= len(traj))


def forward_reasoning_samples(
    traj: Trajectory, horizons: Iterable[int] = DEFAULT_HORIZONS, *, full: bool = True
) -> list[DataRecord]:
    """``(SG_t, SG_{t+n}) -> [A_t .. A_{t+n-1}]`` for every horizon that fits.

    With ``full`` the whole trajectory is one more horizon, which only fits at
    the first step.
    """
    records = []
    for n in horizons_for(traj, horizons, full):
        for t in range(len(traj) - n + 1):
            records.append(
                DataRecord(
                    modality=Modality.FORWARD_REASONING,
                    input={
                        "prompt": PROMPTS[Modality.FORWARD_REASONING],
                        "scene_graph": _text(traj.steps[t].graph),
                        "target_scene_graph": _text(traj.graph_after(t + n - 1)),
                    },
                    output={"actions": [format_command(s.action) for s in traj.steps[t : t + n]]},
                    meta=_meta(traj, t, horizon=n),
                )
            )
    return records


def goal_planning_samples(traj: Trajectory) -> list[DataRecord]:
    _require_instruction(traj)
    return [
        DataRecord(
            modality=Modality.GOAL_PLANNING,
            input={
                "prompt": PROMPTS[Modality.GOAL_PLANNING],
                "scene_graph": _text(step.graph),
                "instruction": traj.instruction,
            },
            output={"action": format_command(step.action)},
            meta=_meta(traj, index),
        )
        for index, step in enumerate(traj.steps)
    ]


def goal_interpretation_samples(traj: Trajectory) -> DataRecord:
    _require_instruction(traj)
    return DataRecord(
        modality=Modality.GOAL_INTERPRETATION,
        input={
            "prompt": PROMPTS[Modality.GOAL_INTERPRETATION],
            "scene_graph": _text(traj.steps[0].graph),
            "instruction": traj.instruction,
        },
        output={"scene_graph": _text(traj.final_graph)},
        meta=_meta(traj, 0),
    )


_SENTENCES = {
    Predicate.ONTOP: "{subject} is on top of {object}.",
    Predicate.INSIDE: "{subject} is inside {object}.",
    Predicate.BESIDE: "{subject} is next to {object}.",
    Predicate.HOLDING: "The robot is holding {object}.",
}


def describe(sg: SceneGraph) -> str:
    """Plain-language description holding the same facts as the relational graph."""
    sentences = []
    for node_id in sorted(sg.nodes):
        node = sg.nodes[node_id]
        sentences.append(f"There is {node_id}.")
        for key, value in sorted(node.attributes.items()):
            sentences.append(f"The {key} of {node_id} is {value}.")
        for state in sorted(node.states):
            sentences.append(f"{node_id} is {state}.")
    for edge in sorted(sg.edges):
        sentences.append(_SENTENCES[Predicate(edge.predicate)].format(subject=edge.subject, object=edge.object))
    return " ".join(sentences)


def relational(sg: SceneGraph) -> SceneGraph:
    """``sg`` without geometry: what a description can convey."""
    return normalize(from_prompt_text(to_prompt_text(sg), strict=False))


def grounding_samples(traj: Trajectory) -> list[DataRecord]:
    """Text to scene graph pairs, one per distinct graph along the trajectory."""
    graphs = [step.graph for step in traj.steps] + [traj.final_graph]
    records = []
    seen: set[str] = set()
    for index, sg in enumerate(graphs):
        target = _text(relational(sg))
        if target in seen:
            continue
        seen.add(target)
        records.append(
            DataRecord(
                modality=Modality.GROUNDING,
                input={"prompt": PROMPTS[Modality.GROUNDING], "description": describe(sg)},
                output={"scene_graph": target},
                meta=_meta(traj, index),
            )
        )
    return records


def extract_all(traj: Trajectory, horizons: Iterable[int] = DEFAULT_HORIZONS, *, full: bool = True) -> list[DataRecord]:
    records = grounding_samples(traj)
    records += world_modeling_samples(traj)
    records += forward_reasoning_samples(traj, horizons, full=full)
    if traj.instruction.strip():
        records += goal_planning_samples(traj)
        records.append(goal_interpretation_samples(traj))
    else:
        logger.warning(f"{traj.id} has no instruction; goal samples skipped")
    return records
