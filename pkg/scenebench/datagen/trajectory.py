"""Trajectories: scene graphs paired with the action taken in each."""

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

from ..errors import BenchError, SchemaError
from ..graph.base import SceneGraph
from ..graph.codec import from_document, to_document
from ..world.base import ActionCommand, Verb
from ..world.engine import transition
from ..world.grammar import format_command, parse_command

logger = logging.getLogger(__name__)

ENGINE_PROVENANCE = "engine"


@dataclass(frozen=True, kw_only=True)
class TrajectoryStep:
    graph: SceneGraph
    action: ActionCommand


@dataclass(frozen=True, kw_only=True)
class Trajectory:
    id: str
    instruction: str
    steps: tuple[TrajectoryStep, ...]
    final_graph: SceneGraph
    provenance: str = ENGINE_PROVENANCE

    def __post_init__(self):
        if not self.steps:
            raise SchemaError(f"trajectory {self.id} has no steps")

    def __len__(self):
        return len(self.steps)

    def replace(self, **kwargs) -> "Trajectory":
        return replace(self, **kwargs)

    def graph_after(self, index: int) -> SceneGraph:
        """The graph following step ``index``; the last step pairs with the final graph."""
        if index + 1 < len(self.steps):
            return self.steps[index + 1].graph
        return self.final_graph

    def inconsistent_steps(self) -> list[int]:
        """Steps whose recorded successor differs from replaying the action."""
        bad = []
        for index, step in enumerate(self.steps):
            try:
                replayed = transition(step.graph, step.action)
            except BenchError as exc:
                logger.debug(f"{self.id} step {index}: {exc.message}")
                bad.append(index)
                continue
            if not replayed.same_facts(self.graph_after(index)):
                bad.append(index)
        return bad

    @property
    def ends_with_end(self) -> bool:
        return self.steps[-1].action.verb == Verb.END

    def to_document(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "instruction": self.instruction,
            "steps": [{"scene_graph": to_document(s.graph), "action": format_command(s.action)} for s in self.steps],
            "final_scene_graph": to_document(self.final_graph),
            "provenance": self.provenance,
        }

    @classmethod
    def from_document(cls, doc: dict[str, Any]) -> "Trajectory":
        try:
            steps = tuple(
                TrajectoryStep(graph=from_document(s["scene_graph"], strict=False), action=parse_command(s["action"]))
                for s in doc["steps"]
            )
            return cls(
                id=str(doc["id"]),
                instruction=doc.get("instruction") or "",
                steps=steps,
                final_graph=from_document(doc["final_scene_graph"], strict=False),
                provenance=doc.get("provenance", "import"),
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed trajectory document: missing {exc}") from exc


def write_trajectories(path: str | Path, trajectories) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w") as f:
        for trajectory in trajectories:
            f.write(json.dumps(trajectory.to_document(), sort_keys=True, separators=(",", ":")) + "\n")
            count += 1
    logger.info(f"wrote {count} trajectories to {path}")
    return count


def read_trajectories(path: str | Path) -> list[Trajectory]:
    trajectories = []
    with Path(path).open() as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                trajectories.append(Trajectory.from_document(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{number}: not a JSON document ({exc.msg})") from exc
            except BenchError as exc:
                raise SchemaError(f"{path}:{number}: {exc.message}") from exc
    return trajectories
