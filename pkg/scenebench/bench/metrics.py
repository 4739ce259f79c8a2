"""Task progress and per-cell aggregation of episode records."""

import statistics
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

from ..graph.base import ObjectNode, Predicate, RelationEdge, SceneGraph
from ..graph.delta import diff
from ..world.base import ActionCommand, GoalSpec, Verb
from ..world.engine import transition


def task_progress(final: SceneGraph, goal: GoalSpec, initial_nodes: Iterable[ObjectNode] | None = None) -> Fraction:
    """Satisfied atomic goal facts over all atomic goal facts.

    Quantified clauses expand over ``initial_nodes`` (the episode's starting
    scene), falling back to the final graph's nodes. A goal with no atomic facts
    counts as complete.
    """
    nodes = list(initial_nodes) if initial_nodes is not None else list(final.nodes.values())
    atoms = goal.atomic_facts(nodes)
    if not atoms:
        return Fraction(1)
    return Fraction(len(atoms & final.facts()), len(atoms))


def reference_progress(final: SceneGraph, initial: SceneGraph, reference: Sequence[ActionCommand]) -> Fraction:
    """Step-based progress: reference plan steps whose effects still hold in ``final``.

    A step's effects are the non-beside facts it adds when replayed from
    ``initial``; end and effect-free steps do not count.
    """
    held: list[frozenset] = []
    graph = initial
    for command in reference:
        if command.verb == Verb.END:
            break
        after = transition(graph, command)
        added = frozenset(
            f for f in diff(graph, after).added if not (isinstance(f, RelationEdge) and f.predicate == Predicate.BESIDE)
        )
        if added:
            held.append(added)
        graph = after
    if not held:
        return Fraction(1)
    facts = final.facts()
    return Fraction(sum(1 for effects in held if effects <= facts), len(held))


@dataclass(frozen=True, kw_only=True)
class CellSummary:
    suite: str
    level: str
    noise_ratio: float
    agent_id: str
    episodes: int
    mean_task_progress: float
    success_rate: float
    mean_steps: float

    @property
    def cell(self) -> str:
        return f"{self.suite}-{self.level}"

    def to_document(self) -> dict[str, Any]:
        return {
            "suite": self.suite,
            "level": self.level,
            "noise_ratio": self.noise_ratio,
            "agent_id": self.agent_id,
            "episodes": self.episodes,
            "mean_task_progress": round(self.mean_task_progress, 6),
            "success_rate": round(self.success_rate, 6),
            "mean_steps": round(self.mean_steps, 6),
        }


def summarize(records: Iterable[Mapping[str, Any]]) -> list[CellSummary]:
    """Group episode records by (suite, level, noise ratio, agent)."""
    groups: dict[tuple, list[Mapping[str, Any]]] = defaultdict(list)
    for record in records:
        key = (record["suite"], record["level"], float(record["noise_ratio"]), record.get("agent_id", ""))
        groups[key].append(record)
    summaries = []
    for (suite, level, noise, agent), group in sorted(groups.items()):
        summaries.append(
            CellSummary(
                suite=suite,
                level=level,
                noise_ratio=noise,
                agent_id=agent,
                episodes=len(group),
                mean_task_progress=statistics.fmean(float(r["task_progress"]) for r in group),
                success_rate=statistics.fmean(1.0 if r["success"] else 0.0 for r in group),
                mean_steps=statistics.fmean(int(r["steps_used"]) for r in group),
            )
        )
    return summaries


def plan_lengths(records: Iterable[Mapping[str, Any]], suites: Iterable[str] | None = None) -> float:
    """Mean steps of successful episodes, optionally limited to some suites."""
    wanted = set(suites) if suites is not None else None
    steps = [
        int(r["steps_used"])
        for r in records
        if r["success"] and (wanted is None or r["suite"] in wanted)
    ]
    return statistics.fmean(steps) if steps else 0.0
