"""
Episode loop that queries a policy, executes its first action on the true scene
graph and stops on end, on an exhausted step budget or on a transport failure.
"""

import asyncio
import logging
import random
from collections.abc import Callable
from dataclasses import dataclass, replace
from ._compat import StrEnum
from fractions import Fraction
from typing import Any

from .agents.base import BasePolicy, HistoryEntry, PolicyQuery, TaskMeta
from .bench.metrics import task_progress
from .bench.noise import NoiseMode, perturb
from .bench.suites import TaskSpec
from .errors import PolicyTransportError
from .graph.base import SceneGraph
from .graph.codec import TextFormat, serialize
from .graph.extract import DEFAULT_EXTRACTION, ExtractionConfig
from .world.base import ActionCommand, ExecutionResult, Verb
from .world.engine import execute, satisfied
from .world.grammar import format_command, scan

logger = logging.getLogger(__name__)


class Termination(StrEnum):
    AGENT_END = "agent_end"
    BUDGET_EXHAUSTED = "budget_exhausted"
    AGENT_ERROR = "agent_error"


@dataclass(frozen=True, kw_only=True)
class EpisodeStep:
    step: int
    response: str
    command: ActionCommand | None = None
    result: ExecutionResult | None = None
    error: str | None = None

    def to_document(self) -> dict[str, Any]:
        return {
            "command": format_command(self.command) if self.command else None,
            "error": self.error,
            "response": self.response,
            "sigma": bool(self.result),
            "verdicts": [v.to_document() for v in self.result.log] if self.result else [],
        }


@dataclass(frozen=True, kw_only=True)
class EpisodeResult:
    task: TaskSpec
    steps: tuple[EpisodeStep, ...]
    final_graph: SceneGraph
    task_progress: Fraction
    success: bool
    termination: Termination
    error: str | None = None

    def __post_init__(self):
        if self.success and self.task_progress != 1:
            raise ValueError("a successful episode must have complete task progress")
        if self.steps_used > self.task.step_budget:
            raise ValueError(f"{self.steps_used} steps exceed the budget of {self.task.step_budget}")

    @property
    def steps_used(self) -> int:
        return len(self.steps)

    @property
    def actions(self) -> list[tuple[ActionCommand, ExecutionResult]]:
        return [(s.command, s.result) for s in self.steps if s.result is not None]

    def replace(self, **kwargs) -> "EpisodeResult":
        return replace(self, **kwargs)

    def to_record(self, *, trial: int, noise_ratio: float, agent_id: str) -> dict[str, Any]:
        return {
            "suite": str(self.task.suite),
            "level": str(self.task.level),
            "seed": self.task.seed,
            "trial": trial,
            "noise_ratio": noise_ratio,
            "agent_id": agent_id,
            "success": self.success,
            "task_progress": float(self.task_progress),
            "task_progress_exact": str(self.task_progress),
            "steps_used": self.steps_used,
            "termination": str(self.termination),
            "actions": [s.to_document() for s in self.steps],
        }


async def run_episode(
    *,
    task: TaskSpec,
    policy: BasePolicy,
    rng: random.Random,
    noise_ratio: float = 0.0,
    noise_mode: NoiseMode = NoiseMode.FLIP,
    per_episode_noise: bool = False,
    feedback: bool = True,
    config: ExtractionConfig = DEFAULT_EXTRACTION,
    step_callback: Callable[[EpisodeStep], Any] | None = None,
) -> EpisodeResult:
    """
    Run one episode of ``task`` against ``policy``.

    Noise only ever touches the observation; the engine state depends on executed
    commands alone. With ``per_episode_noise`` every step replays the same random
    draws instead of fresh ones.
    """
    graph = task.initial_graph
    history: list[HistoryEntry] = []
    steps: list[EpisodeStep] = []
    termination = Termination.BUDGET_EXHAUSTED
    error = None
    episode_seed = rng.random()
    meta = TaskMeta(suite=str(task.suite), level=str(task.level), seed=task.seed)

    for index in range(task.step_budget):
        noise_rng = random.Random(episode_seed) if per_episode_noise else rng
        observed = perturb(graph, noise_ratio, noise_rng, noise_mode)
        query = PolicyQuery(
            observation=serialize(observed, TextFormat.STRUCTURED),
            instruction=task.instruction,
            history=tuple(history),
            step=index,
            budget=task.step_budget,
            feedback=feedback,
            task=meta,
        )
        try:
            response = await policy(query)
        except PolicyTransportError as exc:
            logger.error(f"{task.key} step {index}: {exc.message}")
            termination, error = Termination.AGENT_ERROR, exc.message
            break

        commands = scan(response.text)
        if not commands:
            logger.debug(f"{task.key} step {index}: no action in {response.text[:80]!r}")
            record = EpisodeStep(step=index, response=response.text, error=str(Termination.AGENT_ERROR))
            history.append(HistoryEntry(command=None, success=False))
        else:
            command = commands[0]
            result = execute(graph, command, config)
            graph = result.graph
            record = EpisodeStep(step=index, response=response.text, command=command, result=result)
            history.append(HistoryEntry(command=command, success=result.success))
        steps.append(record)

        if step_callback is not None:
            outcome = step_callback(record)
            if asyncio.iscoroutine(outcome):
                await outcome
        if record.command is not None and record.command.verb == Verb.END:
            termination = Termination.AGENT_END
            break

    progress = task_progress(graph, task.goal, task.scene)
    success = satisfied(graph, task.goal)
    logger.info(f"{task.key}: {termination} after {len(steps)} steps, progress {float(progress):.3f}")
    return EpisodeResult(
        task=task,
        steps=tuple(steps),
        final_graph=graph,
        task_progress=progress,
        success=success,
        termination=termination,
        error=error,
    )
