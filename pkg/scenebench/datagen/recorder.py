"""Record engine trajectories by running a policy through benchmark tasks."""

import asyncio
import random

from rich.console import Console

from ..agents.base import BasePolicy
from ..agents.oracle import OraclePolicy
from ..bench.suites import TaskSpec
from ..loop import run_episode
from .trajectory import ENGINE_PROVENANCE, Trajectory, TrajectoryStep

c = Console(stderr=True)


async def record_trajectory(task: TaskSpec, policy: BasePolicy | None = None, *, seed: int = 0) -> Trajectory | None:
    """Run ``policy`` (the oracle by default) at zero noise and keep the executed steps.

    Steps that did not execute are dropped; None when nothing executed.
    """
    policy = policy or OraclePolicy(goal=task.goal)
    result = await run_episode(task=task, policy=policy, rng=random.Random(seed))
    steps = []
    graph = task.initial_graph
    for command, outcome in result.actions:
        if outcome:
            steps.append(TrajectoryStep(graph=graph, action=command))
        graph = outcome.graph
    if not steps:
        c.print(f"[yellow]{task.key}: no executed steps, skipped[/]")
        return None
    if not result.success:
        c.print(f"[yellow]{task.key}: recorded without reaching the goal ({float(result.task_progress):.2f})[/]")
    return Trajectory(
        id=task.key,
        instruction=task.instruction,
        steps=tuple(steps),
        final_graph=result.final_graph,
        provenance=ENGINE_PROVENANCE,
    )


def record_tasks(tasks: list[TaskSpec], *, seed: int = 0) -> list[Trajectory]:
    trajectories = []
    for task in tasks:
        trajectory = asyncio.run(record_trajectory(task, seed=seed))
        if trajectory is not None:
            trajectories.append(trajectory)
    c.print(f"[bold green]Recorded {len(trajectories)} of {len(tasks)} trajectories[/]")
    return trajectories
