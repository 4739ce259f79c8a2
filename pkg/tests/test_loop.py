import asyncio
import random
from dataclasses import dataclass, field

import pytest

from scenebench.agents.base import BasePolicy, PolicyQuery, PolicyResponse
from scenebench.agents.oracle import OraclePolicy, solve
from scenebench.bench.metrics import plan_lengths, task_progress
from scenebench.bench.suites import Level, Suite, generate_benchmark, generate_task
from scenebench.errors import AgentUnreachable
from scenebench.graph.delta import apply_delta, diff
from scenebench.loop import Termination, run_episode
from scenebench.world.engine import execute, geometry_mismatch


@dataclass(kw_only=True)
class ScriptedPolicy(BasePolicy):
    replies: list[str]
    queries: list[PolicyQuery] = field(default_factory=list)

    async def __call__(self, query: PolicyQuery) -> PolicyResponse:
        self.queries.append(query)
        return PolicyResponse(text=self.replies[min(query.step, len(self.replies) - 1)])


@dataclass(kw_only=True)
class DeadPolicy(BasePolicy):
    async def __call__(self, query: PolicyQuery) -> PolicyResponse:
        raise AgentUnreachable("connection refused")


def episode(task, policy, seed=0, **kwargs):
    return asyncio.run(run_episode(task=task, policy=policy, rng=random.Random(seed), **kwargs))


@pytest.fixture(scope="module")
def sod_task():
    return generate_task("sod", "easy", 0)


def test_oracle_solves_sod_easy(sod_task):
    result = episode(sod_task, OraclePolicy(goal=sod_task.goal))
    assert result.success
    assert result.task_progress == 1
    assert result.termination == Termination.AGENT_END
    assert result.steps_used <= sod_task.step_budget


def test_immediate_end(sod_task):
    result = episode(sod_task, ScriptedPolicy(replies=["end"]))
    assert result.termination == Termination.AGENT_END
    assert result.steps_used == 1
    assert not result.success
    assert result.task_progress == task_progress(sod_task.initial_graph, sod_task.goal, sod_task.scene)


def test_gibberish_exhausts_budget(sod_task):
    result = episode(sod_task, ScriptedPolicy(replies=["I would rather not."]))
    assert result.termination == Termination.BUDGET_EXHAUSTED
    assert result.steps_used == sod_task.step_budget
    assert result.actions == []
    assert result.final_graph is sod_task.initial_graph


def test_unparseable_steps_are_tagged(sod_task):
    result = episode(sod_task, ScriptedPolicy(replies=["hmm", "end"]))
    first, last = result.to_record(trial=0, noise_ratio=0.0, agent_id="scripted")["actions"]
    assert (first["command"], first["error"], first["sigma"]) == (None, "agent_error", False)
    assert (last["command"], last["error"]) == ("end", None)
    assert result.termination == Termination.AGENT_END


def test_transport_failure_aborts(sod_task):
    result = episode(sod_task, DeadPolicy())
    assert result.termination == Termination.AGENT_ERROR
    assert result.steps_used == 0
    assert "connection refused" in result.error


def test_first_action_only(sod_task):
    cube = sorted(n.id for n in sod_task.scene if n.category == "cube")[0]
    policy = ScriptedPolicy(replies=[f"pick {cube}, place inside ghost_99", "end"])
    result = episode(sod_task, policy)
    command, outcome = result.actions[0]
    assert command.target == cube
    assert outcome.success
    assert result.steps_used == 2


def test_history_and_feedback(sod_task):
    cube = sorted(n.id for n in sod_task.scene if n.category == "cube")[0]
    policy = ScriptedPolicy(replies=[f"pick {cube}", f"pick {cube}", "???", "end"])
    episode(sod_task, policy, feedback=False)
    last = policy.queries[-1]
    assert last.step == 3
    assert [h.success for h in last.history] == [True, False, False]
    assert last.history[2].command is None
    assert not last.feedback
    assert last.task.suite == "sod"


def test_noise_never_reaches_the_true_graph():
    task = generate_task("sas", "simple", 1)
    noisy = episode(task, OraclePolicy(goal=task.goal), seed=3, noise_ratio=0.3)
    graph = task.initial_graph
    for command, _ in noisy.actions:
        graph = execute(graph, command).graph
    assert graph == noisy.final_graph


def test_per_episode_noise_repeats_draws(sod_task):
    policy = ScriptedPolicy(replies=["nothing"])
    episode(sod_task, policy, noise_ratio=0.5, per_episode_noise=True)
    observations = {q.observation for q in policy.queries}
    assert len(observations) == 1


def test_record_fields(sod_task):
    result = episode(sod_task, ScriptedPolicy(replies=["end"]))
    record = result.to_record(trial=2, noise_ratio=0.05, agent_id="scripted")
    assert record["suite"] == "sod" and record["level"] == "easy"
    assert record["trial"] == 2
    assert record["termination"] == "agent_end"
    assert record["actions"][0]["command"] == "end"
    assert record["actions"][0]["sigma"] is True


def test_step_callback_sees_every_step(sod_task):
    seen = []
    episode(sod_task, ScriptedPolicy(replies=["hm", "end"]), step_callback=seen.append)
    assert [s.step for s in seen] == [0, 1]


def test_delta_conservation_over_oracle_episodes():
    tasks = generate_benchmark(suites=["sod", "sas"], levels=["easy"], seeds=3)
    for task in tasks:
        result = episode(task, OraclePolicy(goal=task.goal))
        graph = task.initial_graph
        for command, outcome in result.actions:
            after = outcome.graph
            assert apply_delta(graph, diff(graph, after)).same_facts(after)
            assert geometry_mismatch(after) == frozenset()
            graph = after


@pytest.mark.slow
def test_oracle_completes_every_benchmark_task():
    tasks = generate_benchmark()
    assert len(tasks) == 180
    records = []
    for task in tasks:
        result = episode(task, OraclePolicy(goal=task.goal))
        assert result.success, task.key
        records.append(result.to_record(trial=0, noise_ratio=0.0, agent_id="oracle"))
    assert plan_lengths(records, suites=("sas", "gcg")) > 10.0


@pytest.mark.slow
def test_oracle_progress_degrades_with_noise():
    tasks = generate_benchmark(suites=["sod", "sas"], levels=["easy", "general"], seeds=5)
    means = []
    for noise in (0.0, 0.05, 0.10):
        progress = [
            float(episode(task, OraclePolicy(goal=task.goal), seed=trial, noise_ratio=noise).task_progress)
            for task in tasks
            for trial in range(5)
        ]
        means.append(sum(progress) / len(progress))
    assert means[0] == 1.0
    assert means[1] <= means[0] + 0.02
    assert means[2] <= means[1] + 0.02


@pytest.mark.parametrize("suite", list(Suite))
def test_oracle_plans_within_budget(suite):
    task = generate_task(suite, Level.GENERAL, 0)
    commands = solve(task.initial_graph, task.goal, task.step_budget)
    assert commands is not None
    assert len(commands) <= task.step_budget
