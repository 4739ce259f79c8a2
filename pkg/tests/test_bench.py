import random
from fractions import Fraction

import pytest
from conftest import stub_graph

from scenebench.bench.metrics import plan_lengths, reference_progress, summarize, task_progress
from scenebench.bench.noise import NoiseMode, noisy_edge_count, perturb
from scenebench.bench.suites import (
    INSTRUCTIONS,
    Level,
    Suite,
    TaskSpec,
    generate_benchmark,
    generate_task,
    parse_level,
)
from scenebench.errors import SchemaError
from scenebench.graph.base import (
    ROBOT,
    SPATIAL_PREDICATES,
    ObjectNode,
    Predicate,
    RelationEdge,
    RobotState,
    SceneGraph,
    UnaryState,
)
from scenebench.world.base import ActionCommand, GoalSpec, Verb
from scenebench.world.engine import satisfied, transition
from scenebench.world.grammar import parse_command


class TestSuites:
    def test_sod_easy_layout(self):
        task = generate_task("sod", "easy", 7, validate=False)
        categories = [n.category for n in task.scene]
        assert categories.count("box") == 1
        assert 7 <= categories.count("cube") <= 10
        (clause,) = task.goal.clauses
        box = next(n for n in task.scene if n.category == "box")
        assert clause.object == box.id
        assert dict(clause.filter.attributes) == {"color": box.attributes["color"]}

    def test_sas_general_red_box_at_bottom(self):
        for seed in range(5):
            task = generate_task(Suite.SAS, Level.GENERAL, seed, validate=False)
            sg = task.initial_graph
            bottom = [
                e.subject
                for e in sg.relations(predicate=Predicate.ONTOP, object="table_01")
                if sg.nodes[e.subject].category == "box"
            ]
            assert [sg.nodes[b].attributes["color"] for b in bottom] == ["red"]

    def test_sas_simple_boxes_start_closed(self):
        sg = generate_task("sas", "simple", 3, validate=False).initial_graph
        boxes = [n for n in sg.nodes.values() if n.category == "box"]
        assert len(boxes) == 2
        assert all(UnaryState.CLOSED in b.states for b in boxes)

    def test_sas_complex_top_drawer_open(self):
        sg = generate_task("sas", "complex", 0, validate=False).initial_graph
        assert sg.nodes["drawer_01"].states == {UnaryState.OPEN}
        assert sg.nodes["drawer_02"].states == {UnaryState.CLOSED}

    def test_gcg_simple_instruction(self):
        task = generate_task("gcg", "simple", 11, validate=False)
        assert task.instruction == "Place the milk, the popcorn, and the book into different drawer layers of the cabinet."

    def test_instruction_table_covers_every_cell(self):
        assert {(s, l) for s in Suite for l in Level} == set(INSTRUCTIONS)

    def test_deterministic(self):
        first = generate_task("gcg", "complex", 4, validate=False)
        second = generate_task("gcg", "complex", 4, validate=False)
        assert first == second
        assert first.to_json() == second.to_json()

    def test_step_budget(self):
        task = generate_task("sod", "easy", 0, validate=False)
        goal_objects = {f.subject for f in task.goal.atomic_facts(task.scene)}
        assert task.step_budget == 3 * len(goal_objects) + 10

    def test_document_round_trip(self):
        task = generate_task("sas", "complex", 2, validate=False)
        again = TaskSpec.from_document(task.to_document())
        assert again.key == task.key
        assert again.goal == task.goal
        assert again.initial_graph.same_facts(task.initial_graph)

    def test_level_aliases(self):
        assert parse_level("Simple") == Level.EASY
        assert parse_level("hard") == Level.COMPLEX
        with pytest.raises(SchemaError):
            parse_level("extreme")

    def test_cell_size(self):
        tasks = generate_benchmark(suites=["sod"], levels=["easy"], seeds=3, validate=False)
        assert [t.key for t in tasks] == ["sod:easy:0", "sod:easy:1", "sod:easy:2"]

    def test_unsolvable_layouts_raise(self, monkeypatch):
        monkeypatch.setattr("scenebench.agents.oracle.solve", lambda *args, **kwargs: None)
        with pytest.raises(SchemaError) as info:
            generate_task("sod", "easy", 0)
        assert info.value.message == "oracle could not solve sod:easy:0"
        assert generate_task("sod", "easy", 0, validate=False).key == "sod:easy:0"

    def test_redraws_until_solvable(self, monkeypatch):
        from scenebench.agents import oracle

        solve, calls = oracle.solve, []

        def fail_first(*args, **kwargs):
            calls.append(args)
            return None if len(calls) == 1 else solve(*args, **kwargs)

        monkeypatch.setattr(oracle, "solve", fail_first)
        task = generate_task("sod", "easy", 0)
        assert len(calls) == 2
        assert task != generate_task("sod", "easy", 0, validate=False)

    @pytest.mark.slow
    def test_full_benchmark_is_unique(self):
        tasks = generate_benchmark(validate=False)
        assert len(tasks) == 180
        for suite in Suite:
            for level in Level:
                cell = [t for t in tasks if t.suite == suite and t.level == level]
                assert len({t.to_json() for t in cell}) == 20


class TestTaskProgress:
    goal = GoalSpec(
        instruction="",
        facts=frozenset(RelationEdge(f"cube_0{i}", Predicate.INSIDE, "box_01") for i in range(1, 5)),
    )

    def test_half_done(self):
        sg = stub_graph(
            ("cube_01", "inside", "box_01"),
            ("cube_02", "inside", "box_01"),
            ("cube_03", "ontop", "table_01"),
            ("cube_04", "ontop", "table_01"),
        )
        assert task_progress(sg, self.goal) == Fraction(1, 2)

    def test_bounds(self):
        done = stub_graph(*((f"cube_0{i}", "inside", "box_01") for i in range(1, 5)))
        assert task_progress(done, self.goal) == 1
        idle = stub_graph(*((f"cube_0{i}", "ontop", "table_01") for i in range(1, 5)))
        assert task_progress(idle, self.goal) == 0

    def test_clauses_expand_over_initial_scene(self):
        task = generate_task("sod", "easy", 1, validate=False)
        atoms = task.goal.atomic_facts(task.scene)
        assert task_progress(task.initial_graph, task.goal, task.scene) == Fraction(0, len(atoms))

    def test_reference_progress(self, sorting_scene):
        reference = [parse_command("pick cube_01"), parse_command("place inside box_01"), ActionCommand.end()]
        assert reference_progress(sorting_scene, sorting_scene, reference) == 0
        half = transition(sorting_scene, reference[0])
        assert reference_progress(half, sorting_scene, reference) == Fraction(1, 2)
        done = transition(half, reference[1])
        # picking's holding edge is gone once the cube is placed
        assert reference_progress(done, sorting_scene, reference) == Fraction(1, 2)


def chain(count: int) -> SceneGraph:
    """``count`` ontop edges over distinct pairs, plus a held mug and an open state."""
    edges = {RelationEdge(f"cube_{i:02d}", Predicate.ONTOP, f"cube_{i + 1:02d}") for i in range(1, count + 1)}
    edges.add(RelationEdge(ROBOT, Predicate.HOLDING, "mug_01"))
    nodes = [ObjectNode.stub(f"cube_{i:02d}") for i in range(2, count + 2)] + [ObjectNode.stub("mug_01")]
    nodes.append(ObjectNode(id="cube_01", category="cube", states=frozenset({UnaryState.OPEN})))
    return SceneGraph.build(nodes, edges, RobotState(gripper_value=1.0, held_object="mug_01"))


class TestNoise:
    @pytest.mark.parametrize("edges, ratio, expected", [(10, 0.10, 1), (40, 0.05, 2), (10, 0.0, 0), (0, 0.5, 0), (3, 1.0, 3)])
    def test_noisy_edge_count(self, edges, ratio, expected):
        assert noisy_edge_count(edges, ratio) == expected

    @pytest.mark.parametrize("count, ratio, changed", [(10, 0.10, 1), (40, 0.05, 2)])
    def test_exact_number_of_edges_touched(self, count, ratio, changed):
        sg = chain(count)
        spatial = {e for e in sg.edges if e.predicate in SPATIAL_PREDICATES}
        for seed in range(20):
            noisy = perturb(sg, ratio, random.Random(seed))
            assert len(spatial & noisy.edges) == count - changed

    def test_zero_ratio_is_identity(self):
        sg = chain(5)
        assert perturb(sg, 0.0, random.Random(0)) is sg

    def test_holding_and_states_survive(self):
        sg = chain(6)
        for seed in range(10):
            noisy = perturb(sg, 1.0, random.Random(seed))
            assert RelationEdge(ROBOT, Predicate.HOLDING, "mug_01") in noisy.edges
            assert noisy.state_facts == sg.state_facts
            assert noisy.robot.held_object == "mug_01"

    def test_flip_keeps_endpoints(self):
        sg = chain(8)
        pairs = {frozenset((e.subject, e.object)) for e in sg.edges}
        for seed in range(10):
            noisy = perturb(sg, 1.0, random.Random(seed), NoiseMode.FLIP)
            assert {frozenset((e.subject, e.object)) for e in noisy.edges} <= pairs

    def test_reverse_swaps_endpoints(self):
        sg = chain(8)
        for seed in range(10):
            noisy = perturb(sg, 1.0, random.Random(seed), NoiseMode.REVERSE)
            spatial = [e for e in noisy.edges if e.predicate != Predicate.HOLDING]
            assert all(e.predicate == Predicate.ONTOP and e.subject > e.object for e in spatial)

    def test_deterministic_for_a_seed(self):
        sg = chain(12)
        assert perturb(sg, 0.3, random.Random(5)) == perturb(sg, 0.3, random.Random(5))

    def test_ratio_range(self):
        with pytest.raises(ValueError):
            perturb(chain(2), 1.5, random.Random(0))


def record(suite="sod", level="easy", noise=0.0, agent="oracle", success=True, tp=1.0, steps=12):
    return {
        "suite": suite,
        "level": level,
        "noise_ratio": noise,
        "agent_id": agent,
        "success": success,
        "task_progress": tp,
        "steps_used": steps,
    }


class TestSummaries:
    def test_groups_by_cell_noise_and_agent(self):
        records = [
            record(tp=1.0, steps=10),
            record(tp=0.5, success=False, steps=20),
            record(noise=0.1, tp=0.25, success=False),
            record(suite="gcg", steps=14),
        ]
        summaries = {(s.cell, s.noise_ratio): s for s in summarize(records)}
        easy = summaries["sod-easy", 0.0]
        assert easy.episodes == 2
        assert easy.mean_task_progress == 0.75
        assert easy.success_rate == 0.5
        assert easy.mean_steps == 15
        assert summaries["sod-easy", 0.1].mean_task_progress == 0.25
        assert summaries["gcg-easy", 0.0].success_rate == 1.0

    def test_plan_lengths_use_successes(self):
        records = [record(suite="sas", steps=12), record(suite="gcg", steps=16), record(suite="sas", success=False, steps=40), record(steps=2)]
        assert plan_lengths(records, suites=("sas", "gcg")) == 14
        assert plan_lengths(records) == 10
        assert plan_lengths([]) == 0.0


def test_goal_facts_hold_after_oracle_plan():
    from scenebench.agents.oracle import solve

    task = generate_task("sas", "simple", 0)
    commands = solve(task.initial_graph, task.goal, task.step_budget)
    assert commands is not None and commands[-1].verb == Verb.END
    graph = task.initial_graph
    for command in commands[:-1]:
        graph = transition(graph, command)
    assert satisfied(graph, task.goal)


def test_asset_library_groups():
    from collections import Counter

    from scenebench.bench.assets import AssetGroup, asset_library

    assets = asset_library()
    assert len(assets) == 63
    assert len({a.name for a in assets}) == 63
    assert Counter(a.group for a in assets) == {
        AssetGroup.BASIC: 11,
        AssetGroup.ARTICULATED: 10,
        AssetGroup.PACKAGED: 14,
        AssetGroup.KITCHENWARE: 11,
        AssetGroup.APPLIANCE: 17,
    }
