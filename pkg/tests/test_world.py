import pytest
from conftest import on_table

from scenebench.bench.assets import ASSETS_BY_NAME, cabinet, make_node, table
from scenebench.errors import IllegalTransition, ParseError, SchemaError, UnknownNode
from scenebench.graph.base import ROBOT, Predicate, RelationEdge, StateFact, UnaryState
from scenebench.graph.extract import extract_relations
from scenebench.graph.geometry import resting_on
from scenebench.world.base import (
    ActionCommand,
    GoalSpec,
    ObjectFilter,
    QuantifiedClause,
    Verb,
    VerdictKind,
)
from scenebench.world.engine import execute, geometry_mismatch, preconditions, satisfied, transition
from scenebench.world.grammar import format_command, parse_command, scan


def cmd(text: str) -> ActionCommand:
    return parse_command(text)


class TestGrammar:
    @pytest.mark.parametrize(
        "text, expected",
        [
            ("pick apple_01", ActionCommand(verb=Verb.PICK, target="apple_01")),
            ("Place Inside box_01", ActionCommand(verb=Verb.PLACE_INSIDE, target="box_01")),
            ("put on plate_02", ActionCommand(verb=Verb.PLACE_ON, target="plate_02")),
            ("turn off lamp_01", ActionCommand(verb=Verb.TURN_OFF, target="lamp_01")),
            ("LLM: open cabinet_01.drawer_02", ActionCommand(verb=Verb.OPEN, target="cabinet_01", qualifier="drawer_02")),
            ("Task End", ActionCommand.end()),
            ("end", ActionCommand.end()),
        ],
    )
    def test_single_commands(self, text, expected):
        assert parse_command(text) == expected

    def test_scan_splits_on_separators(self):
        text = "LLM: pick yellow chair, LLM: put on purple chair"
        assert [format_command(c) for c in scan(text)] == ["pick yellow", "place on purple"]
        assert len(scan("pick cube_01; place inside box_01 then end")) == 3

    def test_prose_yields_nothing(self):
        assert scan("I think the goal is done.") == []
        assert scan("pick the") == []

    def test_formatted_commands_parse_back(self):
        for verb in Verb:
            command = ActionCommand.end() if verb == Verb.END else ActionCommand(verb=verb, target="box_01")
            assert parse_command(format_command(command)) == command

    def test_parse_command_wants_exactly_one(self):
        with pytest.raises(ParseError):
            parse_command("pick cube_01, pick cube_02")

    def test_end_takes_no_target(self):
        with pytest.raises(SchemaError):
            ActionCommand(verb=Verb.END, target="box_01")
        with pytest.raises(SchemaError):
            ActionCommand(verb=Verb.PICK)


class TestPreconditions:
    def test_inside_closed_container(self, closed_box_scene):
        assert preconditions(closed_box_scene, cmd("pick cube_01")).reason == "inside closed container"

    def test_occluded(self):
        cube = on_table("red_cube", "cube_01", (0.0, 0.0))
        mug = make_node(ASSETS_BY_NAME["blue_mug"], "mug_01", resting_on(cube.aabb, (0.0, 0.0), (0.08, 0.08, 0.1)))
        sg = extract_relations([table(), cube, mug])
        assert RelationEdge("mug_01", Predicate.ONTOP, "cube_01") in sg.edges
        assert preconditions(sg, cmd("pick cube_01")).reason == "occluded by mug_01"

    def test_end_always_ok(self, closed_box_scene):
        assert preconditions(closed_box_scene, ActionCommand.end())

    def test_unknown_target(self, sorting_scene):
        with pytest.raises(UnknownNode):
            preconditions(sorting_scene, cmd("pick ghost_99"))

    def test_place_needs_a_held_object(self, sorting_scene):
        assert preconditions(sorting_scene, cmd("place inside box_01")).reason == "gripper is empty"

    def test_closed_box_refuses_items(self, closed_box_scene):
        sg = extract_relations([*closed_box_scene.nodes.values(), on_table("blue_cube", "cube_02", (0.6, 0.0))])
        held = transition(sg, cmd("pick cube_02"))
        assert preconditions(held, cmd("place inside box_01")).reason == "box_01 is closed"

    def test_open_drawer_blocks_the_one_below(self):
        sg = extract_relations([table(), *cabinet(1.0, open_drawers=(1,))])
        assert preconditions(sg, cmd("open drawer_02")).reason == "blocked by open drawer_01"
        assert preconditions(sg, cmd("open drawer_01")).reason == "drawer_01 is already open"

    def test_fixed_objects_stay(self, sorting_scene):
        assert preconditions(sorting_scene, cmd("pick table_01")).reason == "table_01 is fixed in place"


class TestTransition:
    def test_pick_then_place_inside(self, sorting_scene):
        held = transition(sorting_scene, cmd("pick cube_01"))
        assert RelationEdge("cube_01", Predicate.ONTOP, "table_01") not in held.edges
        assert RelationEdge(ROBOT, Predicate.HOLDING, "cube_01") in held.edges
        assert held.robot.held_object == "cube_01"

        placed = transition(held, cmd("place inside box_01"))
        assert RelationEdge("cube_01", Predicate.INSIDE, "box_01") in placed.edges
        assert placed.robot.held_object is None
        assert not placed.relations(predicate=Predicate.HOLDING)

    def test_geometry_follows_edges(self, sorting_scene):
        graph = sorting_scene
        for text in ("pick cube_01", "place inside box_01", "pick cube_02", "place on table_01", "close box_01"):
            graph = transition(graph, cmd(text))
            assert geometry_mismatch(graph) == frozenset(), text

    def test_open_drawer_through_cabinet(self):
        sg = extract_relations([table(), *cabinet(-1.0)])
        opened = transition(sg, cmd("open cabinet_01.drawer_02"))
        drawer = opened.nodes["drawer_02"]
        assert drawer.states == {UnaryState.OPEN}
        assert drawer.articulation.joint_value > drawer.articulation.open_threshold
        assert geometry_mismatch(opened) == frozenset()

        pushed = transition(opened, cmd("push drawer_02"))
        assert pushed.nodes["drawer_02"].states == {UnaryState.CLOSED}

    def test_end_is_identity(self, sorting_scene):
        assert transition(sorting_scene, ActionCommand.end()) is sorting_scene

    def test_blocked_transition_raises(self, closed_box_scene):
        with pytest.raises(IllegalTransition) as info:
            transition(closed_box_scene, cmd("pick cube_01"))
        assert info.value.reason == "inside closed container"


class TestExecute:
    def test_pick_passes_every_stage(self, sorting_scene):
        result = execute(sorting_scene, cmd("pick cube_01"))
        assert result.success
        assert [(v.stage, v.kind) for v in result.log] == [(1, VerdictKind.PASS), (2, VerdictKind.PASS), (3, VerdictKind.PASS)]
        assert extract_relations(result.graph.nodes.values(), result.graph.robot).edges == result.graph.edges

    def test_blocked_pick_leaves_graph(self, closed_box_scene):
        result = execute(closed_box_scene, cmd("pick cube_01"))
        assert not result.success
        assert result.graph is closed_box_scene
        assert [v.kind for v in result.log] == [VerdictKind.BLOCKED]

    def test_unknown_target_has_empty_log(self, sorting_scene):
        result = execute(sorting_scene, cmd("pick ghost_99"))
        assert not result.success
        assert result.log == ()
        assert result.graph is sorting_scene

    def test_open_then_pick_from_box(self, closed_box_scene):
        opened = execute(closed_box_scene, cmd("open box_01"))
        assert opened.success
        assert StateFact("box_01", UnaryState.OPEN) in opened.graph.facts()
        assert execute(opened.graph, cmd("pick cube_01")).success


class TestSatisfied:
    def test_explicit_fact(self, sorting_scene):
        graph = transition(transition(sorting_scene, cmd("pick cube_01")), cmd("place inside box_01"))
        goal = GoalSpec(instruction="", facts=frozenset({RelationEdge("cube_01", Predicate.INSIDE, "box_01")}))
        assert satisfied(graph, goal)
        assert not satisfied(sorting_scene, goal)

    def test_quantified_clause(self, sorting_scene):
        clause = QuantifiedClause(
            filter=ObjectFilter(categories=frozenset({"cube"}), attributes=(("color", "red"),)),
            predicate=Predicate.INSIDE,
            object="box_01",
        )
        goal = GoalSpec(instruction="", clauses=(clause,))
        assert not satisfied(sorting_scene, goal)
        graph = transition(transition(sorting_scene, cmd("pick cube_01")), cmd("place inside box_01"))
        assert satisfied(graph, goal)

    def test_empty_match_is_vacuous(self, sorting_scene):
        clause = QuantifiedClause(
            filter=ObjectFilter(categories=frozenset({"mug"})), predicate=Predicate.INSIDE, object="box_01"
        )
        assert satisfied(sorting_scene, GoalSpec(instruction="", clauses=(clause,)))

    def test_unknown_goal_node(self, sorting_scene):
        goal = GoalSpec(instruction="", facts=frozenset({RelationEdge("cube_01", Predicate.INSIDE, "box_09")}))
        with pytest.raises(UnknownNode):
            satisfied(sorting_scene, goal)

    def test_goal_document_round_trip(self):
        clause = QuantifiedClause(
            filter=ObjectFilter(categories=frozenset({"cube"}), attributes=(("color", "red"),)),
            predicate=Predicate.INSIDE,
            object="box_01",
        )
        goal = GoalSpec(
            instruction="Put the red cubes away.",
            facts=frozenset({StateFact("box_01", UnaryState.CLOSED)}),
            clauses=(clause,),
        )
        assert GoalSpec.from_document(goal.to_document()) == goal
