"""Procedural task suites.

Three suites (object disambiguation, spatial sequencing, goal-conditioned
generalization) at three levels each. Every task is a pure function of
``(suite, level, seed)``: the random stream is keyed on those values, so
regenerating a task yields the same document byte for byte.
"""

import json
import logging
import random
from dataclasses import dataclass
from .._compat import StrEnum
from functools import cached_property
from typing import Any, Callable, Mapping

from ..errors import SchemaError
from ..graph.base import ObjectNode, Predicate, RelationEdge, RobotState, SceneGraph, StateFact
from ..graph.codec import from_document as graph_from_document
from ..graph.codec import to_document as graph_to_document
from ..graph.extract import DEFAULT_EXTRACTION, extract_relations
from ..graph.geometry import TABLE_AABB, TABLE_ID, container_slots, free_spots, grid_points, in_slot, reserved_zones, resting_on, volumes_overlap
from ..world.base import GoalSpec, ObjectFilter, QuantifiedClause
from .assets import ASSETS, ASSETS_BY_NAME, COLORS, AssetGroup, AssetSpec, cabinet, make_node, table

logger = logging.getLogger(__name__)

SEEDS_PER_CELL = 20
MAX_ATTEMPTS = 20


class Suite(StrEnum):
    SOD = "sod"
    SAS = "sas"
    GCG = "gcg"


class Level(StrEnum):
    EASY = "easy"
    GENERAL = "general"
    COMPLEX = "complex"


LEVEL_ALIASES = {
    "simple": Level.EASY,
    "medium": Level.GENERAL,
    "hard": Level.COMPLEX,
    "difficult": Level.COMPLEX,
}

INSTRUCTIONS: dict[tuple[Suite, Level], str] = {
    **{
        (Suite.SOD, level): "Pick up all cubes that have the same color as the box and put them inside the box."
        for level in Level
    },
    (Suite.SAS, Level.EASY): "Transfer all items from the yellow box to the red box.",
    (Suite.SAS, Level.GENERAL): "Move all objects on the table into the red box.",
    (Suite.SAS, Level.COMPLEX): "Transfer all objects from the box into the middle drawer.",
    (Suite.GCG, Level.EASY): "Place the milk, the popcorn, and the book into different drawer layers of the cabinet.",
    (Suite.GCG, Level.GENERAL): "Sort all cubes and mugs into the boxes of their corresponding colors.",
    (Suite.GCG, Level.COMPLEX): "Store the cubes and mugs into different drawer layers based on their colors.",
}

# distractor pool for the complex disambiguation level
_OTHER_ITEMS = sorted(
    asset.name
    for asset in ASSETS
    if asset.group in (AssetGroup.PACKAGED, AssetGroup.KITCHENWARE) and asset.storable and not asset.container
)
_CUBE_COLORS = COLORS + ("green", "white")


def parse_suite(text: str) -> Suite:
    try:
        return Suite(text.strip().lower())
    except ValueError:
        raise SchemaError(f"unknown suite {text!r}") from None


def parse_level(text: str) -> Level:
    key = text.strip().lower()
    if key in LEVEL_ALIASES:
        return LEVEL_ALIASES[key]
    try:
        return Level(key)
    except ValueError:
        raise SchemaError(f"unknown level {text!r}") from None


@dataclass(frozen=True, kw_only=True)
class TaskSpec:
    suite: Suite
    level: Level
    seed: int
    scene: tuple[ObjectNode, ...]
    goal: GoalSpec
    step_budget: int

    @property
    def instruction(self) -> str:
        return self.goal.instruction

    @property
    def key(self) -> str:
        return f"{self.suite}:{self.level}:{self.seed}"

    @cached_property
    def initial_graph(self) -> SceneGraph:
        return extract_relations(self.scene, RobotState(gripper_threshold=DEFAULT_EXTRACTION.gripper_threshold))

    def to_document(self) -> dict[str, Any]:
        return {
            "suite": str(self.suite),
            "level": str(self.level),
            "seed": self.seed,
            "instruction": self.instruction,
            "step_budget": self.step_budget,
            "goal": self.goal.to_document(),
            "scene": graph_to_document(self.initial_graph),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_document(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_document(cls, doc: Mapping[str, Any]) -> "TaskSpec":
        try:
            graph = graph_from_document(doc["scene"])
            return cls(
                suite=parse_suite(doc["suite"]),
                level=parse_level(doc["level"]),
                seed=int(doc["seed"]),
                scene=tuple(graph.nodes.values()),
                goal=GoalSpec.from_document(doc["goal"]),
                step_budget=int(doc["step_budget"]),
            )
        except KeyError as exc:
            raise SchemaError(f"task document misses {exc}") from exc


class _Placer:
    """Seeded tabletop layout with a minimum clearance between footprints."""

    def __init__(self, rng: random.Random, nodes: list[ObjectNode] | None = None):
        self.rng = rng
        self.nodes: list[ObjectNode] = [table()] + list(nodes or [])
        self.counts: dict[str, int] = {}

    def _next_id(self, asset: AssetSpec) -> str:
        count = self.counts.get(asset.id_stem, 0) + 1
        self.counts[asset.id_stem] = count
        return f"{asset.id_stem}_{count:02d}"

    def _add(self, node: ObjectNode) -> ObjectNode:
        self.nodes.append(node)
        return node

    def on_table(self, asset: AssetSpec, *, opened: bool = False) -> ObjectNode:
        obstacles = [n.aabb for n in self.nodes if n.id != TABLE_ID] + reserved_zones(self.nodes)
        points = grid_points(TABLE_AABB, asset.size)
        self.rng.shuffle(points)
        spot = next(free_spots(TABLE_AABB, asset.size, obstacles, candidates=points), None)
        if spot is None:
            raise SchemaError(f"no room on the table for {asset.name}")
        return self._add(make_node(asset, self._next_id(asset), spot, opened=opened))

    def stacked(self, asset: AssetSpec, support: ObjectNode, *, opened: bool = False) -> ObjectNode:
        aabb = resting_on(support.aabb, support.aabb.center[:2], asset.size)
        return self._add(make_node(asset, self._next_id(asset), aabb, opened=opened))

    def stored(self, asset: AssetSpec, container: ObjectNode) -> ObjectNode:
        slots = container_slots(container.aabb)
        self.rng.shuffle(slots)
        for slot in slots:
            aabb = in_slot(container.aabb, slot, asset.size)
            if not any(volumes_overlap(aabb, n.aabb) for n in self.nodes if n.id != container.id):
                return self._add(make_node(asset, self._next_id(asset), aabb))
        raise SchemaError(f"{container.id} is full")


def _colored(kind: str, color: str) -> AssetSpec:
    return ASSETS_BY_NAME[f"{color}_{kind}"]


def _sod(rng: random.Random, level: Level) -> tuple[list[ObjectNode], GoalSpec]:
    color = rng.choice(COLORS)
    placer = _Placer(rng)
    box = placer.on_table(_colored("box", color), opened=True)
    if level == Level.EASY:
        count = rng.randint(7, 10)
        items = [("cube", color), ("cube", color)]
        items += [("cube", rng.choice(_CUBE_COLORS)) for _ in range(count - 2)]
    else:
        count = rng.randint(9, 12)
        items = [("cube", color), ("cube", color)]
        items += [(rng.choice(("cube", "mug")), rng.choice(COLORS)) for _ in range(count - 2)]
    rng.shuffle(items)
    for kind, item_color in items:
        placer.on_table(_colored(kind, item_color))
    if level == Level.COMPLEX:
        for name in rng.sample(_OTHER_ITEMS, 3):
            placer.on_table(ASSETS_BY_NAME[name])
    clause = QuantifiedClause(
        filter=ObjectFilter(categories=frozenset({"cube"}), attributes=(("color", color),)),
        predicate=Predicate.INSIDE,
        object=box.id,
    )
    return placer.nodes, GoalSpec(instruction=INSTRUCTIONS[Suite.SOD, level], clauses=(clause,))


def _loose_items(rng: random.Random, count: int) -> list[AssetSpec]:
    pool = [_colored(kind, color) for kind in ("cube", "mug") for color in COLORS]
    return [rng.choice(pool) for _ in range(count)]


def _inside_all(items: list[ObjectNode], container: str) -> frozenset[RelationEdge]:
    return frozenset(RelationEdge(item.id, Predicate.INSIDE, container) for item in items)


def _sas(rng: random.Random, level: Level) -> tuple[list[ObjectNode], GoalSpec]:
    count = rng.randint(5, 8)
    instruction = INSTRUCTIONS[Suite.SAS, level]
    if level == Level.EASY:
        placer = _Placer(rng)
        red = placer.on_table(_colored("box", "red"))
        yellow = placer.on_table(_colored("box", "yellow"))
        items = [placer.stored(asset, yellow) for asset in _loose_items(rng, count)]
        return placer.nodes, GoalSpec(instruction=instruction, facts=_inside_all(items, red.id))
    if level == Level.GENERAL:
        placer = _Placer(rng)
        red = placer.on_table(_colored("box", "red"), opened=True)
        yellow = placer.stacked(_colored("box", "yellow"), red, opened=True)
        placer.stacked(_colored("box", "blue"), yellow, opened=True)
        items = [placer.on_table(asset) for asset in _loose_items(rng, count)]
        return placer.nodes, GoalSpec(instruction=instruction, facts=_inside_all(items, red.id))
    placer = _Placer(rng, cabinet(rng.choice((-1.0, 1.0)), open_drawers=(1,)))
    box = placer.on_table(_colored("box", rng.choice(COLORS)), opened=True)
    items = [placer.stored(asset, box) for asset in _loose_items(rng, count)]
    return placer.nodes, GoalSpec(instruction=instruction, facts=_inside_all(items, "drawer_02"))


def _gcg(rng: random.Random, level: Level) -> tuple[list[ObjectNode], GoalSpec]:
    placer = _Placer(rng, cabinet(rng.choice((-1.0, 1.0))))
    boxes = {color: placer.on_table(_colored("box", color), opened=True) for color in COLORS}
    count = rng.randint(6, 10)
    colors = list(COLORS) + [rng.choice(COLORS) for _ in range(count - len(COLORS))]
    rng.shuffle(colors)
    for color in colors:
        placer.on_table(_colored(rng.choice(("cube", "mug")), color))
    named = {name: placer.on_table(ASSETS_BY_NAME[name]) for name in ("milk", "popcorn", "book")}
    instruction = INSTRUCTIONS[Suite.GCG, level]

    if level == Level.EASY:
        facts = {
            RelationEdge(named["milk"].id, Predicate.INSIDE, "drawer_01"),
            RelationEdge(named["popcorn"].id, Predicate.INSIDE, "drawer_02"),
            RelationEdge(named["book"].id, Predicate.INSIDE, "drawer_03"),
        }
        return placer.nodes, GoalSpec(instruction=instruction, facts=frozenset(facts))
    destinations = (
        {color: boxes[color].id for color in COLORS}
        if level == Level.GENERAL
        else {color: f"drawer_{tier:02d}" for tier, color in enumerate(COLORS, start=1)}
    )
    clauses = tuple(
        QuantifiedClause(
            filter=ObjectFilter(categories=frozenset({"cube", "mug"}), attributes=(("color", color),)),
            predicate=Predicate.INSIDE,
            object=destinations[color],
        )
        for color in COLORS
    )
    return placer.nodes, GoalSpec(instruction=instruction, clauses=clauses)


BUILDERS: dict[Suite, Callable[[random.Random, Level], tuple[list[ObjectNode], GoalSpec]]] = {
    Suite.SOD: _sod,
    Suite.SAS: _sas,
    Suite.GCG: _gcg,
}


def goal_objects(goal: GoalSpec, nodes) -> set[str]:
    """Nodes a goal asks something of."""
    objects = set()
    for fact in goal.atomic_facts(nodes):
        objects.add(fact.node if isinstance(fact, StateFact) else fact.subject)
    return objects


def step_budget(goal: GoalSpec, nodes) -> int:
    return 3 * len(goal_objects(goal, nodes)) + 10


def _build(suite: Suite, level: Level, seed: int, attempt: int) -> TaskSpec:
    rng = random.Random(f"{suite}:{level}:{seed}:{attempt}")
    nodes, goal = BUILDERS[suite](rng, level)
    scene = tuple(sorted(nodes, key=lambda n: n.id))
    return TaskSpec(
        suite=suite,
        level=level,
        seed=seed,
        scene=scene,
        goal=goal,
        step_budget=step_budget(goal, scene),
    )


def generate_task(suite: Suite | str, level: Level | str, seed: int, *, validate: bool = True) -> TaskSpec:
    """Build the task for ``(suite, level, seed)``.

    With ``validate`` the oracle must solve the task within its step budget; a
    layout it cannot solve is redrawn from the next attempt's random stream.
    """
    from ..agents.oracle import solve

    suite = suite if isinstance(suite, Suite) else parse_suite(suite)
    level = level if isinstance(level, Level) else parse_level(level)
    task = None
    for attempt in range(MAX_ATTEMPTS):
        try:
            task = _build(suite, level, seed, attempt)
        except SchemaError as exc:
            logger.debug(f"{suite}:{level}:{seed} attempt {attempt}: {exc.message}")
            continue
        if not validate or solve(task.initial_graph, task.goal, task.step_budget) is not None:
            logger.debug(f"generated {task.key} on attempt {attempt}")
            return task
        logger.warning(f"oracle could not solve {task.key} attempt {attempt}, redrawing")
    if task is None:
        raise SchemaError(f"could not lay out {suite}:{level}:{seed}")
    raise SchemaError(f"oracle could not solve {suite}:{level}:{seed}")


def benchmark_cells(suites=None, levels=None) -> list[tuple[Suite, Level]]:
    suites = [s if isinstance(s, Suite) else parse_suite(s) for s in suites] if suites else list(Suite)
    levels = [l if isinstance(l, Level) else parse_level(l) for l in levels] if levels else list(Level)
    return [(suite, level) for suite in suites for level in levels]


def generate_benchmark(
    *, suites=None, levels=None, seeds: int = SEEDS_PER_CELL, global_seed: int = 0, validate: bool = True
) -> list[TaskSpec]:
    """Every task of the selected cells; cell seeds run ``global_seed .. global_seed + seeds - 1``."""
    return [
        generate_task(suite, level, global_seed + index, validate=validate)
        for suite, level in benchmark_cells(suites, levels)
        for index in range(seeds)
    ]
