"""Reference planner.

Greedy breadth-first search over the symbolic state space: from the observed
state, find the nearest state that satisfies more goal facts than the current
one and emit the first action of that plan. Successors come from the same
precondition and effect rules the engine applies, restricted to objects the goal
mentions and to whatever blocks them.
"""

import logging
from collections import deque
from dataclasses import dataclass

from ..errors import BenchError
from ..graph.base import Fact, Predicate, RelationEdge, SceneGraph, StateFact
from ..graph.codec import parse
from ..graph.normalize import normalize
from ..world import rules
from ..world.base import ActionCommand, GoalSpec, Verb
from ..world.engine import execute, satisfied
from ..world.rules import SURFACE_CATEGORIES, Facts, Layout
from .base import BasePolicy, PolicyQuery, PolicyResponse

logger = logging.getLogger(__name__)

DEFAULT_EXPANSION_CAP = 50_000


def _score(facts: Facts, goal: frozenset[Fact]) -> int:
    return sum(1 for fact in goal if fact in facts.edges or fact in facts.states)


@dataclass(frozen=True, kw_only=True)
class _Candidates:
    picks: tuple[str, ...]
    supports: tuple[str, ...]
    destinations: tuple[str, ...]
    articulated: tuple[str, ...]
    switches: tuple[str, ...]

    @classmethod
    def of(cls, facts: Facts, layout: Layout, goal: frozenset[Fact]) -> "_Candidates":
        relations = [f for f in goal if isinstance(f, RelationEdge) and f.object in layout]
        pending = {f.subject for f in relations if f not in facts.edges and f.subject in layout}
        picks = set(pending)
        for edge in facts.edges:
            if edge.predicate != Predicate.ONTOP or edge.subject not in layout or edge.object not in layout:
                continue
            if layout.nodes[edge.object].category not in SURFACE_CATEGORIES:
                picks.add(edge.subject)
        supports = {n.id for n in layout.nodes.values() if n.category in SURFACE_CATEGORIES}
        supports |= {f.object for f in relations if f.predicate == Predicate.ONTOP}
        destinations = {f.object for f in relations if f.predicate == Predicate.INSIDE}
        state_nodes = {f.node for f in goal if isinstance(f, StateFact) and f.node in layout}
        articulated = set(destinations) | state_nodes
        for edge in facts.edges:
            if edge.predicate == Predicate.INSIDE and edge.subject in pending:
                articulated.add(edge.object)
        for node_id in list(articulated):
            if node_id in layout:
                articulated.update(layout.siblings(node_id))
        return cls(
            picks=tuple(sorted(picks)),
            supports=tuple(sorted(supports)),
            destinations=tuple(sorted(destinations)),
            articulated=tuple(sorted(n for n in articulated if n in layout and layout.nodes[n].articulated)),
            switches=tuple(sorted(n for n in state_nodes if layout.nodes[n].switchable)),
        )

    def actions(self, facts: Facts) -> list[ActionCommand]:
        if facts.held is not None:
            commands = [ActionCommand(verb=Verb.PLACE_ON, target=t) for t in self.supports]
            commands += [ActionCommand(verb=Verb.PLACE_INSIDE, target=t) for t in self.destinations]
        else:
            commands = [ActionCommand(verb=Verb.PICK, target=t) for t in self.picks]
            for target in self.articulated:
                commands += [ActionCommand(verb=Verb.OPEN, target=target), ActionCommand(verb=Verb.CLOSE, target=target)]
            for target in self.switches:
                commands += [ActionCommand(verb=Verb.TURN_ON, target=target), ActionCommand(verb=Verb.TURN_OFF, target=target)]
        return sorted(commands, key=lambda c: c.sort_key)


def plan(sg: SceneGraph, goal: GoalSpec, *, cap: int = DEFAULT_EXPANSION_CAP) -> list[ActionCommand] | None:
    """Shortest action sequence that raises the number of satisfied goal facts.

    Returns an empty plan when the goal already holds and None when the search
    exhausts ``cap`` expansions.
    """
    layout = Layout.from_graph(sg)
    targets = goal.atomic_facts(sg.nodes.values())
    root = Facts.from_graph(sg)
    baseline = _score(root, targets)
    if baseline == len(targets):
        return []
    candidates = _Candidates.of(root, layout, targets)

    parents: dict[Facts, tuple[Facts, ActionCommand] | None] = {root: None}
    queue = deque([root])
    expansions = 0
    while queue and expansions < cap:
        state = queue.popleft()
        expansions += 1
        for command in candidates.actions(state):
            if rules.check(state, layout, command.verb, command.target) is not None:
                continue
            successor = rules.apply(state, command.verb, command.target)
            if successor in parents:
                continue
            parents[successor] = (state, command)
            if _score(successor, targets) > baseline:
                steps = []
                cursor = successor
                while parents[cursor] is not None:
                    cursor, step = parents[cursor]
                    steps.append(step)
                logger.debug(f"plan of {len(steps)} steps after {expansions} expansions")
                return steps[::-1]
            queue.append(successor)
    logger.info(f"no plan within {expansions} expansions")
    return None


def next_action(sg: SceneGraph, goal: GoalSpec, *, cap: int = DEFAULT_EXPANSION_CAP) -> ActionCommand:
    try:
        steps = plan(sg, goal, cap=cap)
    except BenchError as exc:
        logger.warning(f"oracle gave up: {exc.message}")
        return ActionCommand.end()
    return steps[0] if steps else ActionCommand.end()


def oracle_next_action(query: PolicyQuery, goal: GoalSpec, *, cap: int = DEFAULT_EXPANSION_CAP) -> PolicyResponse:
    """Next action for the (possibly noisy) observation in ``query``."""
    try:
        sg = normalize(parse(query.observation, strict=False))
    except BenchError as exc:
        logger.warning(f"unreadable observation: {exc.message}")
        return PolicyResponse(text="end", reasoning="observation did not parse")
    command = next_action(sg, goal, cap=cap)
    return PolicyResponse(text=str(command), reasoning=f"step {query.step}: {command}")


@dataclass(kw_only=True)
class OraclePolicy(BasePolicy):
    goal: GoalSpec
    cap: int = DEFAULT_EXPANSION_CAP
    name: str = "oracle"

    async def __call__(self, query: PolicyQuery) -> PolicyResponse:
        return oracle_next_action(query, self.goal, cap=self.cap)


def solve(sg: SceneGraph, goal: GoalSpec, budget: int, *, cap: int = DEFAULT_EXPANSION_CAP) -> list[ActionCommand] | None:
    """Run the oracle on the engine from ``sg``; the executed commands, ending in end, or None.

    None means the oracle stopped short of the goal, hit a blocked step or ran
    out of ``budget``.
    """
    commands: list[ActionCommand] = []
    graph = sg
    while len(commands) < budget:
        command = next_action(graph, goal, cap=cap)
        commands.append(command)
        if command.verb == Verb.END:
            return commands if satisfied(graph, goal) else None
        result = execute(graph, command)
        if not result:
            logger.info(f"oracle step {command} failed: {result.log[-1].message if result.log else 'no log'}")
            return None
        graph = result.graph
    return None
