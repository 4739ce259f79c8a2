"""Fixed waypoint scripts, one per verb.

Every script runs approach, interact and retract. Only the interact stage changes
the world; each stage carries a verifier that returns a failure message or None.
"""

from dataclasses import dataclass
from typing import Callable

from ..graph.base import ROBOT, Predicate, RelationEdge, SceneGraph, StateFact, UnaryState, invariant_problems
from .base import Verb

Verifier = Callable[[SceneGraph, str | None, str | None], str | None]


def _target_present(sg: SceneGraph, target: str | None, held: str | None) -> str | None:
    if target is not None and target not in sg.nodes:
        return f"{target} vanished"
    return None


def _graph_sound(sg: SceneGraph, target: str | None, held: str | None) -> str | None:
    problems = invariant_problems(sg)
    return problems[0] if problems else None


def _nothing(sg: SceneGraph, target: str | None, held: str | None) -> str | None:
    return None


def _holds(sg: SceneGraph, target: str | None, held: str | None) -> str | None:
    if RelationEdge(ROBOT, Predicate.HOLDING, target) not in sg.edges or sg.robot.held_object != target:
        return f"gripper does not hold {target}"
    return None


def _relation(predicate: Predicate) -> Verifier:
    def verify(sg: SceneGraph, target: str | None, held: str | None) -> str | None:
        if RelationEdge(held, predicate, target) not in sg.edges:
            return f"{held} is not {predicate} {target}"
        if sg.robot.held_object is not None:
            return f"gripper still holds {sg.robot.held_object}"
        return None

    return verify


def _state(state: UnaryState) -> Verifier:
    def verify(sg: SceneGraph, target: str | None, held: str | None) -> str | None:
        if StateFact(target, state) not in sg.state_facts:
            return f"{target} is not {state}"
        return None

    return verify


@dataclass(frozen=True, kw_only=True)
class Stage:
    name: str
    verify: Verifier
    applies_effect: bool = False


@dataclass(frozen=True, kw_only=True)
class WaypointScript:
    verb: Verb
    stages: tuple[Stage, ...]


def _script(verb: Verb, check: Verifier) -> WaypointScript:
    return WaypointScript(
        verb=verb,
        stages=(
            Stage(name="approach", verify=_target_present),
            Stage(name="interact", verify=check, applies_effect=True),
            Stage(name="retract", verify=_graph_sound),
        ),
    )


SCRIPTS: list[WaypointScript] = [
    _script(Verb.PICK, _holds),
    _script(Verb.PLACE_ON, _relation(Predicate.ONTOP)),
    _script(Verb.PLACE_INSIDE, _relation(Predicate.INSIDE)),
    _script(Verb.OPEN, _state(UnaryState.OPEN)),
    _script(Verb.CLOSE, _state(UnaryState.CLOSED)),
    _script(Verb.PUSH, _state(UnaryState.CLOSED)),
    _script(Verb.TURN_ON, _state(UnaryState.ON)),
    _script(Verb.TURN_OFF, _state(UnaryState.OFF)),
    WaypointScript(
        verb=Verb.END,
        stages=tuple(Stage(name=name, verify=_nothing) for name in ("approach", "interact", "retract")),
    ),
]

SCRIPTS_BY_VERB = {script.verb: script for script in SCRIPTS}
