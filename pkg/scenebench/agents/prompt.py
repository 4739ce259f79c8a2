"""Prompt text for language-model agents."""

from ..errors import BenchError
from ..graph.codec import parse, to_prompt_text
from ..world.grammar import format_command
from .base import HistoryEntry, PolicyQuery

OUTPUT_CONTRACT = (
    "Reply with exactly one atomic action of the form `<verb> <object_id>`, where verb is one of "
    "pick, place on, place inside, open, close, turn on, turn off, push, and object_id is a node id "
    "from the scene graph. Reply `end` once the instruction is fulfilled."
)


def _scene_text(observation: str) -> str:
    try:
        return to_prompt_text(parse(observation, strict=False))
    except BenchError:
        return observation.strip()


def _history_line(index: int, entry: HistoryEntry, feedback: bool) -> str:
    command = format_command(entry.command) if entry.command else "(no action)"
    if not feedback:
        return f"{index}. {command}"
    return f"{index}. {command} -> {'success' if entry.success else 'failure'}"


def format_prompt(query: PolicyQuery) -> str:
    history = "\n".join(_history_line(i, entry, query.feedback) for i, entry in enumerate(query.history, start=1))
    return (
        f"## Instruction\n{query.instruction}\n\n"
        f"## Scene graph\n{_scene_text(query.observation)}\n\n"
        f"## History\n{history}\n\n"
        f"## Step\n{query.step + 1} of {query.budget}\n\n"
        f"## Output\n{OUTPUT_CONTRACT}\n"
    )
