"""Action text grammar.

``<verb> <target-id>`` with verbs pick, place on, place inside, put on, put inside,
open, close, turn on, turn off, push, and a standalone ``end`` / ``task end``. Verbs
are case-insensitive, ``put`` aliases ``place`` and ``LLM:`` prefixes are ignored.
"""

import re

from ..errors import ParseError
from .base import ActionCommand, Verb

_VERBS = {
    "pick": Verb.PICK,
    "place on": Verb.PLACE_ON,
    "place inside": Verb.PLACE_INSIDE,
    "put on": Verb.PLACE_ON,
    "put inside": Verb.PLACE_INSIDE,
    "open": Verb.OPEN,
    "close": Verb.CLOSE,
    "turn on": Verb.TURN_ON,
    "turn off": Verb.TURN_OFF,
    "push": Verb.PUSH,
}
_VERB_WORDS = {verb: text for text, verb in reversed(list(_VERBS.items()))}

# words that can follow a verb in prose but never name an object
STOPWORDS = frozenset(
    {
        "a", "all", "an", "and", "any", "as", "at", "by", "each", "every", "from", "in",
        "inside", "into", "is", "it", "its", "of", "on", "onto", "or", "that", "the",
        "them", "then", "these", "this", "those", "to", "up", "with",
    }
)

_ACTION = re.compile(
    r"\b(?P<verb>place[\s_]+on|place[\s_]+inside|put[\s_]+on|put[\s_]+inside"
    r"|turn[\s_]+on|turn[\s_]+off|pick|open|close|push)"
    r"(?:\s+up)?(?:\s+the)?\s+(?P<target>[a-z][a-z0-9_]*(?:\.[a-z][a-z0-9_]*)?)\b",
    re.IGNORECASE,
)
_END = re.compile(r"^(?:task\s+)?end[.!]*$", re.IGNORECASE)
_PREFIX = re.compile(r"^\s*llm\s*:\s*", re.IGNORECASE)
_SEGMENTS = re.compile(r"[,;\n]|\bthen\b|\.(?=\s|$)", re.IGNORECASE)


def _command(verb_text: str, target: str) -> ActionCommand | None:
    verb = _VERBS[" ".join(verb_text.lower().replace("_", " ").split())]
    target = target.lower()
    base, _, qualifier = target.partition(".")
    if base in STOPWORDS:
        return None
    return ActionCommand(verb=verb, target=base, qualifier=qualifier or None)


def scan(text: str) -> list[ActionCommand]:
    """Every action the text names, in order; unrelated prose contributes nothing."""
    commands: list[ActionCommand] = []
    for segment in _SEGMENTS.split(text):
        segment = _PREFIX.sub("", segment).strip()
        if not segment:
            continue
        if _END.match(segment):
            commands.append(ActionCommand.end())
            continue
        for match in _ACTION.finditer(segment):
            command = _command(match["verb"], match["target"])
            if command is not None:
                commands.append(command)
    return commands


def parse_command(text: str) -> ActionCommand:
    """Parse text holding exactly one action."""
    commands = scan(text)
    if len(commands) != 1:
        raise ParseError(f"expected one action, found {len(commands)} in {text!r}")
    return commands[0]


def format_command(command: ActionCommand) -> str:
    if command.verb == Verb.END:
        return "end"
    target = command.target if command.qualifier is None else f"{command.target}.{command.qualifier}"
    return f"{_VERB_WORDS[command.verb]} {target}"
