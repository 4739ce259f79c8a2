"""Agent specs accepted on the command line and the policies they build."""

from collections.abc import Callable
from dataclasses import dataclass

from ..errors import SchemaError
from ..world.base import GoalSpec
from .base import BasePolicy
from .oracle import DEFAULT_EXPANSION_CAP, OraclePolicy
from .remote import DEFAULT_RETRIES, DEFAULT_TIMEOUT_MS, RemotePolicy


@dataclass(frozen=True, kw_only=True)
class AgentOptions:
    goal: GoalSpec | None = None
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    retries: int = DEFAULT_RETRIES
    cap: int = DEFAULT_EXPANSION_CAP


def _oracle(argument: str, options: AgentOptions) -> BasePolicy:
    if options.goal is None:
        raise SchemaError("the oracle agent needs the task goal")
    return OraclePolicy(goal=options.goal, cap=options.cap)


def _remote(argument: str, options: AgentOptions) -> BasePolicy:
    return RemotePolicy(endpoint=argument, timeout_ms=options.timeout_ms, retries=options.retries, name=argument)


def _claude(argument: str, options: AgentOptions) -> BasePolicy:
    # imported lazily so the oracle and remote agents work without API credentials
    from .claude import ClaudePolicy

    kwargs = {"timeout_ms": options.timeout_ms, "retries": options.retries}
    if argument:
        kwargs["model"] = argument
    return ClaudePolicy(**kwargs)


@dataclass(frozen=True, kw_only=True)
class AgentKind:
    key: str
    build: Callable[[str, AgentOptions], BasePolicy]
    # whether one policy instance can serve many tasks
    shared: bool = True


AGENT_KINDS: list[AgentKind] = [
    AgentKind(key="oracle", build=_oracle, shared=False),
    AgentKind(key="remote", build=_remote),
    AgentKind(key="claude", build=_claude),
]

AGENT_KINDS_BY_KEY = {kind.key: kind for kind in AGENT_KINDS}


def split_spec(spec: str) -> tuple[AgentKind, str]:
    """``oracle``, ``remote:<url>``, ``http(s)://...``, ``tcp://host:port`` or ``claude[:model]``."""
    if spec.startswith(("http://", "https://", "tcp://")):
        return AGENT_KINDS_BY_KEY["remote"], spec
    key, _, argument = spec.partition(":")
    kind = AGENT_KINDS_BY_KEY.get(key)
    if kind is None:
        raise SchemaError(f"unknown agent {spec!r}; expected one of {', '.join(AGENT_KINDS_BY_KEY)}")
    if kind.key == "remote" and not argument:
        raise SchemaError("remote agent needs an endpoint, e.g. remote:http://localhost:8000/act")
    return kind, argument


def resolve_policy(spec: str, **options) -> BasePolicy:
    kind, argument = split_spec(spec)
    return kind.build(argument, AgentOptions(**options))
