from abc import ABCMeta, abstractmethod
from dataclasses import dataclass, field, replace
from typing import Any

from ..world.base import ActionCommand
from ..world.grammar import format_command


@dataclass(frozen=True, kw_only=True)
class HistoryEntry:
    """An earlier step: the command the agent sent (None if unparseable) and σ."""

    command: ActionCommand | None
    success: bool

    def to_document(self) -> dict[str, Any]:
        return {"command": format_command(self.command) if self.command else "", "success": self.success}


@dataclass(frozen=True, kw_only=True)
class TaskMeta:
    suite: str
    level: str
    seed: int

    def to_document(self) -> dict[str, Any]:
        return {"suite": self.suite, "level": self.level, "seed": self.seed}


@dataclass(frozen=True, kw_only=True)
class PolicyQuery:
    observation: str
    instruction: str
    history: tuple[HistoryEntry, ...] = ()
    step: int = 0
    budget: int = 1
    # whether σ for earlier steps is shown to the agent
    feedback: bool = True
    task: TaskMeta | None = None

    def __post_init__(self):
        if len(self.history) != self.step:
            raise ValueError(f"history holds {len(self.history)} entries at step {self.step}")

    def replace(self, **kwargs) -> "PolicyQuery":
        return replace(self, **kwargs)


@dataclass(frozen=True, kw_only=True)
class PolicyResponse:
    text: str
    reasoning: str | None = None

    def __bool__(self):
        return bool(self.text.strip())


@dataclass(kw_only=True)
class BasePolicy(metaclass=ABCMeta):
    """An agent answering one query per step."""

    name: str = field(default="policy")

    @abstractmethod
    async def __call__(self, query: PolicyQuery) -> PolicyResponse:
        ...

    async def aclose(self):
        """Release transport resources; most policies hold none."""
