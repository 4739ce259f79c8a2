from .base import BasePolicy, HistoryEntry, PolicyQuery, PolicyResponse, TaskMeta
from .collection import AGENT_KINDS_BY_KEY, AgentOptions, resolve_policy, split_spec
from .oracle import OraclePolicy, oracle_next_action, plan, solve
from .prompt import format_prompt
from .remote import RemotePolicy, build_request, query_from_request

__all__ = [
    "AGENT_KINDS_BY_KEY",
    "AgentOptions",
    "BasePolicy",
    "HistoryEntry",
    "OraclePolicy",
    "PolicyQuery",
    "PolicyResponse",
    "RemotePolicy",
    "TaskMeta",
    "build_request",
    "format_prompt",
    "oracle_next_action",
    "plan",
    "query_from_request",
    "resolve_policy",
    "solve",
    "split_spec",
]
