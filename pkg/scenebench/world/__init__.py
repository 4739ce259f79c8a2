from .base import ActionCommand, ExecutionResult, Feasibility, GoalSpec, ObjectFilter, QuantifiedClause, Verb, Verdict
from .engine import execute, preconditions, satisfied, transition
from .grammar import format_command, parse_command, scan

__all__ = [
    "ActionCommand",
    "ExecutionResult",
    "Feasibility",
    "GoalSpec",
    "ObjectFilter",
    "QuantifiedClause",
    "Verb",
    "Verdict",
    "execute",
    "format_command",
    "parse_command",
    "preconditions",
    "satisfied",
    "scan",
    "transition",
]
