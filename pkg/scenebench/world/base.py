from dataclasses import dataclass, field, replace
from .._compat import StrEnum
from typing import Any, Iterable, Mapping

from ..errors import SchemaError
from ..graph.base import Fact, ObjectNode, Predicate, RelationEdge, SceneGraph, StateFact


class Verb(StrEnum):
    PICK = "pick"
    PLACE_ON = "place_on"
    PLACE_INSIDE = "place_inside"
    OPEN = "open"
    CLOSE = "close"
    TURN_ON = "turn_on"
    TURN_OFF = "turn_off"
    PUSH = "push"
    END = "end"


VERB_ORDER = {verb: index for index, verb in enumerate(Verb)}


@dataclass(frozen=True, kw_only=True)
class ActionCommand:
    """One ``action type + target object`` primitive."""

    verb: Verb
    target: str | None = None
    # dotted suffix, ``cabinet_01.drawer_02`` -> qualifier ``drawer_02``
    qualifier: str | None = None

    def __post_init__(self):
        if (self.verb == Verb.END) != (self.target is None):
            raise SchemaError(f"{self.verb} {'takes no' if self.verb == Verb.END else 'needs a'} target")

    @classmethod
    def end(cls) -> "ActionCommand":
        return cls(verb=Verb.END)

    @property
    def sort_key(self) -> tuple:
        return (VERB_ORDER[self.verb], self.target or "", self.qualifier or "")

    def __str__(self):
        from .grammar import format_command

        return format_command(self)


@dataclass(frozen=True, kw_only=True)
class ObjectFilter:
    categories: frozenset[str] = frozenset()
    attributes: tuple[tuple[str, str], ...] = ()

    def matches(self, node: ObjectNode) -> bool:
        if self.categories and node.category not in self.categories:
            return False
        return all(node.attributes.get(key) == value for key, value in self.attributes)

    def to_document(self) -> dict[str, Any]:
        return {"categories": sorted(self.categories), "attributes": dict(self.attributes)}

    @classmethod
    def from_document(cls, doc: Mapping[str, Any]) -> "ObjectFilter":
        return cls(
            categories=frozenset(doc.get("categories", [])),
            attributes=tuple(sorted((str(k), str(v)) for k, v in doc.get("attributes", {}).items())),
        )


@dataclass(frozen=True, kw_only=True)
class QuantifiedClause:
    """For every node matching ``filter``, ``predicate(node, object)`` holds."""

    filter: ObjectFilter
    predicate: Predicate
    object: str

    def expand(self, nodes: Iterable[ObjectNode]) -> frozenset[RelationEdge]:
        return frozenset(
            RelationEdge(node.id, self.predicate, self.object)
            for node in nodes
            if node.id != self.object and self.filter.matches(node)
        )

    def to_document(self) -> dict[str, Any]:
        return {"filter": self.filter.to_document(), "predicate": str(self.predicate), "object": self.object}


@dataclass(frozen=True, kw_only=True)
class GoalSpec:
    instruction: str
    facts: frozenset[Fact] = frozenset()
    clauses: tuple[QuantifiedClause, ...] = ()

    def __post_init__(self):
        if not self.facts and not self.clauses:
            raise SchemaError("goal needs at least one fact or quantified clause")

    def atomic_facts(self, nodes: Iterable[ObjectNode]) -> frozenset[Fact]:
        nodes = list(nodes)
        expanded = set(self.facts)
        for clause in self.clauses:
            expanded |= clause.expand(nodes)
        return frozenset(expanded)

    def replace(self, **kwargs) -> "GoalSpec":
        return replace(self, **kwargs)

    def to_document(self) -> dict[str, Any]:
        facts = []
        for fact in self.facts:
            if isinstance(fact, StateFact):
                facts.append({"subject": fact.node, "predicate": str(fact.state), "object": None})
            else:
                facts.append({"subject": fact.subject, "predicate": str(fact.predicate), "object": fact.object})
        facts.sort(key=lambda d: (d["subject"], d["predicate"], d["object"] or ""))
        return {
            "instruction": self.instruction,
            "facts": facts,
            "clauses": [clause.to_document() for clause in self.clauses],
        }

    @classmethod
    def from_document(cls, doc: Mapping[str, Any]) -> "GoalSpec":
        try:
            facts: set[Fact] = set()
            for raw in doc.get("facts", []):
                if raw.get("object") is None:
                    facts.add(StateFact(raw["subject"], raw["predicate"]))
                else:
                    facts.add(RelationEdge(raw["subject"], Predicate(raw["predicate"]), raw["object"]))
            clauses = tuple(
                QuantifiedClause(
                    filter=ObjectFilter.from_document(raw["filter"]),
                    predicate=Predicate(raw["predicate"]),
                    object=raw["object"],
                )
                for raw in doc.get("clauses", [])
            )
            return cls(instruction=doc.get("instruction", ""), facts=frozenset(facts), clauses=clauses)
        except (KeyError, ValueError, TypeError) as exc:
            raise SchemaError(f"malformed goal: {exc}") from exc


class VerdictKind(StrEnum):
    PASS = "pass"
    FAIL = "fail"
    BLOCKED = "blocked"


@dataclass(frozen=True, kw_only=True)
class Verdict:
    stage: int
    kind: VerdictKind
    message: str = ""

    def __bool__(self):
        return self.kind == VerdictKind.PASS

    def to_document(self) -> dict[str, Any]:
        return {"stage": self.stage, "verdict": str(self.kind), "message": self.message}


@dataclass(frozen=True, kw_only=True)
class Feasibility:
    reason: str | None = None

    def __bool__(self):
        return self.reason is None

    @classmethod
    def blocked(cls, reason: str) -> "Feasibility":
        return cls(reason=reason)


OK = Feasibility()


@dataclass(frozen=True, kw_only=True)
class ExecutionResult:
    success: bool
    graph: SceneGraph
    log: tuple[Verdict, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.success and not all(self.log):
            raise SchemaError("a successful execution cannot carry failed verdicts")

    def __bool__(self):
        return self.success
