"""
Multiplicative augmentation of data records.

Each record expands into the product of its transforms: graph-order shuffles,
synonym swaps, rephrasings of the prompt or instruction, paraphrases of
grounding descriptions and, for goal interpretation, alternative renderings of
the goal graph. Variant 0 of every transform is the identity, so the original
record is always the first one emitted.
"""

import itertools
import json
import logging
import random
import re
from dataclasses import dataclass
from functools import cache
from importlib import resources
from typing import Any, Iterable, Iterator, Mapping

from ..graph.codec import TextFormat, parse, serialize
from .extractors import PLANNING_FAMILY, DataRecord, Modality
from .rephrase import BaseRephraser, TemplateRephraser

logger = logging.getLogger(__name__)

# input and output fields holding serialized graphs
GRAPH_FIELDS = ("scene_graph", "target_scene_graph")

_ID = re.compile(r"\b([a-z][a-z_]*?)_(\d{2,})\b")


@cache
def synonym_table() -> dict[str, str]:
    return json.loads(resources.files(__package__).joinpath("synonyms.json").read_text())


@dataclass(frozen=True, kw_only=True)
class AugmentationPlan:
    shuffle: int = 3
    swap: int = 2
    rephrase: int = 2
    paraphrase: int = 3
    end_states: int = 4

    def __post_init__(self):
        if min(self.shuffle, self.swap, self.rephrase, self.paraphrase, self.end_states) < 1:
            raise ValueError("every transform keeps at least the original")
        if self.swap > 2 or self.end_states > 4:
            raise ValueError("at most one synonym swap and four end-state renderings")

    def multiplier(self, modality: Modality) -> int:
        if modality == Modality.GROUNDING:
            return self.paraphrase * self.shuffle * self.swap
        if modality == Modality.GOAL_INTERPRETATION:
            return self.shuffle * self.swap * self.rephrase * self.end_states
        return self.shuffle * self.swap * self.rephrase

    def family_multiplier(self) -> int:
        return sum(self.multiplier(m) for m in PLANNING_FAMILY)


DEFAULT_PLAN = AugmentationPlan()


def _walk(value: Any, fn) -> Any:
    if isinstance(value, str):
        return fn(value)
    if isinstance(value, list):
        return [_walk(v, fn) for v in value]
    if isinstance(value, dict):
        return {k: _walk(v, fn) for k, v in value.items()}
    return value


def _strings(value: Any) -> Iterator[str]:
    if isinstance(value, str):
        yield value
    elif isinstance(value, list):
        for v in value:
            yield from _strings(v)
    elif isinstance(value, dict):
        for v in value.values():
            yield from _strings(v)


def shuffle_graph_text(text: str, rng: random.Random) -> str:
    """The same graph with its nodes and edges listed in a random order."""
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        rng.shuffle(doc["nodes"])
        rng.shuffle(doc["edges"])
        return json.dumps(doc, separators=(",", ":"))
    lines = text.splitlines()
    rng.shuffle(lines)
    return "\n".join(lines)


def _shuffled(record: DataRecord, rng: random.Random) -> DataRecord:
    def reorder(part: dict[str, Any]) -> dict[str, Any]:
        return {k: shuffle_graph_text(v, rng) if k in GRAPH_FIELDS else v for k, v in part.items()}

    output = reorder(record.output) if record.modality == Modality.GROUNDING else record.output
    return DataRecord(modality=record.modality, input=reorder(record.input), output=output, meta=record.meta)


def id_mapping(record: DataRecord, table: Mapping[str, str]) -> dict[str, str] | None:
    """Old id to new id for every object whose category has a synonym.

    Ids of one new category are re-numbered in the order of the old ids. None
    when the renaming would merge two objects into one id.
    """
    ids = sorted({m.group(0) for s in _strings([record.input, record.output]) for m in _ID.finditer(s)})
    renamed = [i for i in ids if _ID.fullmatch(i).group(1) in table]
    if not renamed:
        return {}
    kept = {i for i in ids if i not in renamed}
    counters: dict[str, int] = {}
    mapping = {}
    for old in renamed:
        stem = table[_ID.fullmatch(old).group(1)]
        counters[stem] = counters.get(stem, 0) + 1
        mapping[old] = f"{stem}_{counters[stem]:02d}"
    new_ids = set(mapping.values())
    if new_ids & kept or len(new_ids) != len(mapping):
        return None
    return mapping


def _swapped(record: DataRecord, table: Mapping[str, str]) -> DataRecord | None:
    mapping = id_mapping(record, table)
    if mapping is None:
        return None
    stems = {_ID.fullmatch(old).group(1) for old in mapping}
    words = re.compile(r"\b(" + "|".join(sorted(map(re.escape, stems), key=len, reverse=True)) + r")(e?s)?\b") if stems else None

    def substitute(text: str) -> str:
        text = _ID.sub(lambda m: mapping.get(m.group(0), m.group(0)), text)
        if words is not None:
            text = words.sub(lambda m: table[m.group(1)] + (m.group(2) and "s" or ""), text)
        return text

    return DataRecord(
        modality=record.modality,
        input=_walk(record.input, substitute),
        output=_walk(record.output, substitute),
        meta=record.meta,
    )


def _rephrased(record: DataRecord, rephraser: BaseRephraser, variant: int) -> DataRecord:
    key = "instruction" if "instruction" in record.input else "description" if "description" in record.input else "prompt"
    return DataRecord(
        modality=record.modality,
        input={**record.input, key: rephraser(record.input[key], variant)},
        output=record.output,
        meta=record.meta,
    )


def end_state_text(text: str, variant: int, rng: random.Random) -> str:
    """Rendering ``variant`` of a goal graph: structured or prompt text, each sorted or shuffled."""
    sg = parse(text, strict=False)
    rendered = serialize(sg, TextFormat.STRUCTURED if variant < 2 else TextFormat.PROMPT)
    return shuffle_graph_text(rendered, rng) if variant % 2 else rendered


def _tagged(record: DataRecord, tags: list[str]) -> DataRecord:
    return DataRecord(
        modality=record.modality, input=record.input, output=record.output, meta={**record.meta, "augmentation": tags}
    )


def augment_record(
    record: DataRecord,
    plan: AugmentationPlan,
    rng: random.Random,
    rephraser: BaseRephraser,
    table: Mapping[str, str],
) -> Iterator[DataRecord]:
    swapped = _swapped(record, table) if plan.swap > 1 else None
    if plan.swap > 1 and swapped is None:
        logger.warning(f"synonym swap would duplicate ids in {record.meta.get('trajectory')}; swap skipped")
    bases = [("orig", record)] + ([("swap", swapped)] if swapped is not None else [])

    if record.modality == Modality.GROUNDING:
        wording = [(f"paraphrase{k}" if k else "", k) for k in range(plan.paraphrase)]
    else:
        wording = [(f"rephrase{k}" if k else "", k) for k in range(plan.rephrase)]
    renderings = range(plan.end_states) if record.modality == Modality.GOAL_INTERPRETATION else range(1)

    for (swap_tag, base), shuffle, (word_tag, variant), end in itertools.product(
        bases, range(plan.shuffle), wording, renderings
    ):
        current = _rephrased(base, rephraser, variant) if variant else base
        if shuffle:
            current = _shuffled(current, rng)
        if record.modality == Modality.GOAL_INTERPRETATION and end:
            current = DataRecord(
                modality=current.modality,
                input=current.input,
                output={"scene_graph": end_state_text(current.output["scene_graph"], end, rng)},
                meta=current.meta,
            )
        tags = [t for t in (swap_tag if swap_tag != "orig" else "", f"shuffle{shuffle}" if shuffle else "", word_tag) if t]
        if end:
            tags.append(f"end{end}")
        yield _tagged(current, tags)


def iter_augment(
    records: Iterable[DataRecord],
    plan: AugmentationPlan = DEFAULT_PLAN,
    rng: random.Random | None = None,
    rephraser: BaseRephraser | None = None,
) -> Iterator[DataRecord]:
    """Augment ``records`` lazily; each record gets its own generator seeded from ``rng``."""
    rng = rng or random.Random(0)
    rephraser = rephraser or TemplateRephraser()
    table = synonym_table()
    for record in records:
        yield from augment_record(record, plan, random.Random(rng.random()), rephraser, table)


def augment(records, plan: AugmentationPlan = DEFAULT_PLAN, rng: random.Random | None = None, rephraser=None) -> list[DataRecord]:
    return list(iter_augment(records, plan, rng, rephraser))


@dataclass(frozen=True, kw_only=True)
class AuditRow:
    modality: str
    base: int
    multiplier: int

    @property
    def final(self) -> int:
        return self.base * self.multiplier


def count_audit(bases: Mapping[str, int], plan: AugmentationPlan = DEFAULT_PLAN) -> list[AuditRow]:
    """
    Rows of base count, multiplier and final count.

    ``planning`` counts step pairs, each feeding one record to every planning
    sub-modality; ``forward_reasoning_long`` counts the extra multi-step
    forward reasoning records.
    """
    rows = []
    if "grounding" in bases:
        rows.append(AuditRow(modality="grounding", base=bases["grounding"], multiplier=plan.multiplier(Modality.GROUNDING)))
    if "planning" in bases:
        rows.append(AuditRow(modality="planning", base=bases["planning"], multiplier=plan.family_multiplier()))
    if bases.get("forward_reasoning_long"):
        rows.append(
            AuditRow(
                modality="forward_reasoning_long",
                base=bases["forward_reasoning_long"],
                multiplier=plan.multiplier(Modality.FORWARD_REASONING),
            )
        )
    if "goal_interpretation" in bases:
        rows.append(
            AuditRow(
                modality="goal_interpretation",
                base=bases["goal_interpretation"],
                multiplier=plan.multiplier(Modality.GOAL_INTERPRETATION),
            )
        )
    return rows


def audit_bases(records: Iterable[DataRecord]) -> dict[str, int]:
    """Base counts for :func:`count_audit` from un-augmented records."""
    counts = {m: 0 for m in Modality}
    long_horizon = 0
    for record in records:
        counts[record.modality] += 1
        if record.modality == Modality.FORWARD_REASONING and record.meta.get("horizon", 1) != 1:
            long_horizon += 1
    return {
        "grounding": counts[Modality.GROUNDING],
        "planning": counts[Modality.WORLD_MODELING],
        "forward_reasoning_long": long_horizon,
        "goal_interpretation": counts[Modality.GOAL_INTERPRETATION],
    }
