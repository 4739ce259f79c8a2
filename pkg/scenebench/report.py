"""Tables and plot matrices over episode result files."""

import json
from pathlib import Path
from typing import Any, Iterable, Mapping

from rich.console import Console
from rich.table import Table

from .bench.metrics import CellSummary, plan_lengths, summarize
from .errors import SchemaError

REQUIRED_FIELDS = ("suite", "level", "noise_ratio", "success", "task_progress", "steps_used")


def read_records(paths: Iterable[str | Path]) -> list[dict[str, Any]]:
    records = []
    for path in paths:
        with Path(path).open() as f:
            for number, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise SchemaError(f"{path}:{number}: not a JSON document ({exc.msg})") from exc
                missing = [k for k in REQUIRED_FIELDS if k not in record]
                if missing:
                    raise SchemaError(f"{path}:{number}: episode record misses {', '.join(missing)}")
                records.append(record)
    return records


def summary_table(summaries: list[CellSummary], title: str = "Benchmark summary") -> Table:
    table = Table(title=title)
    table.add_column("Cell", style="cyan")
    table.add_column("Noise", justify="right")
    table.add_column("Agent")
    table.add_column("Episodes", justify="right")
    table.add_column("Mean TP", justify="right")
    table.add_column("Success", justify="right")
    table.add_column("Mean steps", justify="right")
    for s in summaries:
        table.add_row(
            s.cell,
            f"{s.noise_ratio:.0%}",
            s.agent_id,
            str(s.episodes),
            f"{s.mean_task_progress:.3f}",
            f"{s.success_rate:.3f}",
            f"{s.mean_steps:.1f}",
        )
    return table


def noise_table(summaries: list[CellSummary]) -> Table:
    """Mean TP with one row per cell and one column per noise ratio."""
    matrix = plot_matrix(summaries)
    table = Table(title="Task progress under scene graph noise")
    table.add_column("Cell", style="cyan")
    for noise in matrix["cols"]:
        table.add_column(f"{noise:.0%}", justify="right")
    for row, values in zip(matrix["rows"], matrix["values"]):
        table.add_row(row, *("-" if v is None else f"{v:.3f}" for v in values))
    return table


def plot_matrix(summaries: list[CellSummary]) -> dict[str, Any]:
    """``{rows: cells, cols: noise ratios, values: mean TP}``; cells of several agents are averaged."""
    rows = sorted({s.cell for s in summaries})
    cols = sorted({s.noise_ratio for s in summaries})
    cells: dict[tuple[str, float], list[CellSummary]] = {}
    for s in summaries:
        cells.setdefault((s.cell, s.noise_ratio), []).append(s)
    values = []
    for row in rows:
        line = []
        for col in cols:
            group = cells.get((row, col))
            if not group:
                line.append(None)
                continue
            episodes = sum(s.episodes for s in group)
            line.append(round(sum(s.mean_task_progress * s.episodes for s in group) / episodes, 6))
        values.append(line)
    return {"rows": rows, "cols": cols, "values": values}


def horizon_line(records: list[Mapping[str, Any]]) -> str:
    mean = plan_lengths(records, suites=("sas", "gcg"))
    return f"mean successful plan length over SAS and GCG: {mean:.2f} steps"


def print_report(records: list[Mapping[str, Any]], console: Console | None = None) -> list[CellSummary]:
    console = console or Console()
    summaries = summarize(records)
    console.print(summary_table(summaries))
    if len({s.noise_ratio for s in summaries}) > 1:
        console.print(noise_table(summaries))
    console.print(horizon_line(records))
    return summaries
