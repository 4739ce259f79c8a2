"""Command line entry: bench, datagen, grade, replay, report and serve."""

import argparse
import asyncio
import json
import logging
import os
import random
import sys
from pathlib import Path
from typing import Any

from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from . import __version__
from .agents.collection import resolve_policy, split_spec
from .bench.noise import NoiseMode
from .bench.suites import TaskSpec, generate_benchmark
from .config import RunConfig, resolve
from .errors import BenchError, SchemaError
from .loop import Termination, run_episode
from .report import plot_matrix, print_report, read_records
from .rewards import grade_record

logger = logging.getLogger(__name__)

console = Console()

EXIT_BENCH_ERROR = 2
EXIT_TRANSPORT = 3


def _floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def _names(text: str) -> list[str] | None:
    parts = [p.strip().lower() for p in text.split(",") if p.strip()]
    return None if parts == ["all"] else parts


def _add_run_options(parser: argparse.ArgumentParser):
    """Flags that map onto RunConfig; all default to None so the config file can fill them."""
    parser.add_argument("--config", help="JSON config file (falls back to $GSR_CONFIG)")
    parser.add_argument("--suite", type=_names, help="sod, sas, gcg or all (comma separated)")
    parser.add_argument("--level", "--levels", dest="level", type=_names, help="easy, general, complex or all")
    parser.add_argument("--seeds", type=int, help="seeds per cell")
    parser.add_argument("--seed", type=int, help="global seed")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--tau", type=float, help="inside threshold on the intersection ratio")


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    names = {
        "suite": "suites",
        "level": "levels",
        "seeds": "seeds",
        "seed": "seed",
        "out": "out",
        "tau": "tau",
        "trials": "trials",
        "noise": "noise",
        "noise_mode": "noise_mode",
        "agent": "agent",
        "timeout_ms": "timeout_ms",
        "retries": "retries",
        "parallel": "parallel",
        "weights": "weights",
        "alpha": "alpha",
        "beta": "beta",
    }
    overrides = {key: getattr(args, flag) for flag, key in names.items() if getattr(args, flag, None) is not None}
    if getattr(args, "per_episode_noise", False):
        overrides["per_episode_noise"] = True
    if getattr(args, "no_feedback", False):
        overrides["feedback"] = False
    return overrides


def _write_meta(out: Path, config: RunConfig, command: str, **extra):
    meta = {"command": command, "version": __version__, "config": config.to_document(), **extra}
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _episode_rng(config: RunConfig, task: TaskSpec, trial: int, noise: float) -> random.Random:
    return random.Random(f"{config.seed}:{task.key}:{trial}:{noise}")


async def _bench(config: RunConfig, tasks: list[TaskSpec], results_path: Path) -> list[dict[str, Any]]:
    """Run every job and append each record to ``results_path`` as its episode finishes.

    Once the run is over the file is rewritten in job order, so reruns compare
    byte for byte whatever ``parallel`` was.
    """
    kind, _ = split_spec(config.agent)
    agent_id = kind.key if kind.key == "oracle" else config.agent
    semaphore = asyncio.Semaphore(config.parallel)
    failed = asyncio.Event()
    jobs = [(task, trial, noise) for task in tasks for noise in config.noise for trial in range(config.trials)]

    async def episode(job: int, task: TaskSpec, trial: int, noise: float) -> dict[str, Any] | None:
        async with semaphore:
            if failed.is_set():
                return None
            policy = resolve_policy(
                config.agent,
                goal=task.goal,
                timeout_ms=config.timeout_ms,
                retries=config.retries,
                cap=config.expansion_cap,
            )
            try:
                result = await run_episode(
                    task=task,
                    policy=policy,
                    rng=_episode_rng(config, task, trial, noise),
                    noise_ratio=noise,
                    noise_mode=NoiseMode(config.noise_mode),
                    per_episode_noise=config.per_episode_noise,
                    feedback=config.feedback,
                    config=config.extraction(),
                )
            finally:
                await policy.aclose()
            if result.termination == Termination.AGENT_ERROR:
                failed.set()
            return {"job": job, **result.to_record(trial=trial, noise_ratio=noise, agent_id=agent_id)}

    records = []
    with results_path.open("w") as f:
        pending = [asyncio.ensure_future(episode(job, *spec)) for job, spec in enumerate(jobs)]
        for future in asyncio.as_completed(pending):
            record = await future
            if record is None:
                continue
            f.write(_record_line(record))
            f.flush()
            records.append(record)
    records.sort(key=lambda r: r["job"])
    _write_sorted(results_path, records)
    return records


def _record_line(record: dict[str, Any]) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n"


def _write_sorted(results_path: Path, records: list[dict[str, Any]]):
    staged = results_path.with_suffix(".jsonl.tmp")
    staged.write_text("".join(_record_line(r) for r in records))
    staged.replace(results_path)


def cmd_bench(args: argparse.Namespace) -> int:
    config = resolve(_overrides(args), args.config)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    tasks = generate_benchmark(suites=config.suites, levels=config.levels, seeds=config.seeds, validate=args.validate)
    logger.info(f"{len(tasks)} tasks, {config.trials} trials, noise {list(config.noise)}, agent {config.agent}")
    _write_meta(out, config, "bench", tasks=len(tasks))

    results_path = out / "results.jsonl"
    records = asyncio.run(_bench(config, tasks, results_path))
    if records:
        print_report(records, console)
    errors = [r for r in records if r["termination"] == str(Termination.AGENT_ERROR)]
    if errors:
        console.print(f"[bold red]agent transport failed; {len(records)} episode records kept in {results_path}[/]")
        return EXIT_TRANSPORT
    console.print(f"[bold green]{len(records)} episodes written to {results_path}[/]")
    return 0


def _audit_table(rows, written: dict[str, int]) -> Table:
    table = Table(title="Data augmentation audit")
    table.add_column("Modality", style="cyan")
    table.add_column("Base", justify="right")
    table.add_column("Multiplier", justify="right")
    table.add_column("Final", justify="right")
    table.add_column("Written", justify="right")
    for row in rows:
        table.add_row(row.modality, f"{row.base:,}", f"{row.multiplier}x", f"{row.final:,}", f"{written.get(row.modality, 0):,}")
    return table


def cmd_datagen(args: argparse.Namespace) -> int:
    # imported here so bench runs do not load the rephraser backends
    from .datagen.augment import AugmentationPlan, audit_bases, count_audit, iter_augment
    from .datagen.extractors import PLANNING_FAMILY, Modality, extract_all
    from .datagen.recorder import record_tasks
    from .datagen.rephrase import make_rephraser
    from .datagen.trajectory import read_trajectories, write_trajectories

    config = resolve(_overrides(args), args.config)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)

    trajectories = []
    for path in args.trajectories or []:
        trajectories += read_trajectories(path)
    if args.record:
        tasks = generate_benchmark(suites=config.suites, levels=config.levels, seeds=args.record, validate=False)
        recorded = record_tasks(tasks, seed=config.seed)
        write_trajectories(out / "trajectories.jsonl", recorded)
        trajectories += recorded
    if not trajectories:
        raise SchemaError("no trajectories: pass --trajectories or --record N")
    trajectories.sort(key=lambda t: t.id)

    records = []
    for trajectory in trajectories:
        records += extract_all(trajectory, args.horizons)
    plan = AugmentationPlan() if args.augment else AugmentationPlan(shuffle=1, swap=1, rephrase=1, paraphrase=1, end_states=1)
    rows = count_audit(audit_bases(records), plan)

    written = {str(m): 0 for m in Modality}
    files = {m: (out / f"{m}.jsonl").open("w") for m in Modality}
    try:
        augmented = iter_augment(records, plan, random.Random(config.seed), make_rephraser(args.rephraser))
        for record in augmented:
            files[record.modality].write(json.dumps(record.to_document(), sort_keys=True, separators=(",", ":")) + "\n")
            written[str(record.modality)] += 1
    finally:
        for f in files.values():
            f.close()

    long_horizon = sum(1 for r in records if r.modality == Modality.FORWARD_REASONING and r.meta.get("horizon", 1) != 1)
    summary = {
        "grounding": written[Modality.GROUNDING],
        "planning": sum(written[m] for m in PLANNING_FAMILY) - long_horizon * plan.multiplier(Modality.FORWARD_REASONING),
        "forward_reasoning_long": long_horizon * plan.multiplier(Modality.FORWARD_REASONING),
        "goal_interpretation": written[Modality.GOAL_INTERPRETATION],
    }
    console.print(_audit_table(rows, summary))
    _write_meta(out, config, "datagen", trajectories=len(trajectories), written=written)
    logger.info(f"dataset written to {out}")
    return 0


def cmd_grade(args: argparse.Namespace) -> int:
    config = resolve(_overrides(args), args.config)
    weights = config.reward_weights()
    source = Path(args.input)
    target = Path(args.output) if args.output else source.with_suffix(".graded.jsonl")
    count = 0
    with source.open() as f, target.open("w") as g:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                graded = grade_record(json.loads(line), weights)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{source}:{number}: not a JSON document ({exc.msg})") from exc
            except BenchError as exc:
                raise SchemaError(f"{source}:{number}: {exc.message}") from exc
            g.write(json.dumps(graded, sort_keys=True, separators=(",", ":")) + "\n")
            count += 1
    console.print(f"[bold green]graded {count} records into {target}[/]")
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    from .datagen.trajectory import read_trajectories
    from .graph.delta import diff
    from .world.engine import geometry_mismatch, transition

    config = resolve(_overrides(args), args.config)
    extraction = config.extraction()
    for trajectory in read_trajectories(args.input):
        console.rule(f"{trajectory.id} ({trajectory.provenance})")
        for index, step in enumerate(trajectory.steps):
            after = transition(step.graph, step.action, extraction)
            delta = diff(step.graph, after)
            added = ", ".join(sorted(map(str, delta.added))) or "-"
            removed = ", ".join(sorted(map(str, delta.removed))) or "-"
            console.print(f"{index:3d} {step.action}  [green]+ {added}[/]  [red]- {removed}[/]")
            if not after.same_facts(trajectory.graph_after(index)):
                raise BenchError(f"{trajectory.id} diverges from the recording at step {index} ({step.action})")
            mismatch = geometry_mismatch(after, extraction)
            if mismatch:
                raise BenchError(
                    f"{trajectory.id} step {index}: geometry disagrees on {', '.join(sorted(map(str, mismatch)))}"
                )
    console.print("[bold green]replay consistent[/]")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    records = read_records(args.inputs)
    summaries = print_report(records, console)
    if args.plot_matrix:
        Path(args.plot_matrix).write_text(json.dumps(plot_matrix(summaries), indent=2) + "\n")
        console.print(f"plot matrix written to {args.plot_matrix}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .server import serve

    serve(
        args.agent,
        address=args.host,
        port=args.port,
        tcp_port=args.tcp_port,
        timeout_ms=args.timeout_ms or 30_000,
        retries=args.retries if args.retries is not None else 2,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scenebench", description="Scene graph reasoning benchmark and data engine")
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    bench = commands.add_parser("bench", help="run agents on the benchmark tasks")
    _add_run_options(bench)
    bench.add_argument("--trials", type=int, help="trials per task (default 10)")
    bench.add_argument("--noise", type=_floats, help="noise ratios, e.g. 0,0.05,0.10")
    bench.add_argument("--noise-mode", choices=[str(m) for m in NoiseMode])
    bench.add_argument("--per-episode-noise", action="store_true", help="draw the noise once per episode")
    bench.add_argument("--no-feedback", action="store_true", help="hide step success from the agent")
    bench.add_argument("--agent", help="oracle, remote:<url>, tcp://host:port or claude[:model]")
    bench.add_argument("--timeout-ms", type=int)
    bench.add_argument("--retries", type=int)
    bench.add_argument("--parallel", type=int, help="episodes run concurrently (default: CPU count)")
    bench.add_argument("--no-validate", dest="validate", action="store_false", help="skip the oracle solvability check")
    bench.set_defaults(handler=cmd_bench)

    datagen = commands.add_parser("datagen", help="build training records from trajectories")
    _add_run_options(datagen)
    datagen.add_argument("--trajectories", nargs="*", help="trajectory files (one document per line)")
    datagen.add_argument("--record", type=int, help="record N oracle trajectories per selected cell first")
    datagen.add_argument("--horizons", type=lambda s: [int(x) for x in s.split(",")], default=[1, 2, 3])
    datagen.add_argument("--rephraser", choices=["template", "gemini"], default="template")
    datagen.add_argument("--no-augment", dest="augment", action="store_false")
    datagen.set_defaults(handler=cmd_datagen)

    grade = commands.add_parser("grade", help="score logged responses offline")
    grade.add_argument("--config")
    grade.add_argument("--in", dest="input", required=True)
    grade.add_argument("--out", dest="output")
    grade.add_argument("--weights", type=_floats, help="step,grounding,termination weights")
    grade.add_argument("--alpha", type=float)
    grade.add_argument("--beta", type=float)
    grade.set_defaults(handler=cmd_grade)

    replay = commands.add_parser("replay", help="re-execute trajectories and check consistency")
    replay.add_argument("--config")
    replay.add_argument("--in", dest="input", required=True)
    replay.add_argument("--tau", type=float)
    replay.set_defaults(handler=cmd_replay)

    report = commands.add_parser("report", help="aggregate episode result files")
    report.add_argument("inputs", nargs="+")
    report.add_argument("--plot-matrix", help="write {rows, cols, values} JSON here")
    report.set_defaults(handler=cmd_report)

    serve = commands.add_parser("serve", help="expose an agent over HTTP and TCP")
    serve.add_argument("--agent", default="oracle")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--tcp-port", type=int)
    serve.add_argument("--timeout-ms", type=int)
    serve.add_argument("--retries", type=int)
    serve.set_defaults(handler=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = "DEBUG" if args.verbose else os.getenv("SCENEBENCH_LOG_LEVEL", "INFO")
    # the sidecar keeps its own plain log format
    if args.command != "serve":
        logging.basicConfig(level=level, format="%(message)s", handlers=[RichHandler(console=Console(stderr=True))])
    try:
        return args.handler(args)
    except BenchError as exc:
        console.print(f"[bold red]error:[/] {exc.message}")
        return EXIT_BENCH_ERROR


if __name__ == "__main__":
    sys.exit(main())
