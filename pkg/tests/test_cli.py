import asyncio
import json
from dataclasses import dataclass
from pathlib import Path

import pytest
from conftest import stub_graph

from scenebench import cli
from scenebench.agents.base import BasePolicy, PolicyQuery, PolicyResponse
from scenebench.bench.suites import generate_benchmark
from scenebench.cli import EXIT_BENCH_ERROR, EXIT_TRANSPORT, main
from scenebench.config import CONFIG_ENV, RunConfig
from scenebench.datagen.trajectory import read_trajectories, write_trajectories
from scenebench.graph.codec import to_document
from scenebench.graph.base import Predicate, RelationEdge
from scenebench.world.base import GoalSpec

SMALL = ["--suite", "sod", "--level", "easy", "--seeds", "1"]


@pytest.fixture(autouse=True)
def no_env_config(monkeypatch):
    monkeypatch.delenv(CONFIG_ENV, raising=False)


def lines(path):
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


def bench(out, *extra):
    return main(["bench", *SMALL, "--trials", "1", "--parallel", "1", "--out", str(out), *extra])


class TestBench:
    def test_writes_records_and_meta(self, tmp_path):
        assert bench(tmp_path) == 0
        (record,) = lines(tmp_path / "results.jsonl")
        assert (record["suite"], record["level"], record["agent_id"]) == ("sod", "easy", "oracle")
        assert record["success"] and record["termination"] == "agent_end"
        meta = json.loads((tmp_path / "meta.json").read_text())
        assert meta["command"] == "bench"
        assert meta["tasks"] == 1
        assert meta["config"]["trials"] == 1

    def test_reruns_are_identical(self, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        assert bench(first, "--noise", "0,0.1", "--trials", "2") == 0
        assert bench(second, "--noise", "0,0.1", "--trials", "2") == 0
        assert (first / "results.jsonl").read_text() == (second / "results.jsonl").read_text()
        assert len(lines(first / "results.jsonl")) == 4

    def test_config_file_fills_flags(self, tmp_path):
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"trials": 2, "noise": [0.05]}))
        assert bench(tmp_path / "out", "--config", str(config), "--trials", "1") == 0
        (record,) = lines(tmp_path / "out" / "results.jsonl")
        assert record["noise_ratio"] == 0.05

    def test_unreachable_agent_stops_the_run(self, tmp_path):
        code = bench(tmp_path, "--agent", "remote:http://127.0.0.1:9/act", "--retries", "0", "--timeout-ms", "500")
        assert code == EXIT_TRANSPORT
        (record,) = lines(tmp_path / "results.jsonl")
        assert record["termination"] == "agent_error"

    def test_bad_agent_spec(self, tmp_path):
        assert bench(tmp_path, "--agent", "parrot") == EXIT_BENCH_ERROR

    def test_parallel_runs_match_serial(self, tmp_path):
        serial, first, second = tmp_path / "serial", tmp_path / "a", tmp_path / "b"
        extra = ["--noise", "0,0.1", "--trials", "3"]
        assert bench(serial, *extra) == 0
        assert bench(first, *extra, "--parallel", "4") == 0
        assert bench(second, *extra, "--parallel", "4") == 0
        text = (serial / "results.jsonl").read_text()
        assert (first / "results.jsonl").read_text() == text
        assert (second / "results.jsonl").read_text() == text
        assert [r["job"] for r in lines(first / "results.jsonl")] == list(range(6))


@dataclass(kw_only=True)
class WaitingPolicy(BasePolicy):
    """Ends only once some other episode has reached the results file."""

    results_path: Path
    seen: list[dict]

    async def __call__(self, query: PolicyQuery) -> PolicyResponse:
        while not self.results_path.read_text():
            await asyncio.sleep(0.01)
        self.seen.extend(lines(self.results_path))
        return PolicyResponse(text="end")


def test_records_are_written_as_episodes_finish(tmp_path, monkeypatch):
    results_path, seen, built = tmp_path / "results.jsonl", [], []
    resolve_policy = cli.resolve_policy

    def first_one_waits(spec, **options):
        built.append(spec)
        if len(built) == 1:
            return WaitingPolicy(results_path=results_path, seen=seen)
        return resolve_policy(spec, **options)

    monkeypatch.setattr(cli, "resolve_policy", first_one_waits)
    config = RunConfig(suites=("sod",), levels=("easy",), seeds=1, trials=3, parallel=2)
    tasks = generate_benchmark(suites=["sod"], levels=["easy"], seeds=1)
    records = asyncio.run(asyncio.wait_for(cli._bench(config, tasks, results_path), timeout=60))
    assert seen and all(r["job"] != 0 for r in seen)
    assert [r["job"] for r in records] == [0, 1, 2]
    assert [r["job"] for r in lines(results_path)] == [0, 1, 2]
    assert records[0]["termination"] == "agent_end" and not records[0]["success"]


def test_report_plot_matrix(tmp_path):
    assert bench(tmp_path / "run", "--noise", "0,0.05") == 0
    matrix_path = tmp_path / "matrix.json"
    assert main(["report", str(tmp_path / "run" / "results.jsonl"), "--plot-matrix", str(matrix_path)]) == 0
    matrix = json.loads(matrix_path.read_text())
    assert matrix["rows"] == ["sod-easy"]
    assert matrix["cols"] == [0.0, 0.05]
    assert matrix["values"][0][0] == 1.0


def test_report_rejects_incomplete_records(tmp_path):
    path = tmp_path / "results.jsonl"
    path.write_text(json.dumps({"suite": "sod"}) + "\n")
    assert main(["report", str(path)]) == EXIT_BENCH_ERROR


def test_grade(tmp_path):
    scene = stub_graph(("apple_01", "ontop", "plate_01"))
    goal = GoalSpec(instruction="", facts=frozenset({RelationEdge("apple_01", Predicate.ONTOP, "plate_01")}))
    source = tmp_path / "responses.jsonl"
    records = [
        {"response": "end", "scene_graph": to_document(scene), "goal": goal.to_document()},
        {"response": "pick apple_01, end", "scene_graph": to_document(scene), "goal": goal.to_document()},
    ]
    source.write_text("".join(json.dumps(r) + "\n" for r in records))
    assert main(["grade", "--in", str(source), "--beta", "2"]) == 0
    graded = lines(tmp_path / "responses.graded.jsonl")
    assert [g["r_total"] for g in graded] == [3.0, 0.5]


def test_grade_reports_the_line(tmp_path):
    source = tmp_path / "responses.jsonl"
    source.write_text('{"response": "end"}\n')
    assert main(["grade", "--in", str(source), "--out", str(tmp_path / "graded.jsonl")]) == EXIT_BENCH_ERROR


class TestDatagen:
    def test_record_and_write(self, tmp_path):
        assert main(["datagen", *SMALL, "--record", "1", "--no-augment", "--out", str(tmp_path)]) == 0
        (trajectory,) = read_trajectories(tmp_path / "trajectories.jsonl")
        planning = lines(tmp_path / "goal_planning.jsonl")
        assert len(planning) == len(trajectory)
        assert len(lines(tmp_path / "goal_interpretation.jsonl")) == 1
        assert lines(tmp_path / "grounding.jsonl")
        meta = json.loads((tmp_path / "meta.json").read_text())
        assert meta["written"]["world_modeling"] == len(trajectory)

    def test_augmented_counts(self, tmp_path):
        assert main(["datagen", *SMALL, "--record", "1", "--out", str(tmp_path)]) == 0
        assert len(lines(tmp_path / "goal_interpretation.jsonl")) in (24, 48)

    def test_needs_trajectories(self, tmp_path):
        assert main(["datagen", "--out", str(tmp_path)]) == EXIT_BENCH_ERROR


class TestReplay:
    @pytest.fixture
    def recorded(self, tmp_path):
        assert main(["datagen", *SMALL, "--record", "1", "--no-augment", "--out", str(tmp_path)]) == 0
        return tmp_path / "trajectories.jsonl"

    def test_consistent(self, recorded):
        assert main(["replay", "--in", str(recorded)]) == 0

    def test_divergence_fails(self, recorded, tmp_path):
        (trajectory,) = read_trajectories(recorded)
        tampered = trajectory.replace(final_graph=trajectory.steps[0].graph)
        path = tmp_path / "tampered.jsonl"
        write_trajectories(path, [tampered])
        assert main(["replay", "--in", str(path)]) == EXIT_BENCH_ERROR
