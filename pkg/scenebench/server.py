"""
Policy sidecar: exposes an agent over HTTP (``POST /act``) and over a TCP
stream of newline-delimited documents, with the same bodies as the remote
agent sends.
"""

import asyncio
import json
import logging
from functools import lru_cache
from typing import Any

import jsonschema
import uvicorn
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from .agents.base import BasePolicy, PolicyQuery
from .agents.collection import AgentOptions, split_spec
from .agents.remote import query_from_request
from .bench.suites import TaskSpec, generate_task
from .errors import BenchError

logger = logging.getLogger(__name__)

REQUEST_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["prompt", "scene_graph", "instruction", "history", "meta"],
    "properties": {
        "prompt": {"type": "string"},
        "scene_graph": {"type": "object"},
        "instruction": {"type": "string"},
        "history": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["command"],
                "properties": {"command": {"type": "string"}, "success": {"type": "boolean"}},
            },
        },
        "meta": {
            "type": "object",
            "required": ["step", "budget"],
            "properties": {
                "step": {"type": "integer", "minimum": 0},
                "budget": {"type": "integer", "minimum": 1},
                "task": {
                    "type": "object",
                    "required": ["suite", "level", "seed"],
                    "properties": {
                        "suite": {"type": "string"},
                        "level": {"type": "string"},
                        "seed": {"type": "integer"},
                    },
                },
            },
        },
    },
}


@lru_cache(maxsize=256)
def _task(suite: str, level: str, seed: int) -> TaskSpec:
    return generate_task(suite, level, seed)


class PolicyHost:
    """Answers request documents with one agent spec.

    Agents that need the task goal (the oracle) are rebuilt per request from
    ``meta.task``; the others are built once.
    """

    def __init__(self, spec: str, **options):
        self.spec = spec
        self.kind, self.argument = split_spec(spec)
        self.options = options
        self._shared: BasePolicy | None = None

    def _policy(self, query: PolicyQuery) -> BasePolicy:
        if self.kind.shared:
            if self._shared is None:
                self._shared = self.kind.build(self.argument, AgentOptions(**self.options))
            return self._shared
        if query.task is None:
            raise BenchError(f"agent {self.spec} needs meta.task in the request")
        task = _task(query.task.suite, query.task.level, query.task.seed)
        return self.kind.build(self.argument, AgentOptions(goal=task.goal, **self.options))

    async def answer(self, body: Any) -> dict[str, Any]:
        try:
            jsonschema.validate(body, REQUEST_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise BenchError(f"invalid request: {exc.message}") from exc
        query = query_from_request(body)
        response = await self._policy(query)(query)
        logger.info(f"step {query.step}/{query.budget}: {response.text!r}")
        reply = {"response_text": response.text}
        if response.reasoning:
            reply["reasoning"] = response.reasoning
        return reply

    async def aclose(self):
        if self._shared is not None:
            await self._shared.aclose()


def create_app(host: PolicyHost) -> FastAPI:
    app = FastAPI()
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_credentials=True,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.post("/act")
    async def act(body: dict[str, Any]):
        try:
            return await host.answer(body)
        except BenchError as exc:
            logger.error(f"rejected request: {exc.message}")
            raise HTTPException(status_code=400, detail=exc.message) from exc

    @app.get("/health")
    async def health():
        return {"status": "ok", "agent": host.spec}

    return app


async def _handle_stream(host: PolicyHost, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
    peer = writer.get_extra_info("peername")
    logger.info(f"stream connection from {peer}")
    try:
        while line := await reader.readline():
            try:
                reply = await host.answer(json.loads(line))
            except json.JSONDecodeError:
                reply = {"error": "request is not a JSON document"}
            except BenchError as exc:
                reply = {"error": exc.message}
            writer.write(json.dumps(reply).encode() + b"\n")
            await writer.drain()
    finally:
        writer.close()


async def serve_stream(host: PolicyHost, address: str, port: int) -> asyncio.Server:
    server = await asyncio.start_server(lambda r, w: _handle_stream(host, r, w), address, port)
    logger.info(f"stream listener on {address}:{port}")
    return server


def serve(spec: str, *, address: str = "127.0.0.1", port: int = 8000, tcp_port: int | None = None, **options):
    """Run the HTTP sidecar, plus a TCP listener when ``tcp_port`` is set, until interrupted."""
    logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    host = PolicyHost(spec, **options)
    app = create_app(host)

    async def main():
        config = uvicorn.Config(app, host=address, port=port, log_level="info")
        stream = await serve_stream(host, address, tcp_port) if tcp_port else None
        try:
            await uvicorn.Server(config).serve()
        finally:
            if stream is not None:
                stream.close()
                await stream.wait_closed()
            await host.aclose()

    asyncio.run(main())
