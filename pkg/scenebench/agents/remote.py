"""
Remote agents reached over HTTP (POST of one request document) or a raw TCP
stream carrying one JSON document per line. Both transports share the body
built by :func:`build_request`.
"""

import asyncio
import json
import logging
from dataclasses import dataclass, field
from typing import Any
from urllib.parse import urlparse

import httpx

from ..errors import AgentTimeout, AgentUnreachable, BenchError, MalformedReply, PolicyTransportError
from ..graph.codec import parse, to_document
from ..world.grammar import parse_command
from .base import BasePolicy, HistoryEntry, PolicyQuery, PolicyResponse, TaskMeta
from .prompt import format_prompt

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT_MS = 30_000
DEFAULT_RETRIES = 2


def build_request(query: PolicyQuery) -> dict[str, Any]:
    meta: dict[str, Any] = {"step": query.step, "budget": query.budget}
    if query.task is not None:
        meta["task"] = query.task.to_document()
    history = [entry.to_document() for entry in query.history]
    if not query.feedback:
        for entry in history:
            entry.pop("success")
    return {
        "prompt": format_prompt(query),
        "scene_graph": to_document(parse(query.observation, strict=False)),
        "instruction": query.instruction,
        "history": history,
        "meta": meta,
    }


def query_from_request(body: dict[str, Any]) -> PolicyQuery:
    """Rebuild the query a request document was made from."""
    meta = body.get("meta") or {}
    task = meta.get("task")
    try:
        history = [
            HistoryEntry(
                command=parse_command(entry["command"]) if entry.get("command") else None,
                success=bool(entry.get("success", False)),
            )
            for entry in body.get("history", [])
        ]
        return PolicyQuery(
            observation=json.dumps(body["scene_graph"], sort_keys=True),
            instruction=body["instruction"],
            history=tuple(history),
            step=int(meta.get("step", len(history))),
            budget=int(meta.get("budget", 1)),
            feedback=all("success" in entry for entry in body.get("history", [])),
            task=TaskMeta(suite=task["suite"], level=task["level"], seed=int(task["seed"])) if task else None,
        )
    except (BenchError, KeyError, ValueError, TypeError) as exc:
        raise MalformedReply(f"request document is incomplete: {exc}") from exc


def read_reply(raw: bytes | str) -> PolicyResponse:
    try:
        body = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedReply(f"reply is not a JSON document: {str(raw)[:80]!r}") from exc
    if not isinstance(body, dict) or not isinstance(body.get("response_text"), str):
        raise MalformedReply("reply lacks a response_text string")
    return PolicyResponse(text=body["response_text"], reasoning=body.get("reasoning"))


@dataclass(kw_only=True)
class RemotePolicy(BasePolicy):
    """
    Policy behind an ``http(s)://`` or ``tcp://host:port`` endpoint.

    Each attempt is bounded by ``timeout_ms``; up to ``retries`` further attempts
    follow a failed one. When all attempts fail the last transport error is
    raised for the episode loop to record.
    """

    endpoint: str
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    retries: int = DEFAULT_RETRIES
    name: str = "remote"
    transport: httpx.AsyncBaseTransport | None = None
    _client: httpx.AsyncClient | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.retries < 0:
            raise BenchError("retries must be non-negative")
        if self.timeout_ms <= 0:
            raise BenchError("timeout must be positive")

    @property
    def timeout(self) -> float:
        return self.timeout_ms / 1000

    @property
    def is_stream(self) -> bool:
        return urlparse(self.endpoint).scheme == "tcp"

    async def __call__(self, query: PolicyQuery) -> PolicyResponse:
        body = build_request(query)
        error: PolicyTransportError | None = None
        for attempt in range(self.retries + 1):
            try:
                if self.is_stream:
                    return await self._send_stream(body)
                return await self._send_http(body)
            except PolicyTransportError as exc:
                error = exc
                logger.warning(f"{self.endpoint} attempt {attempt + 1}/{self.retries + 1}: {type(exc).__name__}: {exc.message}")
        assert error is not None
        raise error

    async def _send_http(self, body: dict[str, Any]) -> PolicyResponse:
        if self._client is None:
            self._client = httpx.AsyncClient(timeout=self.timeout, transport=self.transport)
        try:
            response = await self._client.post(self.endpoint, json=body)
        except httpx.TimeoutException as exc:
            raise AgentTimeout(f"no reply from {self.endpoint} within {self.timeout_ms} ms") from exc
        except httpx.TransportError as exc:
            raise AgentUnreachable(f"cannot reach {self.endpoint}: {exc}") from exc
        if response.status_code >= 400:
            raise MalformedReply(f"{self.endpoint} answered HTTP {response.status_code}")
        return read_reply(response.content)

    async def _send_stream(self, body: dict[str, Any]) -> PolicyResponse:
        address = urlparse(self.endpoint)
        try:
            reader, writer = await asyncio.wait_for(
                asyncio.open_connection(address.hostname, address.port), timeout=self.timeout
            )
        except asyncio.TimeoutError as exc:
            raise AgentTimeout(f"connecting to {self.endpoint} timed out") from exc
        except OSError as exc:
            raise AgentUnreachable(f"cannot reach {self.endpoint}: {exc}") from exc
        try:
            writer.write(json.dumps(body).encode() + b"\n")
            await writer.drain()
            line = await asyncio.wait_for(reader.readline(), timeout=self.timeout)
        except asyncio.TimeoutError as exc:
            raise AgentTimeout(f"no reply from {self.endpoint} within {self.timeout_ms} ms") from exc
        except OSError as exc:
            raise AgentUnreachable(f"connection to {self.endpoint} dropped: {exc}") from exc
        finally:
            writer.close()
        if not line:
            raise MalformedReply(f"{self.endpoint} closed the stream without a reply")
        return read_reply(line)

    async def aclose(self):
        if self._client is not None:
            await self._client.aclose()
            self._client = None
