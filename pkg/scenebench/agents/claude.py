"""Policy backed by the Anthropic Messages API."""

import logging
import os
from dataclasses import dataclass, field
from .._compat import StrEnum

from anthropic import (
    APIConnectionError,
    APIError,
    APIStatusError,
    APITimeoutError,
    AsyncAnthropic,
    AsyncAnthropicBedrock,
    AsyncAnthropicVertex,
)

from ..errors import AgentTimeout, AgentUnreachable, MalformedReply
from .base import BasePolicy, PolicyQuery, PolicyResponse
from .prompt import format_prompt

logger = logging.getLogger(__name__)

DEFAULT_MODEL = "claude-3-7-sonnet-20250219"

SYSTEM_PROMPT = (
    "You control a robot arm above a tabletop. Each turn you receive the current scene graph "
    "and answer with the single next action. Object ids must be copied exactly from the scene graph."
)


class APIProvider(StrEnum):
    ANTHROPIC = "anthropic"
    BEDROCK = "bedrock"
    VERTEX = "vertex"


@dataclass(kw_only=True)
class ClaudePolicy(BasePolicy):
    model: str = field(default_factory=lambda: os.getenv("SCENEBENCH_MODEL", DEFAULT_MODEL))
    provider: APIProvider = field(default_factory=lambda: APIProvider(os.getenv("SCENEBENCH_PROVIDER", "anthropic")))
    api_key: str | None = field(default_factory=lambda: os.getenv("ANTHROPIC_API_KEY"))
    max_tokens: int = 1024
    timeout_ms: int = 60_000
    retries: int = 2
    name: str = "claude"
    _client: AsyncAnthropic | AsyncAnthropicBedrock | AsyncAnthropicVertex | None = field(
        default=None, init=False, repr=False
    )

    def _make_client(self):
        options = {"max_retries": self.retries, "timeout": self.timeout_ms / 1000}
        if self.provider == APIProvider.ANTHROPIC:
            return AsyncAnthropic(api_key=self.api_key, **options)
        if self.provider == APIProvider.VERTEX:
            return AsyncAnthropicVertex(**options)
        return AsyncAnthropicBedrock(**options)

    async def __call__(self, query: PolicyQuery) -> PolicyResponse:
        if self._client is None:
            self._client = self._make_client()
        try:
            message = await self._client.messages.create(
                model=self.model,
                max_tokens=self.max_tokens,
                system=SYSTEM_PROMPT,
                messages=[{"role": "user", "content": format_prompt(query)}],
            )
        except APITimeoutError as exc:
            raise AgentTimeout(f"{self.model} did not answer in time") from exc
        except APIConnectionError as exc:
            raise AgentUnreachable(f"cannot reach {self.provider}: {exc}") from exc
        except APIStatusError as exc:
            raise MalformedReply(f"{self.provider} answered HTTP {exc.status_code}") from exc
        except APIError as exc:
            raise MalformedReply(f"{self.provider} error: {exc}") from exc

        text = "".join(block.text for block in message.content if block.type == "text")
        logger.debug(f"{self.model} step {query.step}: {text[:120]!r}")
        return PolicyResponse(text=text)

    async def aclose(self):
        if self._client is not None:
            await self._client.close()
            self._client = None
