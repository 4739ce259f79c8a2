"""
Rephrasers turn an instruction or task prompt into an equivalent wording.

``variant`` 0 always returns the text unchanged; higher variants return
distinct rewordings.
"""

import logging
import os
import re
from abc import ABCMeta, abstractmethod
from dataclasses import dataclass, field

from google import genai
from google.genai import types

logger = logging.getLogger(__name__)

DEFAULT_GEMINI_MODEL = "gemini-2.0-flash"

# applied to the text with its first letter lowered and its final period dropped
TEMPLATES = (
    "Please {text}.",
    "Your task is to {text}.",
    "I need you to {text}.",
    "Could you {text}?",
    "Go ahead and {text}.",
)

PROMPT = (
    "Rewrite the following robot task instruction with different wording but exactly the same meaning. "
    "Keep every object identifier (tokens like cube_01) unchanged. Reply with the rewritten instruction only.\n\n"
    "Instruction: {text}\n\nWrite version number {variant}."
)


class BaseRephraser(metaclass=ABCMeta):
    @abstractmethod
    def rephrase(self, text: str, variant: int) -> str:
        ...

    def __call__(self, text: str, variant: int = 1) -> str:
        if variant == 0 or not text.strip():
            return text
        return self.rephrase(text, variant)


_SENTENCE_END = re.compile(r"(?<=[.!?])\s+")


def _clause(text: str) -> str:
    body = text.strip().rstrip(".!?")
    return body[:1].lower() + body[1:]


class TemplateRephraser(BaseRephraser):
    """Deterministic wording templates; needs no network.

    Multi-sentence text (scene descriptions) is paraphrased by rotating its
    sentences instead.
    """

    def rephrase(self, text: str, variant: int) -> str:
        sentences = _SENTENCE_END.split(text.strip())
        if len(sentences) > 1:
            shift = variant % len(sentences)
            return " ".join(sentences[shift:] + sentences[:shift])
        template = TEMPLATES[(variant - 1) % len(TEMPLATES)]
        return template.format(text=_clause(text))


@dataclass(kw_only=True)
class GeminiRephraser(BaseRephraser):
    """Rewords through the Gemini API, falling back to templates on any failure."""

    model: str = DEFAULT_GEMINI_MODEL
    api_key: str | None = field(default_factory=lambda: os.environ.get("GEMINI_API_KEY"))
    fallback: BaseRephraser = field(default_factory=TemplateRephraser)
    _client: genai.Client | None = field(default=None, init=False, repr=False)
    _cache: dict[tuple[str, int], str] = field(default_factory=dict, init=False, repr=False)

    def rephrase(self, text: str, variant: int) -> str:
        key = (text, variant)
        if key in self._cache:
            return self._cache[key]
        try:
            if self._client is None:
                self._client = genai.Client(api_key=self.api_key)
            response = self._client.models.generate_content(
                model=self.model,
                contents=[types.Content(role="user", parts=[types.Part.from_text(text=PROMPT.format(text=text, variant=variant))])],
                config=types.GenerateContentConfig(response_mime_type="text/plain", temperature=0.7),
            )
            result = (response.text or "").strip()
            if not result:
                raise ValueError("empty rephrasing")
        except Exception as e:
            logger.warning(f"rephraser falling back to templates: {e}")
            result = self.fallback(text, variant)
        self._cache[key] = result
        return result


def make_rephraser(kind: str = "template") -> BaseRephraser:
    if kind == "gemini":
        return GeminiRephraser()
    if kind == "template":
        return TemplateRephraser()
    raise ValueError(f"unknown rephraser {kind!r}")
