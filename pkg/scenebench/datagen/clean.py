"""Cleaning pass for scene graphs of external or model-written origin."""

import re

from ..graph.base import SceneGraph
from ..graph.codec import parse
from ..graph.normalize import normalize

_FENCE = re.compile(r"^```[\w-]*\s*$", re.MULTILINE)


def clean(sg_text: str) -> SceneGraph:
    """Parse leniently, then normalize.

    Alias predicates and reversed duplicates collapse into one canonical edge and
    edges naming unlisted objects get stub nodes. Markdown code fences around the
    graph are ignored.
    """
    return normalize(parse(_FENCE.sub("", sg_text).strip(), strict=False))
