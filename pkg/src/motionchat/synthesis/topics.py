"""Topic ingestion from exported files."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ParseError

SOURCE_TAGS = ("character", "news", "daily", "qa")


@dataclass
class Topic:
    id: str
    text: str
    source: str
    character_affinity: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.text:
            raise ValueError("topic text must be nonempty")
        if self.source not in SOURCE_TAGS:
            raise ValueError(f"bad source tag {self.source!r}")


def _normalize(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip().lower()


def ingest_topics(files: list) -> list[Topic]:
    """One topic per line: `tag<TAB>text[<TAB>character,character]`.

    Deduplicates by normalized text (first occurrence wins, provenance kept).
    """
    topics = []
    seen = set()
    for path in files:
        path = Path(path)
        with open(path, encoding="utf-8") as f:
            for lineno, raw in enumerate(f, start=1):
                line = raw.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) < 2 or parts[0] not in SOURCE_TAGS:
                    raise ParseError(
                        f"{path}:{lineno}: expected `tag<TAB>text`, got {line!r}",
                        line=lineno)
                tag, text = parts[0], parts[1].strip()
                if not text:
                    raise ParseError(f"{path}:{lineno}: empty topic text",
                                     line=lineno)
                affinity = ([a for a in parts[2].split(",") if a]
                            if len(parts) > 2 else [])
                key = _normalize(text)
                if key in seen:
                    continue
                seen.add(key)
                topics.append(Topic(id=f"t{len(topics):05d}", text=text,
                                    source=tag, character_affinity=affinity))
    return topics
