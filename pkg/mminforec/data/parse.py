from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from ..errors import ParseError
from .dataset import RawInteraction

log = logging.getLogger("data")

# more malformed lines than this share is fatal
MAX_BAD_SHARE = 0.01


@dataclass
class ParseReport:
    lines: int = 0
    errors: List[Tuple[str, int, str]] = field(default_factory=list)

    @property
    def bad_share(self) -> float:
        return len(self.errors) / self.lines if self.lines else 0.0

    def summary(self, limit: int = 10) -> str:
        head = [f"{f}:{n}: {why}" for f, n, why in self.errors[:limit]]
        more = len(self.errors) - len(head)
        tail = [f"... {more} more"] if more > 0 else []
        return "\n".join([f"{len(self.errors)} malformed of {self.lines} lines"] + head + tail)


@dataclass
class RawRecords:
    interactions: List[RawInteraction]
    attributes: Dict[str, Tuple[str, ...]]
    report: ParseReport


def _read_lines(path: Path) -> List[str]:
    try:
        return path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as e:
        raise ParseError(f"cannot read {path}: {e}") from e


def parse_interaction_line(line: str) -> RawInteraction:
    parts = line.rstrip("\r\n").split("\t")
    if len(parts) != 3:
        raise ValueError(f"expected 3 tab-separated fields, got {len(parts)}")
    user, item, ts = (p.strip() for p in parts)
    if not user or not item:
        raise ValueError("empty user or item")
    try:
        stamp = int(ts)
    except ValueError:
        raise ValueError(f"timestamp {ts!r} is not an integer") from None
    if stamp < 0:
        raise ValueError("negative timestamp")
    return RawInteraction(user, item, stamp)


def parse_attribute_line(line: str) -> Tuple[str, Tuple[str, ...]]:
    parts = [p.strip() for p in line.rstrip("\r\n").split("\t")]
    if not parts or not parts[0]:
        raise ValueError("missing item id")
    attrs = tuple(p for p in parts[1:] if p)
    return parts[0], attrs


def parse(interaction_file: str, attribute_file: Optional[str] = None) -> RawRecords:
    report = ParseReport()
    interactions: List[RawInteraction] = []
    attributes: Dict[str, Tuple[str, ...]] = {}

    ipath = Path(interaction_file)
    for n, line in enumerate(_read_lines(ipath), start=1):
        if not line.strip():
            continue
        report.lines += 1
        try:
            interactions.append(parse_interaction_line(line))
        except ValueError as e:
            report.errors.append((ipath.name, n, str(e)))

    if attribute_file:
        apath = Path(attribute_file)
        for n, line in enumerate(_read_lines(apath), start=1):
            if not line.strip():
                continue
            report.lines += 1
            try:
                item, attrs = parse_attribute_line(line)
            except ValueError as e:
                report.errors.append((apath.name, n, str(e)))
                continue
            # repeated item lines merge
            attributes[item] = tuple(dict.fromkeys(attributes.get(item, ()) + attrs))

    if report.errors:
        log.warning("parse: %s", report.summary(limit=3))
    if report.bad_share > MAX_BAD_SHARE:
        raise ParseError(f"too many malformed lines ({report.bad_share:.2%})\n{report.summary()}", report)
    return RawRecords(interactions=interactions, attributes=attributes, report=report)
