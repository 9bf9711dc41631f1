# tiny helper to log + persist notable run events next to the run artifacts
from __future__ import annotations

import json
import logging
import time
from pathlib import Path
from typing import Any, Optional


def record_event(*, out_dir: Optional[str], level: str, source: str, message: str, data: Optional[dict] = None) -> None:
    log = logging.getLogger(source)
    log.log(getattr(logging, level.upper(), logging.INFO), message)

    if not out_dir:
        return
    # append to events.jsonl
    try:
        path = Path(out_dir) / "events.jsonl"
        path.parent.mkdir(parents=True, exist_ok=True)
        row: dict[str, Any] = {
            "ts": int(time.time()),
            "level": level,
            "source": source,
            "message": message,
            "data": data or {},
        }
        with path.open("a", encoding="utf-8") as f:
            f.write(json.dumps(row, default=str)[:4000] + "\n")
    except Exception:
        # swallow fs issues
        pass
