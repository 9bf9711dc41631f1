from __future__ import annotations

import json
import logging
from collections import OrderedDict
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..core import Tensor
from ..errors import MMInfoRecError
from .config import ModelConfig
from .params import ModelParams

MANIFEST = "manifest.json"
BLOB = "params.bin"
FORMAT = "mminforec-checkpoint/1"


class CheckpointRepo:
    """json manifest (name, shape, byte offset per tensor) + one little-endian float64 blob"""

    def __init__(self, root: str):
        self.root = Path(root)
        self.log = logging.getLogger("checkpoint")

    def exists(self) -> bool:
        return (self.root / MANIFEST).exists() and (self.root / BLOB).exists()

    def save(self, params: ModelParams, cfg: ModelConfig, extra: Optional[Dict[str, Any]] = None) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        entries = []
        offset = 0
        with (self.root / BLOB).open("wb") as f:
            for name, t in params.items():
                raw = np.ascontiguousarray(t.data, dtype="<f8").tobytes()
                f.write(raw)
                entries.append({"name": name, "shape": list(t.shape), "offset": offset, "nbytes": len(raw)})
                offset += len(raw)
        manifest = {
            "format": FORMAT,
            "dtype": "<f8",
            "model_config": cfg.to_dict(),
            "tensors": entries,
            "extra": extra or {},
        }
        (self.root / MANIFEST).write_text(json.dumps(manifest, indent=1), encoding="utf-8")
        self.log.debug("checkpoint written: %s (%s tensors, %s bytes)", self.root, len(entries), offset)

    def manifest(self) -> Dict[str, Any]:
        if not self.exists():
            raise MMInfoRecError(f"no checkpoint at {self.root}")
        return json.loads((self.root / MANIFEST).read_text(encoding="utf-8"))

    def load(self) -> Tuple[ModelParams, ModelConfig]:
        manifest = self.manifest()
        if manifest.get("format") != FORMAT:
            raise MMInfoRecError(f"{self.root}: unknown checkpoint format {manifest.get('format')!r}")
        blob = (self.root / BLOB).read_bytes()
        tensors: "OrderedDict[str, Tensor]" = OrderedDict()
        for e in manifest["tensors"]:
            start, stop = int(e["offset"]), int(e["offset"]) + int(e["nbytes"])
            if stop > len(blob):
                raise MMInfoRecError(f"{self.root}: blob truncated at {e['name']}")
            data = np.frombuffer(blob[start:stop], dtype="<f8").astype(np.float64).reshape(e["shape"])
            tensors[e["name"]] = Tensor(data, name=e["name"], requires_grad=True)
        return ModelParams(tensors), ModelConfig.from_dict(manifest["model_config"])
