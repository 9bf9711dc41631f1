from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, List

from ..errors import MMInfoRecError
from .dataset import Catalog, Dataset
from .split import split_leave_one_out


class DatasetRepo:
    """processed-dataset directory: sequences.tsv, attributes.tsv, idmaps.json, stats.json"""

    def __init__(self, root: str):
        self.root = Path(root)
        self.log = logging.getLogger("data")

    def _path(self, name: str) -> Path:
        return self.root / name

    # ---------- write ----------

    def save(self, dataset: Dataset) -> None:
        self.root.mkdir(parents=True, exist_ok=True)

        with self._path("sequences.tsv").open("w", encoding="utf-8") as f:
            for k, seq in enumerate(dataset.sequences, start=1):
                f.write("\t".join([str(k)] + [str(i) for i in seq]) + "\n")

        with self._path("attributes.tsv").open("w", encoding="utf-8") as f:
            for item in sorted(dataset.catalog.item_attrs):
                attrs = dataset.catalog.item_attrs[item]
                f.write("\t".join([str(item)] + [str(a) for a in attrs]) + "\n")

        idmaps = {
            "users": {ext: k for k, ext in enumerate(dataset.users, start=1)},
            "items": {ext: k for k, ext in enumerate(dataset.items) if k > 0},
            "attributes": {ext: k for k, ext in enumerate(dataset.attrs) if k > 0},
        }
        self._path("idmaps.json").write_text(json.dumps(idmaps, indent=1), encoding="utf-8")
        self._path("stats.json").write_text(json.dumps(dataset.stats(), indent=2), encoding="utf-8")
        self.log.info("dataset saved to %s", self.root)

    # ---------- read ----------

    def load(self, split: bool = True) -> Dataset:
        if not self._path("sequences.tsv").exists():
            raise MMInfoRecError(f"{self.root} is not a processed dataset (sequences.tsv missing)")

        idmaps: Dict[str, Dict[str, int]] = json.loads(self._path("idmaps.json").read_text(encoding="utf-8"))
        users = _invert(idmaps["users"], offset=1)
        items = [""] + _invert(idmaps["items"], offset=1)
        attrs = [""] + _invert(idmaps.get("attributes", {}), offset=1)

        sequences: List[List[int]] = []
        for line in self._path("sequences.tsv").read_text(encoding="utf-8").splitlines():
            if line.strip():
                parts = line.split("\t")
                sequences.append([int(x) for x in parts[1:]])

        item_attrs = {}
        apath = self._path("attributes.tsv")
        if apath.exists():
            for line in apath.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    parts = [int(x) for x in line.split("\t")]
                    item_attrs[parts[0]] = tuple(parts[1:])

        ds = Dataset(
            sequences=sequences,
            catalog=Catalog(n_items=len(items) - 1, n_attrs=len(attrs) - 1, item_attrs=item_attrs),
            users=users,
            items=items,
            attrs=attrs,
        )
        return split_leave_one_out(ds) if split else ds

    def stats(self) -> Dict[str, Any]:
        return json.loads(self._path("stats.json").read_text(encoding="utf-8"))


def _invert(mapping: Dict[str, int], offset: int) -> List[str]:
    out = [""] * len(mapping)
    for ext, k in mapping.items():
        out[int(k) - offset] = ext
    return out
