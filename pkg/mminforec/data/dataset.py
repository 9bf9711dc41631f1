from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import IdOutOfRange, MMInfoRecError

PAD_ID = 0
MAX_LEN = 50
MIN_COUNT = 5


@dataclass(frozen=True)
class RawInteraction:
    user: str
    item: str
    timestamp: int


@dataclass
class Catalog:
    """items 1..n_items, attributes 1..n_attrs; 0 is padding in both"""

    n_items: int
    n_attrs: int
    item_attrs: Dict[int, Tuple[int, ...]] = field(default_factory=dict)
    _padded: Optional[Tuple[np.ndarray, np.ndarray]] = field(default=None, repr=False, compare=False)

    def attrs_of(self, item: int) -> Tuple[int, ...]:
        return self.item_attrs.get(int(item), ())

    @property
    def m_max(self) -> int:
        return max((len(v) for v in self.item_attrs.values()), default=0)

    def check_item(self, item: int) -> None:
        if not (0 <= int(item) <= self.n_items):
            raise IdOutOfRange("item", int(item), self.n_items)

    def check_attr(self, attr: int) -> None:
        if not (0 <= int(attr) <= self.n_attrs):
            raise IdOutOfRange("attribute", int(attr), self.n_attrs)

    def padded(self) -> Tuple[np.ndarray, np.ndarray]:
        """(n_items+1) x m_max attribute ids and validity mask"""
        if self._padded is None:
            m = self.m_max
            ids = np.zeros((self.n_items + 1, m), dtype=np.int64)
            mask = np.zeros((self.n_items + 1, m), dtype=bool)
            for item, attrs in self.item_attrs.items():
                ids[item, : len(attrs)] = attrs
                mask[item, : len(attrs)] = True
            self._padded = (ids, mask)
        return self._padded


@dataclass(frozen=True)
class Split:
    train: Tuple[int, ...]
    valid: int
    test: int


@dataclass
class Dataset:
    # sequences[k] belongs to users[k]; internal user id is k + 1
    sequences: List[List[int]]
    catalog: Catalog
    users: List[str]
    # items[i] / attrs[a] is the external id of internal id i / a; index 0 = padding
    items: List[str]
    attrs: List[str]
    splits: Optional[List[Split]] = None

    @property
    def n_users(self) -> int:
        return len(self.sequences)

    @property
    def n_actions(self) -> int:
        return sum(len(s) for s in self.sequences)

    def context(self, user: int, split: str) -> List[int]:
        if self.splits is None:
            raise MMInfoRecError("dataset has no leave-one-out split")
        sp = self.splits[user]
        if split == "valid":
            return list(sp.train)
        if split == "test":
            return list(sp.train) + [sp.valid]
        raise MMInfoRecError(f"unknown split {split!r}")

    def target(self, user: int, split: str) -> int:
        if self.splits is None:
            raise MMInfoRecError("dataset has no leave-one-out split")
        sp = self.splits[user]
        if split == "valid":
            return sp.valid
        if split == "test":
            return sp.test
        raise MMInfoRecError(f"unknown split {split!r}")

    def train_sequences(self) -> List[List[int]]:
        if self.splits is None:
            raise MMInfoRecError("dataset has no leave-one-out split")
        return [list(sp.train) for sp in self.splits]

    def stats(self) -> Dict[str, float]:
        n_items = self.catalog.n_items
        n_attr_links = sum(len(v) for v in self.catalog.item_attrs.values())
        actions = self.n_actions
        denom = max(self.n_users * n_items, 1)
        return {
            "users": self.n_users,
            "items": n_items,
            "actions": actions,
            "avg_length": actions / max(self.n_users, 1),
            "sparsity": 1.0 - actions / denom,
            "attributes": self.catalog.n_attrs,
            "avg_attributes_per_item": n_attr_links / max(n_items, 1),
        }


def count_unique(rows: Sequence[Sequence[int]]) -> int:
    """unique non-padding ids"""
    seen = set()
    for r in rows:
        seen.update(int(i) for i in r)
    seen.discard(PAD_ID)
    return len(seen)
