from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, List, Sequence

import numpy as np

from .dataset import PAD_ID, Dataset, count_unique


@dataclass
class SequenceBatch:
    # B x L item ids, left-padded with PAD_ID
    items: np.ndarray
    # B x L, True on real items
    mask: np.ndarray
    users: np.ndarray
    # unique non-padding ids in the batch
    n_unique: int

    @property
    def size(self) -> int:
        return int(self.items.shape[0])


def pad_left(sequences: Sequence[Sequence[int]], length: int = 0) -> tuple[np.ndarray, np.ndarray]:
    width = max([length] + [len(s) for s in sequences])
    items = np.full((len(sequences), width), PAD_ID, dtype=np.int64)
    mask = np.zeros((len(sequences), width), dtype=bool)
    for r, seq in enumerate(sequences):
        if len(seq):
            items[r, width - len(seq):] = seq
            mask[r, width - len(seq):] = True
    return items, mask


def batch_of(sequences: Sequence[Sequence[int]], users: Sequence[int]) -> SequenceBatch:
    items, mask = pad_left(sequences)
    return SequenceBatch(items=items, mask=mask, users=np.asarray(users, dtype=np.int64), n_unique=count_unique(sequences))


def make_batches(dataset: Dataset, batch_size: int = 256, shuffle_seed: int = 0) -> Iterator[SequenceBatch]:
    """seeded shuffle of training prefixes, cut into batches of <= batch_size"""
    train = dataset.train_sequences()
    order = np.random.default_rng(shuffle_seed).permutation(len(train))
    for start in range(0, len(order), batch_size):
        users: List[int] = [int(u) for u in order[start:start + batch_size]]
        yield batch_of([train[u] for u in users], users)
