from __future__ import annotations

from dataclasses import replace

from ..errors import MMInfoRecError
from .dataset import Dataset, Split


def split_leave_one_out(dataset: Dataset) -> Dataset:
    """last item -> test, second-last -> validation, the rest -> training"""
    splits = []
    for k, seq in enumerate(dataset.sequences):
        if len(seq) < 3:
            raise MMInfoRecError(f"user {dataset.users[k]!r} has {len(seq)} items; leave-one-out needs 3")
        splits.append(Split(train=tuple(seq[:-2]), valid=seq[-2], test=seq[-1]))
    return replace(dataset, splits=splits)
