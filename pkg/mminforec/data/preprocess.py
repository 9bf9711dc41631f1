from __future__ import annotations

import logging
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np
import pandas as pd

from ..errors import DatasetVersionMismatch, EmptyDatasetError
from .dataset import MAX_LEN, MIN_COUNT, Catalog, Dataset, RawInteraction
from .parse import ParseReport, RawRecords

log = logging.getLogger("data")


def _frame(interactions: Sequence[RawInteraction]) -> pd.DataFrame:
    df = pd.DataFrame(
        {
            "user": [r.user for r in interactions],
            "item": [r.item for r in interactions],
            "ts": np.array([r.timestamp for r in interactions], dtype=np.int64),
        }
    )
    # input order breaks timestamp ties
    df["order"] = np.arange(len(df), dtype=np.int64)
    return df.sort_values(["user", "ts", "order"], kind="mergesort").reset_index(drop=True)


def filter_counts(df: pd.DataFrame, min_count: int = MIN_COUNT) -> pd.DataFrame:
    """one item-frequency pass, then one sequence-length pass"""
    item_freq = df["item"].map(df["item"].value_counts())
    df = df[item_freq >= min_count]
    seq_len = df["user"].map(df["user"].value_counts())
    return df[seq_len >= min_count]


def truncate_recent(df: pd.DataFrame, max_len: int = MAX_LEN) -> pd.DataFrame:
    """keep the last max_len actions of every user (df sorted by user, time)"""
    from_end = df.groupby("user", sort=False).cumcount(ascending=False)
    return df[from_end < max_len]


def k_core(df: pd.DataFrame, min_count: int = MIN_COUNT, max_len: int = MAX_LEN) -> pd.DataFrame:
    """
    filter_counts then truncate_recent, repeated until nothing changes.
    truncation can push an item back under min_count, so it is part of every round.
    """
    rounds = 0
    while True:
        rounds += 1
        before = len(df)
        df = truncate_recent(filter_counts(df, min_count), max_len)
        if len(df) == before:
            break
    log.info("k-core fixpoint after %s rounds: %s actions", rounds, len(df))
    return df


def preprocess(
    records: RawRecords,
    min_count: int = MIN_COUNT,
    max_len: int = MAX_LEN,
) -> Dataset:
    if not records.interactions:
        raise EmptyDatasetError("no interactions to preprocess")

    df = k_core(_frame(records.interactions), min_count=min_count, max_len=max_len)
    if df.empty:
        raise EmptyDatasetError(f"nothing survives the {min_count}-core filter")

    users = sorted(df["user"].unique())
    items = sorted(df["item"].unique())
    item_id = {ext: i for i, ext in enumerate(items, start=1)}

    # attributes restricted to surviving items
    kept_attrs: Dict[str, Tuple[str, ...]] = {
        ext: records.attributes.get(ext, ()) for ext in items if records.attributes.get(ext)
    }
    attrs = sorted({a for v in kept_attrs.values() for a in v})
    attr_id = {ext: a for a, ext in enumerate(attrs, start=1)}

    catalog = Catalog(
        n_items=len(items),
        n_attrs=len(attrs),
        item_attrs={item_id[ext]: tuple(attr_id[a] for a in v) for ext, v in kept_attrs.items()},
    )

    grouped = df.groupby("user", sort=True)["item"].apply(list)
    sequences: List[List[int]] = [[item_id[i] for i in grouped[u]] for u in users]

    ds = Dataset(
        sequences=sequences,
        catalog=catalog,
        users=list(users),
        items=[""] + list(items),
        attrs=[""] + list(attrs),
    )
    log.info("preprocessed: %s users, %s items, %s actions", ds.n_users, catalog.n_items, ds.n_actions)
    return ds


def to_records(dataset: Dataset) -> RawRecords:
    """external-id records reproducing the dataset (timestamps = positions)"""
    interactions = [
        RawInteraction(dataset.users[u], dataset.items[i], t)
        for u, seq in enumerate(dataset.sequences)
        for t, i in enumerate(seq)
    ]
    attributes = {
        dataset.items[i]: tuple(dataset.attrs[a] for a in v)
        for i, v in dataset.catalog.item_attrs.items()
    }
    return RawRecords(interactions=interactions, attributes=attributes, report=ParseReport())


def check_reference(stats: Mapping[str, float], name: str, reference: Mapping[str, Mapping[str, int]]) -> None:
    """compare user/item/action counts with a published reference"""
    if name not in reference:
        raise DatasetVersionMismatch(f"no reference counts for {name!r}; known: {sorted(reference)}")
    want = reference[name]
    diffs = [
        f"{key}: expected {want[key]}, got {int(stats.get(key, -1))}"
        for key in ("users", "items", "actions")
        if key in want and int(stats.get(key, -1)) != int(want[key])
    ]
    if diffs:
        raise DatasetVersionMismatch(
            f"{name}: counts differ from the reference release ({'; '.join(diffs)}); "
            "the raw dump is probably a different dataset version"
        )
