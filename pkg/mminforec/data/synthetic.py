from __future__ import annotations

# markov-chain corpus with known dynamics, the desk-scale acceptance substrate

import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from ..errors import ConfigError
from .dataset import Dataset, RawInteraction
from .parse import ParseReport, RawRecords

log = logging.getLogger("data")

WITHIN_CLUSTER_MASS = 0.8
MIN_LEN, MAX_LEN = 8, 30
BASE_TS = 1_546_300_800


@dataclass
class SyntheticCorpus:
    records: RawRecords
    # transition[i, j] = P(next = item_names[j] | current = item_names[i])
    transition: np.ndarray
    item_names: List[str]
    clusters: np.ndarray

    def internal_transition(self, dataset: Dataset) -> np.ndarray:
        """transition matrix re-indexed by the dataset's internal item ids (row/col 0 = padding)"""
        pos = {name: k for k, name in enumerate(self.item_names)}
        idx = np.array([pos[name] for name in dataset.items[1:]], dtype=np.int64)
        out = np.zeros((len(dataset.items), len(dataset.items)))
        out[1:, 1:] = self.transition[np.ix_(idx, idx)]
        return out


def transition_matrix(clusters: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = len(clusters)
    noise = (1.0 - WITHIN_CLUSTER_MASS) / (n - 1)
    P = np.full((n, n), noise)
    np.fill_diagonal(P, 0.0)
    for i in range(n):
        mates = np.flatnonzero((clusters == clusters[i]) & (np.arange(n) != i))
        # peaked preferences inside the cluster
        P[i, mates] += WITHIN_CLUSTER_MASS * rng.dirichlet(np.full(len(mates), 0.5))
    return P / P.sum(axis=1, keepdims=True)


def generate_synthetic(users: int = 1000, items: int = 200, attrs: int = 20, seed: int = 7) -> SyntheticCorpus:
    if items < 20:
        raise ConfigError("items", f"need at least 20 items, got {items}")
    if users < 100:
        raise ConfigError("users", f"need at least 100 users, got {users}")
    if attrs < 1 or items < 2 * attrs:
        raise ConfigError("attrs", f"need 1 <= attrs <= items/2, got {attrs}")

    rng = np.random.default_rng(seed)
    clusters = rng.permutation(np.arange(items) % attrs)
    P = transition_matrix(clusters, rng)
    cdf = np.cumsum(P, axis=1)

    item_names = [f"i{k}" for k in range(items)]
    attributes: Dict[str, Tuple[str, ...]] = {item_names[k]: (f"c{clusters[k]}",) for k in range(items)}

    interactions: List[RawInteraction] = []
    for u in range(users):
        length = int(rng.integers(MIN_LEN, MAX_LEN + 1))
        cur = int(rng.integers(items))
        ts = BASE_TS + u * 86_400
        for step in range(length):
            interactions.append(RawInteraction(f"u{u}", item_names[cur], ts + step * 60))
            cur = min(int(np.searchsorted(cdf[cur], rng.random(), side="right")), items - 1)

    log.info("synthetic corpus: %s users, %s items, %s actions", users, items, len(interactions))
    records = RawRecords(interactions=interactions, attributes=attributes, report=ParseReport())
    return SyntheticCorpus(records=records, transition=P, item_names=item_names, clusters=clusters)
