from __future__ import annotations

# reference rankers scored by the same rank / hr / ndcg code as the model

from typing import List

import numpy as np

from ..data.dataset import Dataset
from .ranking import Evaluation, evaluate_scorer


def popularity_scores(dataset: Dataset) -> np.ndarray:
    """training-split occurrence counts per item id"""
    counts = np.zeros(dataset.catalog.n_items + 1)
    for seq in dataset.train_sequences():
        np.add.at(counts, np.asarray(seq, dtype=np.int64), 1.0)
    return counts


def evaluate_popularity(dataset: Dataset, split: str) -> Evaluation:
    counts = popularity_scores(dataset)

    def scorer(contexts: List[List[int]]) -> np.ndarray:
        return np.tile(counts, (len(contexts), 1))

    return evaluate_scorer(scorer, dataset, split)


def evaluate_oracle(dataset: Dataset, transition: np.ndarray, split: str) -> Evaluation:
    """bayes ranking from the generator's own transition matrix (internal ids, row/col 0 padding)"""

    def scorer(contexts: List[List[int]]) -> np.ndarray:
        last = np.array([c[-1] for c in contexts], dtype=np.int64)
        return transition[last].copy()

    return evaluate_scorer(scorer, dataset, split)


def random_expectation(dataset: Dataset, k: int = 5) -> float:
    return k / dataset.catalog.n_items
