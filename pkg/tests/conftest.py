from __future__ import annotations

import numpy as np
import pytest

from mminforec.data import Catalog, generate_synthetic, preprocess, split_leave_one_out
from mminforec.data.batches import batch_of
from mminforec.model import MMInfoRec, ModelConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def catalog():
    # 9 items, 5 attributes; item 9 has none
    attrs = {1: (1,), 2: (1, 2), 3: (2,), 4: (3, 4), 5: (4,), 6: (5,), 7: (1, 5), 8: (2, 3, 4)}
    return Catalog(n_items=9, n_attrs=5, item_attrs=attrs)


@pytest.fixture
def small_cfg():
    return ModelConfig(d=8, b=5, q=2, steps=2, tau=0.6, dropout_rate=0.5, max_len=10)


@pytest.fixture
def model(small_cfg, catalog):
    return MMInfoRec.create(small_cfg, catalog, seed=3)


@pytest.fixture
def seq_batch():
    return batch_of([[1, 2, 3, 4], [5, 2, 6], [7, 8, 9, 1, 3]], [0, 1, 2])


@pytest.fixture(scope="session")
def synth_corpus():
    return generate_synthetic(users=150, items=40, attrs=4, seed=11)


@pytest.fixture(scope="session")
def synth_dataset(synth_corpus):
    return split_leave_one_out(preprocess(synth_corpus.records))
