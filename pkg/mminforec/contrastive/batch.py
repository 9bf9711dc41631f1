from __future__ import annotations

# positive / negative construction from one training mini-batch.
# bank layout is instance-major: column j*U + k is dropout instance j of unique item k

from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np

from ..core import DropoutMask, Tensor, ops, seeded
from ..data.batches import SequenceBatch
from ..data.dataset import PAD_ID
from ..errors import NoNegativesError
from ..model.network import MMInfoRec


@dataclass
class ContrastiveBatch:
    # rows of (sequence index, context position, rollout step, target item id)
    targets: np.ndarray
    z_hat: Tensor
    bank: Tensor
    bank_items: np.ndarray
    unique_items: np.ndarray
    q: int
    # T x q*U: bank column comes from the target's own sequence (temporal negative)
    temporal: np.ndarray

    @property
    def D(self) -> int:
        return int(len(self.unique_items))

    @property
    def n_targets(self) -> int:
        return int(self.targets.shape[0])

    @property
    def target_items(self) -> np.ndarray:
        return self.targets[:, 3]

    @property
    def positive_mask(self) -> np.ndarray:
        return self.bank_items[None, :] == self.target_items[:, None]

    @property
    def negative_mask(self) -> np.ndarray:
        return ~self.positive_mask

    def positives(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.positive_mask[i])

    def negatives(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.negative_mask[i])


@dataclass
class NegativeSet:
    unique: np.ndarray
    q: int
    # T x q*U: bank column is a negative for the target (any instance of another item)
    mask: np.ndarray
    # T x q*U: bank column's item occurs in the target's own sequence
    own: np.ndarray

    @property
    def bank_items(self) -> np.ndarray:
        return np.tile(self.unique, self.q)

    def indices(self, i: int = 0) -> np.ndarray:
        return np.flatnonzero(self.mask[i])

    def items(self, i: int = 0) -> np.ndarray:
        return self.bank_items[self.indices(i)]

    def temporal(self, i: int = 0) -> np.ndarray:
        """True = temporal (same sequence), False = general (other sequences only)"""
        return self.own[i][self.indices(i)]


def unique_items(rows: Sequence[Sequence[int]]) -> np.ndarray:
    flat = np.concatenate([np.asarray(r, dtype=np.int64).reshape(-1) for r in rows]) if len(rows) else np.zeros(0, np.int64)
    u = np.unique(flat)
    return u[u != PAD_ID]


def build_positive_set(
    model: MMInfoRec, items: Union[int, Sequence[int]], q: int, seed_base: int, rate: Optional[float] = None
) -> List[Tensor]:
    """
    q encodings of `items` under masks seed_base+1 .. seed_base+q.
    Row k of every instance belongs to items[k]; stacked instance-major they form the bank.
    """
    ids = np.atleast_1d(np.asarray(items, dtype=np.int64))
    rate = model.cfg.dropout_rate if rate is None else rate
    return [model.encode_items(ids, m) for m in seeded(seed_base, q, rate)]


def build_negative_set(batch_items: Sequence[Sequence[int]], targets, q: int) -> NegativeSet:
    """
    every unique batch item except the target id, q instances each.
    targets: one (seq, t, id) triple or a T x 3 array of them.
    """
    unique = unique_items(batch_items)
    if len(unique) < 2:
        raise NoNegativesError(f"batch has {len(unique)} unique item(s); no negatives available")
    rows = np.atleast_2d(np.asarray(targets, dtype=np.int64))
    cols = np.tile(np.arange(len(unique)), q)
    mask = unique[cols][None, :] != rows[:, -1][:, None]
    seq_has = np.stack([np.isin(unique, np.asarray(r)) for r in batch_items])
    return NegativeSet(unique=unique, q=q, mask=mask, own=seq_has[rows[:, 0]][:, cols])


def batch_seed(seed: int, epoch: int, step: int) -> int:
    """seed_base per training step; low byte left free for mask offsets"""
    state = np.random.SeedSequence([int(seed), int(epoch), int(step)]).generate_state(1, dtype=np.uint32)
    return int(state[0]) << 8


def build_contrastive_batch(
    model: MMInfoRec, batch: SequenceBatch, seed_base: int, q: Optional[int] = None, dropout: bool = True
) -> ContrastiveBatch:
    cfg = model.cfg
    q = (cfg.q if cfg.loss_variant == "mince" else 1) if q is None else q
    if batch.items.shape[1] > cfg.max_len:
        # keep the most recent max_len positions
        items, mask = batch.items[:, -cfg.max_len:], batch.mask[:, -cfg.max_len:]
        batch = SequenceBatch(items=items, mask=mask, users=batch.users, n_unique=batch.n_unique)
    unique = unique_items(batch.items)
    if len(unique) < 2:
        raise NoNegativesError(f"batch has {len(unique)} unique item(s); no negatives available")
    rate = cfg.dropout_rate if dropout else 0.0

    # q dropout instances of every unique item
    encs = build_positive_set(model, unique, q, seed_base, rate)
    bank = ops.concat(encs, axis=0) if q > 1 else encs[0]

    # g_ta input: instance 1, zero on padding
    bsz, length = batch.items.shape
    lookup = np.searchsorted(unique, batch.items)
    lookup[~batch.mask] = 0
    z_seq = ops.reshape(ops.take(encs[0], lookup.reshape(-1)), (bsz, length, cfg.d))
    z_seq = ops.mul(z_seq, batch.mask[..., None].astype(np.float64))
    ta_mask = DropoutMask(seed_base + q + 1, rate) if rate > 0 else None
    c_all = model.aggregate_context(z_seq, valid=batch.mask, mask=ta_mask)
    c_flat = ops.reshape(c_all, (bsz * length, cfg.d))

    # contexts: every real position that has a next item (left padding => t+1 is real)
    rows_b, rows_t = np.nonzero(batch.mask[:, :-1])
    if rows_b.size == 0:
        raise NoNegativesError("batch has no prediction targets")
    c_ctx = ops.take(c_flat, rows_b * length + rows_t)
    preds = model.rollout(c_ctx, cfg.steps)

    z_parts, target_rows = [], []
    for j, pred in enumerate(preds, start=1):
        # multi-step targets past the sequence end are skipped
        ok = rows_t + j < length
        if not ok.any():
            continue
        sel = np.flatnonzero(ok)
        z_parts.append(ops.take(pred, sel))
        b, t = rows_b[sel], rows_t[sel]
        target_rows.append(np.stack([b, t, np.full_like(b, j), batch.items[b, t + j]], axis=1))
    if not z_parts:
        raise NoNegativesError("batch has no prediction targets")
    z_hat = ops.concat(z_parts, axis=0) if len(z_parts) > 1 else z_parts[0]
    targets = np.concatenate(target_rows, axis=0)

    negatives = build_negative_set(batch.items, targets, q)
    return ContrastiveBatch(
        targets=targets, z_hat=z_hat, bank=bank, bank_items=negatives.bank_items,
        unique_items=unique, q=q, temporal=negatives.own,
    )
