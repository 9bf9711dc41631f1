from __future__ import annotations

from typing import Optional

import numpy as np

from ..core import Tensor, ops
from ..errors import ConfigError, NoNegativesError
from .batch import ContrastiveBatch


def logits(batch: ContrastiveBatch, tau: float) -> Tensor:
    """T x q*U similarity logits (z_hat . z) / tau"""
    if not tau > 0:
        raise ConfigError("tau", f"must be > 0, got {tau}")
    return ops.scale(ops.matmul(batch.z_hat, ops.transpose(batch.bank)), 1.0 / tau)


def _check_sets(batch: ContrastiveBatch, q: int) -> np.ndarray:
    pos = batch.positive_mask
    n_pos = pos.sum(axis=1)
    if np.any(n_pos == 0):
        raise NoNegativesError("a target has an empty positive set")
    if np.any(n_pos != q):
        raise ConfigError("q", f"expected {q} positives per target, found {sorted(set(n_pos.tolist()))}")
    if np.any((~pos).sum(axis=1) == 0):
        raise NoNegativesError("a target has an empty negative set")
    return pos


def nce_per_target(batch: ContrastiveBatch, tau: float) -> Tensor:
    if batch.q != 1:
        raise ConfigError("q", f"nce takes a single positive per target, batch has q={batch.q}")
    pos = _check_sets(batch, 1)
    z = logits(batch, tau)
    pos_col = pos.argmax(axis=1)
    positive = ops.getitem(z, (np.arange(batch.n_targets), pos_col))
    return ops.sub(ops.logsumexp(z), positive)


def mince_per_target(batch: ContrastiveBatch, tau: float) -> Tensor:
    pos = _check_sets(batch, batch.q)
    z = logits(batch, tau)
    return ops.sub(ops.logsumexp(z), ops.logsumexp(z, mask=pos))


def nce_loss(batch: ContrastiveBatch, tau: float) -> Tensor:
    """mean over targets of -log(e^{s+} / (e^{s+} + sum_neg e^{s-}))"""
    return ops.mean(nce_per_target(batch, tau))


def mince_loss(batch: ContrastiveBatch, tau: float) -> Tensor:
    """mean over targets of -log(sum_pos e^{s} / (sum_pos e^{s} + sum_neg e^{s}))"""
    return ops.mean(mince_per_target(batch, tau))


def _rowdot(a: Tensor, b: Tensor) -> Tensor:
    return ops.sum(ops.mul(a, b), axis=1)


def bpr_loss(z_hat: Tensor, z_pos: Tensor, z_neg: Tensor) -> Tensor:
    """mean of -log sigmoid(z_hat.z+ - z_hat.z-)"""
    margin = ops.sub(_rowdot(z_hat, z_pos), _rowdot(z_hat, z_neg))
    return ops.mean(ops.softplus(ops.scale(margin, -1.0)))


def sample_bpr_negatives(batch: ContrastiveBatch, rng: np.random.Generator) -> np.ndarray:
    """one uniformly drawn in-batch negative column per target (first dropout instance)"""
    n = batch.D
    cols = np.empty(batch.n_targets, dtype=np.int64)
    target_col = np.searchsorted(batch.unique_items, batch.target_items)
    draw = rng.integers(0, n - 1, size=batch.n_targets)
    # skip over the target's own column
    cols[:] = draw + (draw >= target_col)
    return cols


def bpr_batch_loss(batch: ContrastiveBatch, rng: np.random.Generator) -> Tensor:
    if batch.D < 2:
        raise NoNegativesError("bpr needs at least two unique items in the batch")
    target_col = np.searchsorted(batch.unique_items, batch.target_items)
    neg_col = sample_bpr_negatives(batch, rng)
    return bpr_loss(batch.z_hat, ops.take(batch.bank, target_col), ops.take(batch.bank, neg_col))


def contrastive_loss(batch: ContrastiveBatch, variant: str, tau: float, rng: Optional[np.random.Generator] = None) -> Tensor:
    if variant == "nce":
        return nce_loss(batch, tau)
    if variant == "mince":
        return mince_loss(batch, tau)
    if variant == "bpr":
        return bpr_batch_loss(batch, rng if rng is not None else np.random.default_rng(0))
    raise ConfigError("loss_variant", f"unknown loss {variant!r}")
