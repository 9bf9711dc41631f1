from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..data.dataset import PAD_ID
from ..errors import MMInfoRecError


def _check_finite(scores: np.ndarray, ref: np.ndarray | float) -> None:
    # -inf is allowed off-target (padding column); nan has no order
    if np.isnan(scores).any():
        raise MMInfoRecError("score vector contains nan")
    if not np.all(np.isfinite(ref)):
        raise MMInfoRecError("target score is not finite")


def rank_of_target(scores: np.ndarray, target: int, padding_id: Optional[int] = PAD_ID) -> int:
    """1 + strictly better items + equal-score items with a smaller id; counts, never sorts"""
    if padding_id is not None and int(target) == padding_id:
        raise MMInfoRecError("padding id cannot be a ranking target")
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    if not (0 <= int(target) < s.size):
        raise MMInfoRecError(f"target {target} outside a score vector of {s.size}")
    ref = s[target]
    _check_finite(s, ref)
    better = int(np.count_nonzero(s > ref))
    tied_before = int(np.count_nonzero(s[:target] == ref))
    return 1 + better + tied_before


def ranks_of_targets(scores: np.ndarray, targets: Sequence[int], padding_id: Optional[int] = PAD_ID) -> np.ndarray:
    """row-wise rank_of_target over a users x items score block"""
    s = np.asarray(scores, dtype=np.float64)
    t = np.asarray(targets, dtype=np.int64)
    if padding_id is not None and np.any(t == padding_id):
        raise MMInfoRecError("padding id cannot be a ranking target")
    ref = s[np.arange(len(t)), t][:, None]
    _check_finite(s, ref)
    before = np.arange(s.shape[1])[None, :] < t[:, None]
    return 1 + np.count_nonzero(s > ref, axis=1) + np.count_nonzero((s == ref) & before, axis=1)


def _ranks(ranks: Sequence[int], k: int) -> np.ndarray:
    r = np.asarray(ranks, dtype=np.int64).reshape(-1)
    if r.size == 0:
        raise MMInfoRecError("empty rank list")
    if k < 1:
        raise MMInfoRecError(f"K must be >= 1, got {k}")
    return r


def hr_at_k(ranks: Sequence[int], k: int) -> float:
    r = _ranks(ranks, k)
    return float(np.mean(r <= k))


def ndcg_at_k(ranks: Sequence[int], k: int) -> float:
    # one relevant item per user, so the ideal dcg is 1
    r = _ranks(ranks, k)
    gain = np.where(r <= k, 1.0 / np.log2(r + 1.0), 0.0)
    return float(np.mean(gain))
