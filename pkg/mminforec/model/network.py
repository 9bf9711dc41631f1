from __future__ import annotations

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..core import DropoutMask, Tensor, ops
from ..data.batches import pad_left
from ..data.dataset import PAD_ID, Catalog
from ..errors import ConfigError, GraphStateError, IdOutOfRange, ShapeError
from .config import ModelConfig
from .layers import mask_site, addressing_logits, gru_cell, transformer
from .params import ModelParams, init_params


class MMInfoRec:
    """item encoder g_enc, temporal aggregation g_ta, memory g_m, rollout g_ap, catalog scoring"""

    def __init__(self, cfg: ModelConfig, params: ModelParams, catalog: Catalog):
        self.cfg = cfg
        self.params = params
        self.catalog = catalog
        self.log = logging.getLogger("model")

    @classmethod
    def create(cls, cfg: ModelConfig, catalog: Catalog, seed: int = 0) -> "MMInfoRec":
        cfg.validate()
        return cls(cfg, init_params(cfg, catalog.n_items, catalog.n_attrs, seed=seed), catalog)

    # ---------- embeddings ----------

    def embed(
        self,
        item_ids: Sequence[int],
        attribute_ids: Optional[Sequence[Sequence[int]]] = None,
        m_max: Optional[int] = None,
    ) -> Tuple[Tensor, Tensor, np.ndarray]:
        """x: n x d item rows; a: n x m_max x d attribute rows; mask: n x m_max validity"""
        ids = np.asarray(item_ids, dtype=np.int64).reshape(-1)
        bad = ids[(ids < 0) | (ids > self.catalog.n_items)]
        if bad.size:
            raise IdOutOfRange("item", int(bad[0]), self.catalog.n_items)

        if attribute_ids is None:
            all_ids, all_mask = self.catalog.padded()
            a_ids, a_mask = all_ids[ids], all_mask[ids]
            if m_max is not None and m_max > a_ids.shape[1]:
                extra = m_max - a_ids.shape[1]
                a_ids = np.pad(a_ids, ((0, 0), (0, extra)))
                a_mask = np.pad(a_mask, ((0, 0), (0, extra)))
        else:
            if len(attribute_ids) != len(ids):
                raise ShapeError("embed", f"{len(ids)} items but {len(attribute_ids)} attribute lists")
            width = max([m_max or 0] + [len(a) for a in attribute_ids])
            a_ids = np.zeros((len(ids), width), dtype=np.int64)
            a_mask = np.zeros((len(ids), width), dtype=bool)
            for r, attrs in enumerate(attribute_ids):
                for c, a in enumerate(attrs):
                    self.catalog.check_attr(a)
                    a_ids[r, c] = a
                    a_mask[r, c] = True

        x = ops.gather(self.params["emb_item"], ids, frozen_rows=(PAD_ID,))
        a = ops.gather(self.params["emb_attr"], a_ids, frozen_rows=(PAD_ID,))
        return x, a, a_mask

    # ---------- g_enc ----------

    def encode_tokens(self, tokens: Tensor, valid: np.ndarray, mask: Optional[DropoutMask] = None) -> Tensor:
        """Transformer over each token set, output at the item token (position 0); no positions"""
        n, t, _ = tokens.shape
        if not np.all(valid.any(axis=1)):
            raise ShapeError("encode_item", "every token of an item is masked")
        allowed = np.broadcast_to(valid[:, None, :], (n, t, t)).copy()
        out = transformer(self.params, "enc", tokens, allowed, self.cfg.layers, self.cfg.heads, mask)
        return ops.getitem(out, (slice(None), 0, slice(None)))

    def encode_item(self, x: Tensor, a_set: Tensor, a_mask: np.ndarray, mask: Optional[DropoutMask] = None) -> Tensor:
        d = self.cfg.d
        m = a_set.shape[0]
        tokens = ops.concat([ops.reshape(x, (1, 1, d)), ops.reshape(a_set, (1, m, d))], axis=1)
        valid = np.concatenate([[True], np.asarray(a_mask, dtype=bool).reshape(-1)])[None, :]
        return self.encode_tokens(tokens, valid, mask)

    def encode_items(self, item_ids: Sequence[int], mask: Optional[DropoutMask] = None) -> Tensor:
        x, a, a_mask = self.embed(item_ids)
        n, d = x.shape
        tokens = ops.concat([ops.reshape(x, (n, 1, d)), a], axis=1)
        valid = np.concatenate([np.ones((n, 1), dtype=bool), a_mask], axis=1)
        return self.encode_tokens(tokens, valid, mask)

    def encode_catalog(self, chunk: int = 1024) -> np.ndarray:
        """dropout-free z for ids 0..n_items (row 0 = padding)"""
        ids = np.arange(self.catalog.n_items + 1)
        parts = [self.encode_items(ids[s:s + chunk]).data for s in range(0, len(ids), chunk)]
        return np.concatenate(parts, axis=0)

    # ---------- g_ta ----------

    def aggregate_context(
        self, z_seq: Tensor, valid: Optional[np.ndarray] = None, mask: Optional[DropoutMask] = None
    ) -> Tensor:
        """causal Transformer; row t depends only on rows <= t"""
        single = z_seq.ndim == 2
        if single:
            z_seq = ops.reshape(z_seq, (1,) + z_seq.shape)
        bsz, length, _ = z_seq.shape
        if length > self.cfg.max_len:
            raise ShapeError("aggregate_context", f"length {length} exceeds max_len {self.cfg.max_len}")
        if valid is None:
            valid = np.ones((bsz, length), dtype=bool)

        # positions count from each user's first real item
        pos_ids = np.maximum(np.cumsum(valid, axis=1) - 1, 0)
        x = ops.add(z_seq, ops.gather(self.params["pos_enc"], pos_ids))
        x = ops.dropout(x, mask_site(mask, 0))

        causal = np.tril(np.ones((length, length), dtype=bool))
        allowed = causal[None, :, :] & valid[:, None, :]
        # padded queries see themselves only
        allowed |= np.eye(length, dtype=bool)[None, :, :]
        c = transformer(self.params, "ta", x, allowed, self.cfg.layers, self.cfg.heads, mask_site(mask, 1))
        return ops.reshape(c, c.shape[1:]) if single else c

    # ---------- g_m ----------

    def addressing_weights(self, c: Tensor) -> Tensor:
        return ops.softmax(addressing_logits(self.params, c))

    def memory_read(self, c: Tensor, variant: Optional[str] = None) -> Tensor:
        variant = variant or self.cfg.memory_variant
        if variant == "none" or "mem.M" not in self.params:
            raise GraphStateError("memory_read needs a memory module (memory_variant is none)")
        read = ops.matmul(self.addressing_weights(c), self.params["mem.M"])
        if variant == "res-m":
            return ops.add(read, c)
        return read

    def g_m(self, c: Tensor) -> Tensor:
        if self.cfg.memory_variant == "none":
            return c
        return self.memory_read(c)

    # ---------- g_ap ----------

    def rollout(self, c_t: Tensor, steps: Optional[int] = None) -> List[Tensor]:
        steps = self.cfg.steps if steps is None else steps
        if steps < 1:
            raise ConfigError("steps", f"must be >= 1, got {steps}")
        preds = [self.g_m(c_t)]
        state = c_t
        for _ in range(steps - 1):
            state = gru_cell(self.params, preds[-1], state)
            preds.append(self.g_m(state))
        return preds

    # ---------- scoring ----------

    def score_catalog(self, query, catalog_z: np.ndarray, padding_id: Optional[int] = PAD_ID) -> np.ndarray:
        q = query.data if isinstance(query, Tensor) else np.asarray(query, dtype=np.float64)
        z = catalog_z.data if isinstance(catalog_z, Tensor) else np.asarray(catalog_z, dtype=np.float64)
        if q.shape[-1] != z.shape[-1]:
            raise ShapeError("score_catalog", f"query dim {q.shape[-1]} vs catalog dim {z.shape[-1]}")
        scores = q @ z.T
        if q.ndim == 2 and q.shape[0] == 1:
            scores = scores[0]
        if padding_id is not None:
            scores[..., padding_id] = -np.inf
        return scores

    def query_vectors(self, contexts: Sequence[Sequence[int]], catalog_z: np.ndarray) -> np.ndarray:
        """c_t (or g_m(c_t)) at the last position of each context, dropout off"""
        contexts = [list(c)[-self.cfg.max_len:] for c in contexts]
        items, valid = pad_left(contexts)
        z_seq = catalog_z[items] * valid[..., None]
        c_all = self.aggregate_context(Tensor(z_seq), valid=valid)
        c_t = ops.getitem(c_all, (slice(None), -1, slice(None)))
        if self.cfg.score_source == "memory":
            c_t = self.g_m(c_t)
        return c_t.data
