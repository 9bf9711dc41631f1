from __future__ import annotations

import hashlib
from collections import OrderedDict
from typing import Dict, Iterator, List, Tuple

import numpy as np

from ..core import Tensor
from .config import ModelConfig

# gradient-check / reporting groups
GROUPS = ("Emb_I", "Emb_A", "g_enc", "g_ta", "pos_enc", "MLP_m", "M", "g_ap")

# padding rows frozen at zero
FROZEN_ROWS = {"emb_item": (0,), "emb_attr": (0,)}


def group_of(name: str) -> str:
    if name == "emb_item":
        return "Emb_I"
    if name == "emb_attr":
        return "Emb_A"
    if name == "pos_enc":
        return "pos_enc"
    if name == "mem.M":
        return "M"
    head = name.split(".", 1)[0]
    return {"enc": "g_enc", "ta": "g_ta", "mem": "MLP_m", "ap": "g_ap"}[head]


class ModelParams:
    """every learnable array, by name, in a fixed order"""

    def __init__(self, tensors: "OrderedDict[str, Tensor]"):
        self.tensors = tensors

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self.tensors

    def __iter__(self) -> Iterator[Tensor]:
        return iter(self.tensors.values())

    def __len__(self) -> int:
        return len(self.tensors)

    def items(self):
        return self.tensors.items()

    def names(self) -> List[str]:
        return list(self.tensors)

    def group(self, group: str) -> List[Tensor]:
        return [t for n, t in self.tensors.items() if group_of(n) == group]

    def groups(self) -> Dict[str, List[Tensor]]:
        out: Dict[str, List[Tensor]] = {}
        for n, t in self.tensors.items():
            out.setdefault(group_of(n), []).append(t)
        return out

    def zero_padding(self) -> None:
        for name, rows in FROZEN_ROWS.items():
            if name in self.tensors:
                self.tensors[name].data[list(rows)] = 0.0

    def copy(self) -> "ModelParams":
        return ModelParams(OrderedDict(
            (n, Tensor(t.data.copy(), name=n, requires_grad=True)) for n, t in self.tensors.items()
        ))

    def load_from(self, other: "ModelParams") -> None:
        for n, t in self.tensors.items():
            t.data[...] = other[n].data

    def checksum(self) -> str:
        h = hashlib.sha256()
        for n, t in self.tensors.items():
            h.update(n.encode())
            h.update(np.ascontiguousarray(t.data, dtype="<f8").tobytes())
        return h.hexdigest()

    @property
    def memory_slots(self) -> int:
        return self.tensors["mem.M"].shape[0] if "mem.M" in self.tensors else 0


def _block_shapes(prefix: str, d: int, layers: int) -> List[Tuple[str, Tuple[int, ...], str]]:
    out = []
    for l in range(layers):
        p = f"{prefix}.{l}"
        out += [
            (f"{p}.ln1.g", (d,), "ones"), (f"{p}.ln1.b", (d,), "zeros"),
            (f"{p}.attn.wq", (d, d), "normal"), (f"{p}.attn.bq", (d,), "zeros"),
            (f"{p}.attn.wk", (d, d), "normal"), (f"{p}.attn.bk", (d,), "zeros"),
            (f"{p}.attn.wv", (d, d), "normal"), (f"{p}.attn.bv", (d,), "zeros"),
            (f"{p}.attn.wo", (d, d), "normal"), (f"{p}.attn.bo", (d,), "zeros"),
            (f"{p}.ln2.g", (d,), "ones"), (f"{p}.ln2.b", (d,), "zeros"),
            (f"{p}.ffn.w1", (d, d), "normal"), (f"{p}.ffn.b1", (d,), "zeros"),
            (f"{p}.ffn.w2", (d, d), "normal"), (f"{p}.ffn.b2", (d,), "zeros"),
        ]
    return out


def param_shapes(cfg: ModelConfig, n_items: int, n_attrs: int) -> List[Tuple[str, Tuple[int, ...], str]]:
    d = cfg.d
    shapes = [
        ("emb_item", (n_items + 1, d), "normal"),
        ("emb_attr", (n_attrs + 1, d), "normal"),
        ("pos_enc", (cfg.max_len, d), "normal"),
    ]
    shapes += _block_shapes("enc", d, cfg.layers)
    shapes += _block_shapes("ta", d, cfg.layers)
    if cfg.memory_variant != "none":
        shapes += [
            ("mem.w1", (d, d), "normal"), ("mem.b1", (d,), "zeros"),
            ("mem.w2", (d, cfg.b), "normal"), ("mem.b2", (cfg.b,), "zeros"),
            ("mem.M", (cfg.b, d), "normal"),
        ]
    for gate in ("r", "z", "n"):
        shapes += [
            (f"ap.w_{gate}", (d, d), "normal"),
            (f"ap.u_{gate}", (d, d), "normal"),
            (f"ap.b_{gate}", (d,), "zeros"),
        ]
    return shapes


def init_params(cfg: ModelConfig, n_items: int, n_attrs: int, seed: int = 0) -> ModelParams:
    """N(0, init_std) weights and embeddings, zero biases, unit layer-norm gains"""
    rng = np.random.default_rng(seed)
    tensors: "OrderedDict[str, Tensor]" = OrderedDict()
    for name, shape, kind in param_shapes(cfg, n_items, n_attrs):
        if kind == "normal":
            data = rng.normal(0.0, cfg.init_std, size=shape)
        elif kind == "ones":
            data = np.ones(shape)
        else:
            data = np.zeros(shape)
        tensors[name] = Tensor(data, name=name, requires_grad=True)
    params = ModelParams(tensors)
    params.zero_padding()
    return params
