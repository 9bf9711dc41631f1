from __future__ import annotations

# adam with bias correction and decoupled l2 decay

from dataclasses import dataclass, field
from typing import Dict, Mapping

import numpy as np

from ..errors import NonFiniteGradient
from ..model.params import ModelParams

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8


@dataclass
class AdamState:
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def for_params(cls, params: ModelParams) -> "AdamState":
        return cls(
            m={n: np.zeros_like(p.data) for n, p in params.items()},
            v={n: np.zeros_like(p.data) for n, p in params.items()},
        )


def check_finite(grads: Mapping[str, np.ndarray]) -> None:
    for name, g in grads.items():
        if g is not None and not np.all(np.isfinite(g)):
            raise NonFiniteGradient(name)


def adam_step(
    params: ModelParams,
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    lr: float,
    l2_weight: float = 0.0,
) -> AdamState:
    """in-place update of params; missing grads count as zero"""
    # nothing is touched if any gradient is bad
    check_finite(grads)
    state.t += 1
    bc1 = 1.0 - BETA1 ** state.t
    bc2 = 1.0 - BETA2 ** state.t

    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p.data)
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        m, v = state.m[name], state.v[name]
        m *= BETA1
        m += (1.0 - BETA1) * g
        v *= BETA2
        v += (1.0 - BETA2) * (g * g)

        if l2_weight:
            p.data -= lr * l2_weight * p.data
        p.data -= (lr / bc1) * m / (np.sqrt(v / bc2) + EPS)

    params.zero_padding()
    return state
