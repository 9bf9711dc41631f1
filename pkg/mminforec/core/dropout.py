from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ..errors import ConfigError, ShapeError


@dataclass(frozen=True)
class DropoutMask:
    """dropout keyed by seed instead of by rng state.

    seed=None marks an unfrozen mask (fresh randomness per call); every
    other mask reproduces its keep pattern from (seed, rate, shape) alone.
    """

    seed: Optional[int]
    rate: float = 0.5
    shape: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if not (0.0 <= self.rate < 1.0):
            raise ConfigError("dropout_rate", f"must be in [0, 1), got {self.rate}")

    @property
    def frozen(self) -> bool:
        return self.seed is not None

    @property
    def is_identity(self) -> bool:
        return self.rate == 0.0

    def keep(self, shape: Sequence[int]) -> np.ndarray:
        """scaled keep pattern: 1/(1-rate) where kept, exactly 0 where dropped"""
        shape = tuple(int(s) for s in shape)
        if self.shape is not None and self.shape != shape:
            raise ShapeError("dropout", f"mask declared for {self.shape}, applied to {shape}")
        if self.rate == 0.0:
            return np.ones(shape, dtype=np.float64)
        rng = np.random.default_rng(self.seed)
        kept = rng.random(shape) >= self.rate
        return kept.astype(np.float64) * (1.0 / (1.0 - self.rate))

    def child(self, key: int) -> "DropoutMask":
        """independent mask for one dropout site inside a module"""
        if self.seed is None:
            return DropoutMask(None, self.rate)
        state = np.random.SeedSequence([int(self.seed) & 0xFFFFFFFFFFFFFFFF, int(key)]).generate_state(2, dtype=np.uint32)
        return DropoutMask(int(state[0]) << 32 | int(state[1]), self.rate)


def seeded(seed_base: int, count: int, rate: float) -> list[DropoutMask]:
    """masks seed_base+1 .. seed_base+count"""
    return [DropoutMask(seed_base + j, rate) for j in range(1, count + 1)]
