from __future__ import annotations

from typing import Optional, Sequence, Union

import numpy as np

ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence]


class Tensor:
    """float64 array with an optional gradient slot.

    tensors produced by ops inside an active Graph remember the graph node
    that wrote them; leaves (parameters, inputs) do not.
    """

    __slots__ = ("data", "grad", "name", "requires_grad", "node")

    def __init__(self, data: ArrayLike, *, name: Optional[str] = None, requires_grad: bool = False):
        if isinstance(data, Tensor):
            data = data.data
        self.data: np.ndarray = np.array(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self.requires_grad = requires_grad
        self.node = None

    # ---------- views ----------

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.data)))

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"

    # ---------- operators (thin sugar over ops) ----------

    def __add__(self, other: ArrayLike) -> "Tensor":
        from . import ops
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other: ArrayLike) -> "Tensor":
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other: ArrayLike) -> "Tensor":
        from . import ops
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self) -> "Tensor":
        from . import ops
        return ops.scale(self, -1.0)

    def __matmul__(self, other: ArrayLike) -> "Tensor":
        from . import ops
        return ops.matmul(self, other)

    def __getitem__(self, key) -> "Tensor":
        from . import ops
        return ops.getitem(self, key)


def as_tensor(x: ArrayLike) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)
