from __future__ import annotations

# dynamic tape: rebuilt on every forward, walked in exact reverse on backward

import threading
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..errors import GraphStateError, NonFiniteError
from .dropout import DropoutMask
from .tensor import Tensor

BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]
Program = Callable[[Mapping[str, Tensor], Sequence[DropoutMask]], Dict[str, Tensor]]

_local = threading.local()


def _stack() -> List["Graph"]:
    st = getattr(_local, "stack", None)
    if st is None:
        st = []
        _local.stack = st
    return st


def active_graph() -> Optional["Graph"]:
    st = _stack()
    return st[-1] if st else None


@dataclass
class Node:
    index: int
    op: str
    out: Tensor
    parents: Tuple[Tensor, ...]
    backward: BackwardFn


@dataclass
class Graph:
    """records primitive ops executed while it is active.

    either wrap a program (forward() re-runs it) or use it directly as a
    context manager around eager code.
    """

    program: Optional[Program] = None
    name: str = "graph"
    nodes: List[Node] = field(default_factory=list)
    # relu activation patterns, used by the gradient checker to spot kinks
    kinks: List[np.ndarray] = field(default_factory=list)
    # set when a dropout op ran with an unseeded mask
    unfrozen_dropout: bool = False
    _forward_done: bool = False
    _outputs: Dict[str, Tensor] = field(default_factory=dict)

    # ---------- recording ----------

    def __enter__(self) -> "Graph":
        self.nodes = []
        self.kinks = []
        self.unfrozen_dropout = False
        self._forward_done = False
        _stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        st = _stack()
        if st and st[-1] is self:
            st.pop()
        self._forward_done = exc_type is None

    def record(self, op: str, out: Tensor, parents: Sequence[Tensor], backward: BackwardFn) -> Tensor:
        if not any(p.requires_grad for p in parents):
            return out
        out.requires_grad = True
        node = Node(index=len(self.nodes), op=op, out=out, parents=tuple(parents), backward=backward)
        out.node = node
        self.nodes.append(node)
        return out

    # ---------- forward / backward ----------

    def forward(self, inputs: Mapping[str, Tensor], masks: Sequence[DropoutMask] = ()) -> Dict[str, Tensor]:
        if self.program is None:
            raise GraphStateError(f"{self.name}: no program to run")
        for key, t in inputs.items():
            if not t.is_finite():
                raise NonFiniteError(f"{self.name}: input {key!r} has non-finite values")
        with self:
            outputs = self.program(inputs, tuple(masks))
        self._outputs = dict(outputs)
        return self._outputs

    def backward(self, loss: Tensor, params: Optional[Iterable[Tensor]] = None) -> Dict[str, np.ndarray]:
        if not self._forward_done:
            raise GraphStateError(f"{self.name}: backward before forward")
        if loss.size != 1:
            raise GraphStateError(f"{self.name}: loss must be scalar, got shape {loss.shape}")

        params = list(params or [])
        for p in params:
            p.zero_grad()

        grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        leaves: Dict[int, Tensor] = {}

        for node in reversed(self.nodes):
            g = grads.pop(id(node.out), None)
            if g is None:
                continue
            parent_grads = node.backward(g)
            for parent, pg in zip(node.parents, parent_grads):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg
                if parent.node is None:
                    leaves[key] = parent

        for key, leaf in leaves.items():
            g = grads.get(key)
            if g is None:
                continue
            if leaf.grad is None:
                leaf.grad = np.array(g, dtype=np.float64).reshape(leaf.shape)
            else:
                leaf.grad = leaf.grad + g

        out: Dict[str, np.ndarray] = {}
        for i, p in enumerate(params):
            out[p.name or f"param_{i}"] = p.grad
        return out

    def kink_signature(self) -> Tuple[bytes, ...]:
        return tuple(np.packbits(k).tobytes() for k in self.kinks)


def forward(graph: Graph, inputs: Mapping[str, Tensor], masks: Sequence[DropoutMask] = ()) -> Dict[str, Tensor]:
    return graph.forward(inputs, masks)


def backward(graph: Graph, loss: Tensor, params: Optional[Iterable[Tensor]] = None) -> Dict[str, np.ndarray]:
    return graph.backward(loss, params)
