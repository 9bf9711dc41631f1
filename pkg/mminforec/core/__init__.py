from .tensor import Tensor, as_tensor
from .dropout import DropoutMask, seeded
from .graph import Graph, Node, active_graph, backward, forward
from .gradcheck import GradCheckReport, check_gradient, grad_check
from . import ops

__all__ = [
    "Tensor",
    "as_tensor",
    "DropoutMask",
    "seeded",
    "Graph",
    "Node",
    "active_graph",
    "forward",
    "backward",
    "GradCheckReport",
    "check_gradient",
    "grad_check",
    "ops",
]
