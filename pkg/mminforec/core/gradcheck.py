from __future__ import annotations

# central finite differences as the oracle for every analytic gradient

import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from ..errors import GraphStateError, NonDeterministicGraph
from .dropout import DropoutMask
from .graph import Graph
from .tensor import Tensor

log = logging.getLogger("gradcheck")

# offsets (in steps) and weights of the central stencils, divided by step;
# weights sum to zero, so they are applied to f(x + kh) - f(x)
STENCILS = {
    2: ((1.0, 0.5), (-1.0, -0.5)),
    4: ((2.0, -1.0 / 12.0), (1.0, 8.0 / 12.0), (-1.0, -8.0 / 12.0), (-2.0, 1.0 / 12.0)),
}


@dataclass
class GradCheckReport:
    parameter: str
    max_rel_error: float
    checked: int
    # entries whose stencil points crossed a relu kink
    skipped: int
    worst_index: Optional[int] = None


def _scalar(graph: Graph, inputs: Mapping[str, Tensor], masks: Sequence[DropoutMask], output: str) -> float:
    outs = graph.forward(inputs, masks)
    if output not in outs:
        raise GraphStateError(f"{graph.name}: program has no output {output!r}")
    return float(outs[output].data.reshape(-1)[0])


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)


def check_gradient(
    graph: Graph,
    inputs: Mapping[str, Tensor],
    parameter: Tensor,
    step: float = 1e-3,
    masks: Sequence[DropoutMask] = (),
    output: str = "loss",
    max_entries: Optional[int] = None,
    seed: int = 0,
    order: int = 4,
) -> GradCheckReport:
    """
    Compare the analytic gradient of `output` w.r.t. `parameter` against central
    differences, entry by entry. order=4 uses the five-point stencil (error O(step^4)),
    order=2 the classic (f(x+h) - f(x-h)) / 2h.
    """
    if step <= 0:
        raise GraphStateError(f"step must be > 0, got {step}")
    if order not in STENCILS:
        raise GraphStateError(f"order must be one of {sorted(STENCILS)}, got {order}")
    if any(not m.frozen for m in masks):
        raise NonDeterministicGraph(f"{graph.name}: dropout masks must carry fixed seeds")

    outs = graph.forward(inputs, masks)
    if graph.unfrozen_dropout:
        raise NonDeterministicGraph(f"{graph.name}: a dropout node ran without a seeded mask")
    loss = outs[output]
    graph.backward(loss, [parameter])
    analytic = parameter.grad.reshape(-1).copy()
    base = float(loss.data.reshape(-1)[0])
    base_kinks = graph.kink_signature()

    # replay must be bit-identical
    if _scalar(graph, inputs, masks, output) != base:
        raise NonDeterministicGraph(f"{graph.name}: forward is not reproducible")

    flat = parameter.data.reshape(-1)
    entries = np.arange(flat.size)
    if max_entries is not None and flat.size > max_entries:
        entries = np.sort(np.random.default_rng(seed).choice(flat.size, size=max_entries, replace=False))

    stencil: Tuple[Tuple[float, float], ...] = STENCILS[order]
    worst, worst_at, checked, skipped = 0.0, None, 0, 0
    for idx in entries:
        keep = flat[idx]
        numeric, crossed = 0.0, False
        for offset, weight in stencil:
            flat[idx] = keep + offset * step
            numeric += weight * (_scalar(graph, inputs, masks, output) - base)
            crossed = crossed or graph.kink_signature() != base_kinks
        flat[idx] = keep

        if crossed:
            skipped += 1
            continue
        numeric /= step
        rel = relative_error(analytic[idx], numeric)
        checked += 1
        if rel > worst:
            worst, worst_at = rel, int(idx)

    name = parameter.name or "parameter"
    if skipped:
        log.debug("%s: skipped %s entries at relu kinks", name, skipped)
    return GradCheckReport(parameter=name, max_rel_error=worst, checked=checked, skipped=skipped, worst_index=worst_at)


def grad_check(
    graph: Graph,
    inputs: Mapping[str, Tensor],
    parameter: Tensor,
    step: float = 1e-3,
    mode: str = "central-difference",
    masks: Sequence[DropoutMask] = (),
    output: str = "loss",
) -> float:
    """max relative error of the analytic gradient vs central differences"""
    orders = {"central-difference": 4, "central-difference-2": 2}
    if mode not in orders:
        raise GraphStateError(f"unsupported mode {mode!r}")
    return check_gradient(graph, inputs, parameter, step=step, masks=masks, output=output, order=orders[mode]).max_rel_error
