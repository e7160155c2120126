"""Figure rendering for the experiment runner's CSV outputs."""

from .render import (
    KINDS,
    PHASE_HEATMAP,
    RIP_DECAY,
    VARIATION_LINES,
    PlotJob,
    SchemaError,
    render,
)

__all__ = [
    "KINDS",
    "PHASE_HEATMAP",
    "RIP_DECAY",
    "VARIATION_LINES",
    "PlotJob",
    "SchemaError",
    "render",
]
