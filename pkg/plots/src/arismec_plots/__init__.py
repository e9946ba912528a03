"""Figure rendering for the experiment CSVs.

Reads only the versioned CSV files the solver package writes; no other
coupling.  Three figure families: convergence curves per element count,
final latency versus element count, and final latency versus the
surface x-coordinate.
"""

from .render import FAMILIES, PlotSpec, SchemaError, render

__all__ = ["FAMILIES", "PlotSpec", "SchemaError", "render"]
