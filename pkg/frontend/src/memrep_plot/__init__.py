"""Figure rendering for memrep CSV artifacts."""

__version__ = "0.1.0"

from .render import FIGURE_KINDS, PlotJob, SchemaError, read_csv, render

__all__ = ["FIGURE_KINDS", "PlotJob", "SchemaError", "read_csv", "render"]
