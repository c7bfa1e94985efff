"""Convergence-figure renderer for spcfr CSV traces."""

from .render import Layout, RenderedPanel, render, series_parallel_to_guide
from .traces import CSV_HEADER, TraceFile, TraceFormatError, fitted_slope, read_trace

__version__ = "0.1.0"
