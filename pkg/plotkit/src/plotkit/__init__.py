"""Render phase heatmaps and nullspace-constant scatter grids from CSV files.

This package draws; it never recomputes any of the science. Everything it
shows comes straight out of the documented CSV columns.
"""

__version__ = "0.1.0"

from .render import PlotSpec, render_phase, render_scatter
