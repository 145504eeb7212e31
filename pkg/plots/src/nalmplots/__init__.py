"""Figure rendering for sweep summaries and RMSE surface grids.

Consumes only the documented CSV schemas of the training package; never
recomputes metrics.
"""

from .figures import FigureJob, render, read_summary_csv, read_surface_csv

__all__ = ["FigureJob", "render", "read_summary_csv", "read_surface_csv"]
