"""Batch figure generation from slowmix result files.

Consumes only the documented result.csv / result.json contracts (see the
primary package's docs/formats.md); never recomputes the experiment
statistics.  The only derived quantities are presentation-level: the OLS
line drawn through the plotted points and, when no result.json is supplied,
the empirical CDF distance annotated on a comparison plot.
"""

from .core import (FigureSpec, render_correlation_decay,
                   render_distribution_compare, render_scaling_plot)

__version__ = "0.1.0"

__all__ = ["FigureSpec", "render_scaling_plot", "render_distribution_compare",
           "render_correlation_decay", "__version__"]
