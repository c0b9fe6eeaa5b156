"""Figure rendering for disease-mapping smoothing outputs.

Consumes the CSV and GeoJSON artifacts written by the `carsmooth` CLI and
renders two figure styles: per-area smoothing-component choropleths with
percentile-bin legends, and metric-vs-parameter line plots.
"""

from .binning import bin_labels, percentile_bins
from .choropleth import load_area_polygons, render_choropleth
from .jobs import DEFAULT_PERCENTILES, FigureJob, read_table
from .lineplot import render_lineplot

__all__ = [
    "DEFAULT_PERCENTILES",
    "FigureJob",
    "bin_labels",
    "load_area_polygons",
    "percentile_bins",
    "read_table",
    "render_choropleth",
    "render_lineplot",
]
