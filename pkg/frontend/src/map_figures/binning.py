"""Percentile binning for choropleth fill classes."""

import numpy as np


def percentile_bins(values: np.ndarray, percentiles) -> tuple[np.ndarray, np.ndarray]:
    """Class index per value and the percentile edges.

    ``len(percentiles)`` edges give ``len(percentiles) + 1`` classes; class 0
    is below the first percentile, the top class is above the last.  Repeated
    edges (near-constant data) collapse classes gracefully: every value still
    gets a well-defined class via right-open binning.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("no values to bin")
    if np.any(~np.isfinite(values)):
        raise ValueError("non-finite values cannot be binned")
    edges = np.percentile(values, list(percentiles))
    classes = np.searchsorted(edges, values, side="right")
    return classes, edges


def bin_labels(edges: np.ndarray, fmt: str = "{:.3g}") -> list[str]:
    """Legend labels: '< e1', 'e1 - e2', ..., '> eK'."""
    labels = [f"< {fmt.format(edges[0])}"]
    labels += [f"{fmt.format(a)} – {fmt.format(b)}"
               for a, b in zip(edges[:-1], edges[1:])]
    labels.append(f"> {fmt.format(edges[-1])}")
    return labels
