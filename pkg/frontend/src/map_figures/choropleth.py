"""Per-area component choropleths with percentile-bin legends."""

import json

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.collections import PolyCollection
from matplotlib.patches import Patch

from .binning import bin_labels, percentile_bins
from .jobs import FigureJob, apply_filter, read_table
from .render import save_figure


def load_area_polygons(path: str, area_property: str) -> dict[int, list[np.ndarray]]:
    """Area index -> list of exterior rings from a GeoJSON FeatureCollection."""
    with open(path) as fh:
        doc = json.load(fh)
    features = doc.get("features", [])
    if not features:
        raise ValueError(f"no features in {path}")
    polygons: dict[int, list[np.ndarray]] = {}
    for feat in features:
        props = feat.get("properties", {})
        if area_property not in props:
            raise KeyError(f"feature missing area property {area_property!r}")
        area = int(props[area_property])
        if area in polygons:
            raise ValueError(f"duplicate area {area} in {path}")
        geom = feat.get("geometry", {})
        gtype, coords = geom.get("type"), geom.get("coordinates")
        if gtype == "Polygon":
            rings = [coords[0]]
        elif gtype == "MultiPolygon":
            rings = [poly[0] for poly in coords]
        else:
            raise ValueError(f"unsupported geometry type {gtype!r} for area {area}")
        polygons[area] = [np.asarray(r, dtype=float) for r in rings]
    return polygons


def _join(rows: list[dict], polygons: dict[int, list[np.ndarray]], job: FigureJob):
    """Per-disease area->value maps, with a bijective area check."""
    table: dict[int, dict[int, float]] = {}
    for idx, row in enumerate(rows, start=1):
        try:
            disease = int(row[job.disease_column])
            area = int(row[job.area_column])
            value = float(row[job.value_column])
        except KeyError as exc:
            raise KeyError(f"CSV missing column {exc.args[0]!r}") from exc
        except ValueError as exc:
            raise ValueError(f"non-numeric cell in data row {idx}: {exc}") from exc
        table.setdefault(disease, {})[area] = value
    map_areas = set(polygons)
    for disease, per_area in sorted(table.items()):
        csv_areas = set(per_area)
        missing = sorted(map_areas - csv_areas)
        extra = sorted(csv_areas - map_areas)
        if missing:
            raise ValueError(f"disease {disease}: area {missing[0]} missing from CSV")
        if extra:
            raise ValueError(f"disease {disease}: area {extra[0]} not on the map")
    return table


def render_choropleth(job: FigureJob) -> str:
    """One percentile-binned map panel per disease; returns the output path."""
    rows = apply_filter(read_table(job.inputs[0]), job.row_filter)
    polygons = load_area_polygons(job.geojson, job.area_property)
    table = _join(rows, polygons, job)

    diseases = sorted(table)
    num_classes = len(job.percentiles) + 1
    cmap = plt.get_cmap(job.cmap, num_classes)
    fig, axes = plt.subplots(
        1, len(diseases), figsize=(5.2 * len(diseases), 4.6), squeeze=False)
    for ax, disease in zip(axes[0], diseases):
        areas = sorted(table[disease])
        values = np.array([table[disease][a] for a in areas])
        classes, edges = percentile_bins(values, job.percentiles)
        verts, colors = [], []
        for area, cls in zip(areas, classes):
            for ring in polygons[area]:
                verts.append(ring)
                colors.append(cmap(cls))
        ax.add_collection(PolyCollection(
            verts, facecolors=colors, edgecolors="black", linewidths=0.4))
        ax.autoscale_view()
        ax.set_aspect("equal")
        ax.set_axis_off()
        ax.set_title(f"Disease {disease}")
        handles = [Patch(facecolor=cmap(k), edgecolor="black", linewidth=0.4)
                   for k in range(num_classes)]
        ax.legend(handles, bin_labels(edges), loc="center left",
                  bbox_to_anchor=(1.0, 0.5), fontsize=7, frameon=False,
                  title="percentile bins", title_fontsize=7)
    if job.title:
        fig.suptitle(job.title)
    return save_figure(fig, job)
