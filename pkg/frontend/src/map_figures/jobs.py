"""Figure-job configuration: one JSON document per rendered image."""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

DEFAULT_PERCENTILES = (50.0, 75.0, 85.0, 90.0, 95.0, 97.0)
KINDS = ("choropleth", "lineplot")


@dataclass(frozen=True)
class FigureJob:
    kind: str
    inputs: tuple[str, ...]
    out: str
    geojson: str | None = None
    percentiles: tuple[float, ...] = DEFAULT_PERCENTILES
    value_column: str = "rmss_component"
    area_column: str = "area"
    disease_column: str = "disease"
    area_property: str = "area"
    x_column: str = "sigma22"
    y_column: str = "rmss_total"
    series_column: str = "scenario"
    row_filter: dict = field(default_factory=dict)
    title: str = ""
    cmap: str = "YlOrRd"
    dpi: int = 150

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"figure kind must be one of {KINDS}, got {self.kind!r}")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")
        for path in self.inputs:
            if not Path(path).exists():
                raise FileNotFoundError(path)
        if self.geojson is not None and not Path(self.geojson).exists():
            raise FileNotFoundError(self.geojson)
        ps = self.percentiles
        if not ps or any(not (0.0 < p < 100.0) for p in ps):
            raise ValueError("percentiles must lie strictly inside (0, 100)")
        if any(a >= b for a, b in zip(ps, ps[1:])):
            raise ValueError("percentiles must be strictly increasing")
        if self.kind == "choropleth" and self.geojson is None:
            raise ValueError("choropleth jobs need a geojson path")

    @classmethod
    def from_json(cls, text: str) -> "FigureJob":
        raw = json.loads(text)
        kw: dict = {}
        for key in ("kind", "out", "geojson", "value_column", "area_column",
                    "disease_column", "area_property", "x_column", "y_column",
                    "series_column", "title", "cmap"):
            if key in raw:
                kw[key] = raw[key]
        if "inputs" in raw:
            kw["inputs"] = tuple(raw["inputs"])
        elif "input" in raw:
            kw["inputs"] = (raw["input"],)
        if "percentiles" in raw:
            kw["percentiles"] = tuple(float(p) for p in raw["percentiles"])
        if "row_filter" in raw:
            kw["row_filter"] = dict(raw["row_filter"])
        if "dpi" in raw:
            kw["dpi"] = int(raw["dpi"])
        return cls(**kw)


def read_table(path: str) -> list[dict]:
    """Read a CSV table, skipping leading ``#`` provenance comment lines."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    if not rows:
        raise ValueError(f"no data rows in {path}")
    return rows


def apply_filter(rows: list[dict], row_filter: dict) -> list[dict]:
    for key in row_filter:
        if rows and key not in rows[0]:
            raise KeyError(f"filter column {key!r} not in CSV header")
    kept = [r for r in rows
            if all(r[k] == str(v) for k, v in row_filter.items())]
    if not kept:
        raise ValueError(f"row filter {row_filter!r} matched no rows")
    return kept
