import json

import numpy as np
import pytest


def _square(cx: float, cy: float, h: float = 0.5):
    return [[[cx - h, cy - h], [cx + h, cy - h], [cx + h, cy + h],
             [cx - h, cy + h], [cx - h, cy - h]]]


@pytest.fixture
def grid_geojson(tmp_path):
    """3x3 grid of unit squares, areas 1..9 (area 9 is a MultiPolygon)."""
    features = []
    for i in range(9):
        cx, cy = float(i % 3), float(i // 3)
        if i == 8:
            geom = {"type": "MultiPolygon",
                    "coordinates": [_square(cx, cy), _square(cx + 4.0, cy, 0.3)]}
        else:
            geom = {"type": "Polygon", "coordinates": _square(cx, cy)}
        features.append({"type": "Feature", "properties": {"area": i + 1},
                         "geometry": geom})
    path = tmp_path / "grid.geojson"
    path.write_text(json.dumps({"type": "FeatureCollection", "features": features}))
    return str(path)


@pytest.fixture
def components_csv(tmp_path):
    """Per-area component table for two diseases with one outlier area."""
    rng = np.random.default_rng(5)
    lines = ["# config_sha256=deadbeef seed=5",
             "prior,fit,disease,area,rmss_component,post_rate"]
    for disease in (1, 2):
        vals = rng.uniform(0.001, 0.002, 9)
        vals[6] = 0.5  # outlier area 7
        for area, v in enumerate(vals, start=1):
            lines.append(f"icar,joint,{disease},{area},{float(v)!r},0.01")
    path = tmp_path / "components.csv"
    path.write_text("\n".join(lines) + "\n")
    return str(path)


@pytest.fixture
def metrics_csv(tmp_path):
    """Scenario x sigma22 metric table (4 series, 3 x-ticks)."""
    lines = ["# config_sha256=cafef00d seed=1",
             "prior,scenario,sigma22,rmss_total"]
    for scenario in (1, 2, 3, 4):
        for k, s22 in enumerate((0.0025, 0.04, 0.25)):
            lines.append(f"icar,{scenario},{s22},{0.01 * scenario / (k + 1)!r}")
    path = tmp_path / "metrics.csv"
    path.write_text("\n".join(lines) + "\n")
    return str(path)
