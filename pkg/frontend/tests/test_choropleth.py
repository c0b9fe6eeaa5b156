import csv
import hashlib
import json
from pathlib import Path

import pytest

from map_figures import FigureJob, load_area_polygons, render_choropleth


def _job(components_csv, grid_geojson, out, **over):
    kw = dict(kind="choropleth", inputs=(components_csv,),
              geojson=grid_geojson, out=str(out))
    kw.update(over)
    return FigureJob(**kw)


def test_renders_one_panel_per_disease(components_csv, grid_geojson, tmp_path):
    out = render_choropleth(_job(components_csv, grid_geojson, tmp_path / "m.png"))
    assert Path(out).stat().st_size > 10_000


def test_pixel_identical_reruns(components_csv, grid_geojson, tmp_path):
    digests = []
    for name in ("a.png", "b.png"):
        out = render_choropleth(_job(components_csv, grid_geojson, tmp_path / name))
        digests.append(hashlib.sha256(Path(out).read_bytes()).hexdigest())
    assert digests[0] == digests[1]


def test_svg_output_deterministic(components_csv, grid_geojson, tmp_path):
    digests = []
    for name in ("a.svg", "b.svg"):
        out = render_choropleth(_job(components_csv, grid_geojson, tmp_path / name))
        digests.append(hashlib.sha256(Path(out).read_bytes()).hexdigest())
    assert digests[0] == digests[1]


def test_uniform_components_single_class(components_csv, grid_geojson, tmp_path):
    rows = [ln for ln in Path(components_csv).read_text().splitlines()
            if not ln.startswith("#")]
    header, data = rows[0], rows[1:]
    flat = [",".join(r.split(",")[:4] + ["0.01", "0.01"]) for r in data]
    path = tmp_path / "flat.csv"
    path.write_text("\n".join([header] + flat) + "\n")
    out = render_choropleth(_job(str(path), grid_geojson, tmp_path / "flat.png"))
    assert Path(out).exists()


def test_missing_area_named_in_error(components_csv, grid_geojson, tmp_path):
    rows = [ln for ln in Path(components_csv).read_text().splitlines()
            if not ln.startswith("#")]
    kept = [r for r in rows[1:] if not r.startswith("icar,joint,2,7,")]
    path = tmp_path / "short.csv"
    path.write_text("\n".join([rows[0]] + kept) + "\n")
    with pytest.raises(ValueError, match="area 7 missing"):
        render_choropleth(_job(str(path), grid_geojson, tmp_path / "x.png"))


def test_extra_area_rejected(components_csv, grid_geojson, tmp_path):
    rows = Path(components_csv).read_text().splitlines()
    rows.append("icar,joint,1,10,0.001,0.01")
    path = tmp_path / "extra.csv"
    path.write_text("\n".join(rows) + "\n")
    with pytest.raises(ValueError, match="area 10 not on the map"):
        render_choropleth(_job(str(path), grid_geojson, tmp_path / "x.png"))


def test_geojson_loader(grid_geojson):
    polys = load_area_polygons(grid_geojson, "area")
    assert set(polys) == set(range(1, 10))
    assert len(polys[9]) == 2  # the MultiPolygon
    assert polys[1][0].shape == (5, 2)


def test_geojson_errors(tmp_path, grid_geojson):
    doc = json.loads(Path(grid_geojson).read_text())
    doc["features"][0]["properties"] = {}
    bad = tmp_path / "bad.geojson"
    bad.write_text(json.dumps(doc))
    with pytest.raises(KeyError):
        load_area_polygons(str(bad), "area")
    doc = json.loads(Path(grid_geojson).read_text())
    doc["features"][1]["properties"]["area"] = 1
    bad.write_text(json.dumps(doc))
    with pytest.raises(ValueError, match="duplicate area"):
        load_area_polygons(str(bad), "area")


def test_non_numeric_cell_reports_row(components_csv, grid_geojson, tmp_path):
    rows = [ln for ln in Path(components_csv).read_text().splitlines()
            if not ln.startswith("#")]
    parts = rows[3].split(",")
    parts[4] = "oops"
    rows[3] = ",".join(parts)
    path = tmp_path / "bad.csv"
    path.write_text("\n".join(rows) + "\n")
    with pytest.raises(ValueError, match="data row 3"):
        render_choropleth(_job(str(path), grid_geojson, tmp_path / "x.png"))
