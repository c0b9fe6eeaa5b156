import json

import pytest

from map_figures import DEFAULT_PERCENTILES, FigureJob, read_table
from map_figures.jobs import apply_filter


def _job_kwargs(components_csv, grid_geojson, **over):
    kw = dict(kind="choropleth", inputs=(components_csv,), out="x.png",
              geojson=grid_geojson)
    kw.update(over)
    return kw


def test_default_percentiles():
    assert DEFAULT_PERCENTILES == (50.0, 75.0, 85.0, 90.0, 95.0, 97.0)


def test_from_json_roundtrip(components_csv, grid_geojson, tmp_path):
    doc = {"kind": "choropleth", "input": components_csv,
           "geojson": grid_geojson, "out": str(tmp_path / "m.png"),
           "percentiles": [10, 50, 90], "row_filter": {"prior": "icar"}}
    job = FigureJob.from_json(json.dumps(doc))
    assert job.inputs == (components_csv,)
    assert job.percentiles == (10.0, 50.0, 90.0)
    assert job.row_filter == {"prior": "icar"}


def test_percentile_validation(components_csv, grid_geojson):
    for bad in ((), (0.0, 50.0), (50.0, 50.0), (90.0, 10.0), (50.0, 100.0)):
        with pytest.raises(ValueError):
            FigureJob(**_job_kwargs(components_csv, grid_geojson, percentiles=bad))


def test_kind_and_path_validation(components_csv, grid_geojson):
    with pytest.raises(ValueError):
        FigureJob(**_job_kwargs(components_csv, grid_geojson, kind="scatter"))
    with pytest.raises(FileNotFoundError):
        FigureJob(**_job_kwargs("/nope.csv", grid_geojson))
    with pytest.raises(ValueError):
        FigureJob(**_job_kwargs(components_csv, None))  # choropleth needs a map


def test_read_table_skips_provenance(components_csv):
    rows = read_table(components_csv)
    assert len(rows) == 18
    assert set(rows[0]) == {"prior", "fit", "disease", "area",
                            "rmss_component", "post_rate"}


def test_apply_filter(components_csv):
    rows = read_table(components_csv)
    assert len(apply_filter(rows, {"disease": 1})) == 9
    with pytest.raises(ValueError):
        apply_filter(rows, {"prior": "lcar"})
    with pytest.raises(KeyError):
        apply_filter(rows, {"nope": 1})
