import hashlib
from pathlib import Path

import pytest

from map_figures import FigureJob, render_lineplot
from map_figures.lineplot import _series
from map_figures.jobs import read_table


def _job(metrics_csv, out, **over):
    kw = dict(kind="lineplot", inputs=(metrics_csv,), out=str(out))
    kw.update(over)
    return FigureJob(**kw)


def test_four_lines_three_ticks(metrics_csv, tmp_path):
    job = _job(metrics_csv, tmp_path / "lines.png")
    series = _series(read_table(metrics_csv), job)
    assert sorted(series) == ["1", "2", "3", "4"]
    assert all(len(pts) == 3 for pts in series.values())
    out = render_lineplot(job)
    assert Path(out).stat().st_size > 5_000


def test_single_series_two_points(tmp_path):
    path = tmp_path / "two.csv"
    path.write_text("prior,scenario,sigma22,rmss_total\n"
                    "icar,1,0.04,0.02\nicar,1,0.25,0.01\n")
    out = render_lineplot(_job(str(path), tmp_path / "seg.png"))
    assert Path(out).exists()


def test_missing_column_error(metrics_csv, tmp_path):
    job = _job(metrics_csv, tmp_path / "x.png", y_column="nope")
    with pytest.raises(KeyError, match="nope"):
        render_lineplot(job)


def test_non_numeric_cell_reports_row(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("prior,scenario,sigma22,rmss_total\n"
                    "icar,1,0.04,0.02\nicar,1,abc,0.01\n")
    with pytest.raises(ValueError, match="data row 2"):
        render_lineplot(_job(str(path), tmp_path / "x.png"))


def test_pixel_identical_reruns(metrics_csv, tmp_path):
    digests = []
    for name in ("a.png", "b.png"):
        out = render_lineplot(_job(metrics_csv, tmp_path / name))
        digests.append(hashlib.sha256(Path(out).read_bytes()).hexdigest())
    assert digests[0] == digests[1]


def test_row_filter_and_multi_input(metrics_csv, tmp_path):
    job = _job(metrics_csv, tmp_path / "f.png",
               row_filter={"scenario": 1}, series_column="prior")
    series = _series(read_table(metrics_csv), job)  # unfiltered: one prior
    assert sorted(series) == ["icar"]
    out = render_lineplot(job)
    assert Path(out).exists()
