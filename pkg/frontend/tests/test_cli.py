import json
from pathlib import Path

from map_figures.cli import main


def test_cli_choropleth(components_csv, grid_geojson, tmp_path, capsys):
    job = {"kind": "choropleth", "input": components_csv,
           "geojson": grid_geojson, "out": str(tmp_path / "map.png")}
    jpath = tmp_path / "job.json"
    jpath.write_text(json.dumps(job))
    assert main(["--job", str(jpath)]) == 0
    assert capsys.readouterr().out.strip() == job["out"]
    assert Path(job["out"]).exists()


def test_cli_lineplot(metrics_csv, tmp_path):
    job = {"kind": "lineplot", "input": metrics_csv,
           "out": str(tmp_path / "lines.png")}
    jpath = tmp_path / "job.json"
    jpath.write_text(json.dumps(job))
    assert main(["--job", str(jpath)]) == 0
    assert Path(job["out"]).exists()


def test_cli_error_paths(components_csv, grid_geojson, tmp_path, capsys):
    jpath = tmp_path / "job.json"
    # bad percentiles -> exit 2 with a message
    jpath.write_text(json.dumps({
        "kind": "choropleth", "input": components_csv, "geojson": grid_geojson,
        "out": str(tmp_path / "x.png"), "percentiles": [90, 10]}))
    assert main(["--job", str(jpath)]) == 2
    assert "percentiles" in capsys.readouterr().err
    # missing input file -> exit 2
    jpath.write_text(json.dumps({
        "kind": "lineplot", "input": str(tmp_path / "nope.csv"),
        "out": str(tmp_path / "x.png")}))
    assert main(["--job", str(jpath)]) == 2


def test_cli_end_to_end_from_primary(tmp_path):
    """Consume a real artifact produced by the primary component's CLI."""
    import subprocess
    import sys

    cfg = {"lattice": [3, 3], "priors": ["icar"], "sigma": [0.04],
           "rho": [0.0], "lambda": [0.5],
           "fit": {"iterations": 200, "burn_in": 80, "chain_count": 1},
           "replicates": 2, "seed": 3, "out": str(tmp_path / "study")}
    cpath = tmp_path / "cfg.json"
    cpath.write_text(json.dumps(cfg))
    run = subprocess.run(
        [sys.executable, "-m", "carsmooth.cli", "within-study",
         "--config", str(cpath)], capture_output=True, text=True)
    assert run.returncode == 0, run.stderr
    csv_path = tmp_path / "study" / "within_study.csv"
    job = {"kind": "lineplot", "input": str(csv_path),
           "x_column": "sigma22", "y_column": "rmss_total",
           "series_column": "prior", "out": str(tmp_path / "fig.png")}
    jpath = tmp_path / "job.json"
    jpath.write_text(json.dumps(job))
    assert main(["--job", str(jpath)]) == 0
    assert Path(job["out"]).exists()
