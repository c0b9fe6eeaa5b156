import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from carsmooth.cli import main
from carsmooth.ioutils import config_sha256, read_csv, write_csv


def _write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


FAST_FIT = {"iterations": 300, "burn_in": 100, "chain_count": 1, "thinning": 2}


# ---------------------------------------------------------------- ioutils
def test_write_csv_header_and_roundtrip(tmp_path):
    p = tmp_path / "x.csv"
    cfg = {"a": 1, "b": [1, 2]}
    rows = [{"u": 1, "v": 0.1 + 0.2}, {"u": 2, "v": -3.0}]
    write_csv(p, ["u", "v"], rows, cfg, seed=9)
    meta, back = read_csv(p)
    assert meta["config_sha256"] == config_sha256(cfg)
    assert meta["seed"] == "9"
    assert float(back[0]["v"]) == 0.1 + 0.2  # repr round-trip is exact
    with pytest.raises(FileExistsError):
        write_csv(p, ["u", "v"], rows, cfg, seed=9)
    write_csv(p, ["u", "v"], rows, cfg, seed=9, force=True)


def test_config_hash_is_order_insensitive():
    assert config_sha256({"a": 1, "b": 2}) == config_sha256({"b": 2, "a": 1})
    assert config_sha256({"a": 1}) != config_sha256({"a": 2})


# ---------------------------------------------------------------- tcv
def test_tcv_spain_18_rows(tmp_path):
    import carsmooth

    edge_src = Path(carsmooth.__file__).parent / "data" / "spain_provinces_47.txt"
    cfg = _write(tmp_path, "c.json", {
        "graph_path": str(edge_src), "priors": ["icar"],
        "sigma": [0.0025, 0.04, 0.25], "rho": [0.0, 0.7],
        "out": str(tmp_path / "out"), "seed": 1,
    })
    assert main(["tcv", "--config", cfg]) == 0
    meta, rows = read_csv(tmp_path / "out" / "tcv.csv")
    assert len(rows) == 18
    assert main(["tcv", "--config", cfg]) == 3  # refuse without --force
    assert main(["tcv", "--config", cfg, "--force"]) == 0


def test_tcv_lcar_lambda_direction(tmp_path):
    cfg = _write(tmp_path, "c.json", {
        "lattice": [10, 10], "priors": ["lcar"], "sigma": [0.04],
        "rho": [0.0], "lambda": [0.2, 0.8], "out": str(tmp_path / "o"),
    })
    assert main(["tcv", "--config", cfg]) == 0
    _, rows = read_csv(tmp_path / "o" / "tcv.csv")
    by_lam = {float(r["lambda1"]): float(r["multitcv"]) for r in rows}
    assert by_lam[0.2] > by_lam[0.8]


def test_missing_config_is_input_error(tmp_path):
    assert main(["tcv", "--config", str(tmp_path / "nope.json")]) == 2


def test_bad_graph_path_is_input_error(tmp_path):
    cfg = _write(tmp_path, "c.json", {"graph_path": str(tmp_path / "no.txt"),
                                      "out": str(tmp_path / "o")})
    assert main(["tcv", "--config", cfg]) == 2


# ---------------------------------------------------------------- studies
def _study_cfg(tmp_path, **extra):
    base = {"lattice": [4, 4], "priors": ["icar"], "sigma": [0.04],
            "rho": [0.0], "fit": FAST_FIT, "replicates": 1,
            "out": str(tmp_path / "study"), "seed": 3}
    base.update(extra)
    return _write(tmp_path, "study.json", base)


def test_within_study_smoke_and_determinism(tmp_path):
    cfg = _study_cfg(tmp_path)
    assert main(["within-study", "--config", cfg]) == 0
    final = tmp_path / "study" / "within_study.csv"
    text1 = final.read_bytes()

    # rerun refuses, then --force reproduces byte-identically
    assert main(["within-study", "--config", cfg]) == 3
    assert main(["within-study", "--config", cfg, "--force"]) == 0
    assert final.read_bytes() == text1


def test_within_study_resumes_from_replicates(tmp_path):
    cfg = _study_cfg(tmp_path, replicates=2)
    assert main(["within-study", "--config", cfg]) == 0
    final = tmp_path / "study" / "within_study.csv"
    ref = final.read_bytes()
    reps = sorted((tmp_path / "study" / "replicates").iterdir())
    assert len(reps) == 2
    stamp = [p.stat().st_mtime_ns for p in reps]
    final.unlink()
    assert main(["within-study", "--config", cfg]) == 0
    assert final.read_bytes() == ref
    assert [p.stat().st_mtime_ns for p in reps] == stamp  # untouched: resumed


def test_across_study_smoke_with_workers(tmp_path):
    cfg = _study_cfg(tmp_path, priors=["icar", "lcar"], scenarios=[1])
    assert main(["across-study", "--config", cfg, "--workers", "2"]) == 0
    _, rows = read_csv(tmp_path / "study" / "across_study.csv")
    assert {r["prior"] for r in rows} == {"icar", "lcar"}
    _, hrows = read_csv(tmp_path / "study" / "across_hypers.csv")
    assert any(r["parameter"] == "lambda" for r in hrows)


# ---------------------------------------------------------------- simulate/fit/metrics/pg
def _simulated_data(tmp_path):
    out = tmp_path / "sim"
    cfg = _write(tmp_path, "sim.json", {
        "lattice": [3, 3], "scenarios": [1], "replicates": 1,
        "out": str(out), "seed": 5,
    })
    assert main(["simulate", "--config", cfg]) == 0
    counts_long = out / "scenario1_rep0_counts.csv"
    # strip the true_rate column into the ingestion schema
    _, rows = read_csv(counts_long)
    write_csv(out / "counts.csv", ["disease", "area", "count"],
              rows, {}, 0, force=True)
    return out / "counts.csv", out / "population.csv"


def test_simulate_fit_metrics_pipeline(tmp_path):
    counts, pop = _simulated_data(tmp_path)
    fit_cfg = _write(tmp_path, "fit.json", {
        "lattice": [3, 3], "counts_path": str(counts),
        "population_path": str(pop), "prior": "lcar",
        "fit": FAST_FIT, "out": str(tmp_path / "fit_out"), "seed": 6,
    })
    assert main(["fit", "--config", fit_cfg]) == 0
    rates = tmp_path / "fit_out" / "fit_rates.csv"
    assert rates.exists() and (tmp_path / "fit_out" / "fit_hypers.csv").exists()

    met_cfg = _write(tmp_path, "met.json", {
        "lattice": [3, 3], "counts_path": str(counts),
        "population_path": str(pop), "rates_path": str(rates),
        "out": str(tmp_path / "met_out"), "seed": 6,
    })
    assert main(["metrics", "--config", met_cfg]) == 0
    _, rows = read_csv(tmp_path / "met_out" / "metrics.csv")
    assert float(rows[0]["sp"]) >= 0.0


def test_fit_fixed_mode_needs_sigma(tmp_path):
    counts, pop = _simulated_data(tmp_path)
    cfg = _write(tmp_path, "f.json", {
        "lattice": [3, 3], "counts_path": str(counts),
        "population_path": str(pop), "prior": "lcar", "lambda": 0.5,
        "fit": FAST_FIT, "out": str(tmp_path / "fo"),
    })
    assert main(["fit", "--config", cfg, "--mode", "fixed"]) == 2


def test_pg_command(tmp_path, capsys):
    cfg = _write(tmp_path, "pg.json", {"a": [2.0, 3.0], "c": 1.5, "b": 4.0})
    assert main(["pg", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert "eta correlation" in out
    expected = 1.5 / np.sqrt(3.5 * 4.5)
    assert f"{expected:.10f}" in out


# ---------------------------------------------------------------- real data
def _three_disease_files(tmp_path):
    rng = np.random.default_rng(0)
    G = 9
    pop = rng.integers(5_000, 50_000, G)
    rates = rng.uniform(0.005, 0.05, (3, G))
    counts = rng.poisson(rates * pop)
    crows = [{"disease": j + 1, "area": i + 1, "count": int(counts[j, i])}
             for j in range(3) for i in range(G)]
    prows = [{"area": i + 1, "population": int(pop[i])} for i in range(G)]
    write_csv(tmp_path / "counts.csv", ["disease", "area", "count"], crows, {}, 0)
    write_csv(tmp_path / "pop.csv", ["area", "population"], prows, {}, 0)
    return tmp_path / "counts.csv", tmp_path / "pop.csv"


def test_real_data_pairwise_emits_three_reports(tmp_path):
    counts, pop = _three_disease_files(tmp_path)
    cfg = _write(tmp_path, "r.json", {
        "lattice": [3, 3], "counts_path": str(counts),
        "population_path": str(pop), "priors": ["lcar"],
        "fit": FAST_FIT, "out": str(tmp_path / "rd"), "seed": 2,
    })
    assert main(["real-data", "--config", cfg, "--pairwise"]) == 0
    _, rows = read_csv(tmp_path / "rd" / "real_data.csv")
    assert sorted(r["fit"] for r in rows) == ["pair12", "pair13", "pair23"]
    _, comp = read_csv(tmp_path / "rd" / "real_data_components.csv")
    assert len(comp) == 3 * 2 * 9  # three pairs x two diseases x nine areas


def test_real_data_geojson_feature_mismatch(tmp_path):
    counts, pop = _three_disease_files(tmp_path)
    geo = tmp_path / "map.geojson"
    geo.write_text(json.dumps({"type": "FeatureCollection", "features": [
        {"type": "Feature", "properties": {}, "geometry": None}] * 5}))
    cfg = _write(tmp_path, "r.json", {
        "lattice": [3, 3], "counts_path": str(counts),
        "population_path": str(pop), "priors": ["lcar"],
        "fit": FAST_FIT, "out": str(tmp_path / "rd2"), "seed": 2,
    })
    assert main(["real-data", "--config", cfg, "--geojson", str(geo)]) == 2


def test_real_data_geojson_join(tmp_path):
    counts, pop = _three_disease_files(tmp_path)
    geo = tmp_path / "map.geojson"
    geo.write_text(json.dumps({"type": "FeatureCollection", "features": [
        {"type": "Feature", "properties": {"name": f"a{i}"}, "geometry": None}
        for i in range(9)]}))
    cfg = _write(tmp_path, "r.json", {
        "lattice": [3, 3], "counts_path": str(counts),
        "population_path": str(pop), "priors": ["lcar"],
        "fit": FAST_FIT, "out": str(tmp_path / "rd3"), "seed": 2,
    })
    assert main(["real-data", "--config", cfg, "--geojson", str(geo)]) == 0
    doc = json.loads((tmp_path / "rd3" / "real_data_components.geojson").read_text())
    props = doc["features"][0]["properties"]
    assert any(k.startswith("rmss_component_") for k in props)


# ---------------------------------------------------------------- backends
def test_fit_identical_under_python_backend(tmp_path):
    """The forced pure-Python kernel reproduces the compiled fit bitwise."""
    script = r"""
import json, sys
import numpy as np
from carsmooth import ArealGraph, BetweenCov, FitConfig, GpConfig, PriorSpec, ScenarioConfig, fit
from carsmooth.scenario import Grid, simulate_replicate
g = ArealGraph.lattice(3, 3)
data = simulate_replicate(ScenarioConfig(1, gp=GpConfig(), seed=1),
                          Grid.for_lattice(3, 3), np.full(9, 20000, dtype=np.int64), 0)
s = fit(data, g, PriorSpec("lcar", 0.5),
        FitConfig(iterations=300, burn_in=100, chain_count=1, seed=8, mode="fixed"),
        sigma_b=BetweenCov.from_correlation((0.04, 0.04), 0.0))
print(json.dumps(s.mean_rates.tolist()))
"""
    import os
    env_base = dict(os.environ)
    out1 = subprocess.run([sys.executable, "-c", script], capture_output=True,
                          text=True, env=env_base, check=True).stdout
    env_py = dict(env_base, CARSMOOTH_FORCE_PY="1")
    out2 = subprocess.run([sys.executable, "-c", script], capture_output=True,
                          text=True, env=env_py, check=True).stdout
    assert out1 == out2
