"""Study orchestration: TCV grids, within-prior and across-prior simulation
studies, and real-data analyses.

Every replicate fit is an independent job writing an idempotent per-replicate
row file under ``<out>/replicates/``; interrupted studies resume by reusing
rows whose provenance hash matches.  Final tables are merged deterministically,
so reruns with the same config and seed are byte-identical.
"""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graph import ArealGraph
from .ioutils import config_sha256, read_csv, write_csv
from .mcmc import FitConfig, fit
from .metrics import SmoothingReport, expected_over_replicates, smoothing_report
from .priors import ICAR, LCAR, LJCAR, BetweenCov, PriorSpec
from .scenario import (
    CountDataset,
    Grid,
    GpConfig,
    ScenarioConfig,
    generate_population,
    simulate_replicate,
)
from .tcv import multivariate_tcv

_DEFAULT_SIGMA = (0.0025, 0.04, 0.25)
_DEFAULT_RHO = (0.0, 0.7)
_DEFAULT_LAMBDA = (0.2, 0.8)


@dataclass(frozen=True)
class StudyConfig:
    """Parsed study configuration (one JSON document)."""

    lattice: tuple[int, int] | None = None
    graph_path: str | None = None
    scenario_ids: tuple[int, ...] = (1,)
    gp: dict = field(default_factory=dict)
    counts_path: str | None = None
    population_path: str | None = None
    priors: tuple[str, ...] = (ICAR,)
    sigma_grid: tuple[float, ...] = _DEFAULT_SIGMA
    rho_grid: tuple[float, ...] = _DEFAULT_RHO
    lambda_grid: tuple[float, ...] = _DEFAULT_LAMBDA
    fit: dict = field(default_factory=dict)
    replicates: int = 10
    out: str = "study_out"
    seed: int = 0
    per_cell: int = 2

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicate count must be >= 1")
        for name in ("sigma_grid", "rho_grid", "lambda_grid"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"{name} must be non-empty")
        for kind in self.priors:
            if kind not in (ICAR, LCAR, LJCAR):
                raise ValueError(f"unknown prior kind {kind!r}")
        for path in (self.graph_path, self.counts_path, self.population_path):
            if path is not None and not Path(path).exists():
                raise FileNotFoundError(path)
        if self.lattice is None and self.graph_path is None:
            raise ValueError("config needs a lattice or an edge-list graph")

    @classmethod
    def from_json(cls, text: str, **overrides) -> "StudyConfig":
        raw = json.loads(text)
        kw: dict = {}
        if "lattice" in raw:
            kw["lattice"] = tuple(int(v) for v in raw["lattice"])
        for key in ("graph_path", "counts_path", "population_path", "out"):
            if key in raw:
                kw[key] = raw[key]
        if "scenarios" in raw:
            kw["scenario_ids"] = tuple(int(s) for s in raw["scenarios"])
        if "gp" in raw:
            kw["gp"] = raw["gp"]
        if "priors" in raw:
            kw["priors"] = tuple(raw["priors"])
        for src, dst in (
            ("sigma", "sigma_grid"),
            ("rho", "rho_grid"),
            ("lambda", "lambda_grid"),
        ):
            if src in raw:
                kw[dst] = tuple(float(v) for v in raw[src])
        if "fit" in raw:
            kw["fit"] = raw["fit"]
        for key in ("replicates", "seed", "per_cell"):
            if key in raw:
                kw[key] = int(raw[key])
        kw.update(overrides)
        return cls(**kw)

    # -- derived pieces ------------------------------------------------
    def graph(self) -> ArealGraph:
        if self.graph_path is not None:
            return ArealGraph.from_file(self.graph_path)
        return ArealGraph.lattice(*self.lattice)

    def grid(self) -> Grid:
        if self.lattice is None:
            raise ValueError("simulation studies need a lattice geometry")
        return Grid.for_lattice(*self.lattice, per_cell=self.per_cell)

    def fit_config(self, mode: str) -> FitConfig:
        d = dict(self.fit)
        d.setdefault("seed", self.seed)
        return FitConfig(mode=mode, **d)

    def scenario(self, scenario_id: int) -> ScenarioConfig:
        gp = GpConfig(**self.gp) if self.gp else GpConfig()
        return ScenarioConfig(scenario_id=scenario_id, gp=gp, seed=self.seed)

    def provenance(self) -> dict:
        out = {
            k: (list(v) if isinstance(v, tuple) else v)
            for k, v in self.__dict__.items()
        }
        return out


# ----------------------------------------------------------------------
_METRIC_FIELDS = [
    "rmss1", "rmss2", "rmss_total", "max_rmss1", "max_rmss2",
    "rsp1", "rsp2", "rsp_total", "sp", "rbar1", "rbar2",
]


def _metric_row(report: SmoothingReport) -> dict:
    r = report
    return {
        "rmss1": float(r.rmss[0]),
        "rmss2": float(r.rmss[1]) if r.num_diseases > 1 else 0.0,
        "rmss_total": r.rmss_total,
        "max_rmss1": float(r.max_rmss[0]),
        "max_rmss2": float(r.max_rmss[1]) if r.num_diseases > 1 else 0.0,
        "rsp1": float(r.rsp[0]),
        "rsp2": float(r.rsp[1]) if r.num_diseases > 1 else 0.0,
        "rsp_total": r.rsp_total,
        "sp": r.sp,
        "rbar1": float(r.rbar[0]),
        "rbar2": float(r.rbar[1]) if r.num_diseases > 1 else 0.0,
    }


def _cell_key(prior: str, **params) -> str:
    parts = [prior] + [f"{k}{params[k]:g}" for k in sorted(params)]
    return "_".join(parts).replace(".", "p").replace("-", "m")


def _replicate_path(out: Path, study: str, key: str, rep: int) -> Path:
    return out / "replicates" / f"{study}_{key}_rep{rep}.csv"


def _run_replicate_job(job: dict) -> dict:
    """Fit one replicate (resumable). Top-level for process-pool pickling."""
    cfg = StudyConfig(**{k: tuple(v) if isinstance(v, list) else v
                         for k, v in job["study"].items()})
    path = Path(job["path"])
    if path.exists():
        meta, rows = read_csv(path)
        if meta.get("config_sha256") == config_sha256(job["cell"]) and rows:
            return {k: v for k, v in rows[0].items()}

    graph = cfg.graph()
    scn = cfg.scenario(job["scenario_id"])
    grid = cfg.grid()
    population = generate_population(graph.num_areas, cfg.seed)
    data = simulate_replicate(scn, grid, population, job["replicate"])

    cell = job["cell"]
    spec = _spec_from_cell(cell)
    if job["mode"] == "fixed":
        sigma_b = BetweenCov.from_correlation(
            (cell["sigma11"], cell["sigma22"]), cell["rho"]
        )
        summary = fit(data, graph, spec, cfg.fit_config("fixed"), sigma_b=sigma_b)
    else:
        summary = fit(data, graph, spec, cfg.fit_config("full"))

    row = {"replicate": job["replicate"], **_metric_row(
        smoothing_report(summary.mean_rates, data))}
    for name, s in summary.hyper_summary.items():
        row[f"hyper_{name}"] = s["post_mean"]
    fields = list(row)
    write_csv(path, fields, [row], cell, cfg.seed, force=True)
    _meta, rows = read_csv(path)  # round-trip so resumed and fresh rows match
    return rows[0]


def _spec_from_cell(cell: dict) -> PriorSpec:
    kind = cell["prior"]
    if kind == ICAR:
        return PriorSpec(ICAR)
    if kind == LCAR:
        return PriorSpec(LCAR, cell.get("lambda1"))
    if cell.get("lambda1") is None:
        return PriorSpec(LJCAR, None)
    return PriorSpec(LJCAR, (cell["lambda1"], cell["lambda2"]))


def _schedule(jobs: list[dict], workers: int) -> list[dict]:
    if workers <= 1:
        return [_run_replicate_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_replicate_job, jobs))


def _average_rows(rows: list[dict]) -> dict:
    keys = [k for k in rows[0] if k != "replicate"]
    return {k: float(np.mean([float(r[k]) for r in rows])) for k in keys}


# ----------------------------------------------------------------------
def _within_cells(cfg: StudyConfig) -> list[dict]:
    cells = []
    for kind in cfg.priors:
        sep = itertools.product(cfg.sigma_grid, cfg.sigma_grid, cfg.rho_grid)
        for s11, s22, rho in sep:
            base = {"prior": kind, "sigma11": s11, "sigma22": s22, "rho": rho}
            if kind == ICAR:
                cells.append({**base, "lambda1": 1.0, "lambda2": 1.0})
            elif kind == LCAR:
                for lam in cfg.lambda_grid:
                    cells.append({**base, "lambda1": lam, "lambda2": lam})
            else:
                for l1, l2 in itertools.product(cfg.lambda_grid, cfg.lambda_grid):
                    cells.append({**base, "lambda1": l1, "lambda2": l2})
    return cells


def run_within_study(cfg: StudyConfig, workers: int = 1, force: bool = False) -> Path:
    """Fixed-hyperparameter protocol: theoretical TCV next to empirical metrics."""
    out = Path(cfg.out)
    graph = cfg.graph()
    cells = _within_cells(cfg)
    final = out / "within_study.csv"
    if final.exists() and not force:
        raise FileExistsError(f"{final} exists (use --force)")

    table = []
    for cell in cells:
        key = _cell_key(**{k: v for k, v in cell.items() if k != "prior"},
                        prior=cell["prior"])
        spec = _spec_from_cell(cell)
        sigma_b = BetweenCov.from_correlation(
            (cell["sigma11"], cell["sigma22"]), cell["rho"]
        )
        tcv = multivariate_tcv(spec, sigma_b, graph)
        jobs = [
            {
                "study": cfg.provenance(),
                "cell": cell,
                "mode": "fixed",
                "scenario_id": cfg.scenario_ids[0],
                "replicate": rep,
                "path": str(_replicate_path(out, "within", key, rep)),
            }
            for rep in range(cfg.replicates)
        ]
        rows = _schedule(jobs, workers)
        avg = _average_rows(rows)
        table.append({**cell, "multitcv": tcv.total, **avg})

    fields = ["prior", "sigma11", "sigma22", "rho", "lambda1", "lambda2",
              "multitcv"] + _METRIC_FIELDS
    write_csv(final, fields,
              [{k: row[k] for k in fields} for row in table],
              cfg.provenance(), cfg.seed, force=force)
    return final


def run_across_study(cfg: StudyConfig, workers: int = 1, force: bool = False) -> Path:
    """Full-Bayes protocol: scenarios x priors, averaged metrics + hyper table."""
    out = Path(cfg.out)
    final = out / "across_study.csv"
    hyper_path = out / "across_hypers.csv"
    for p in (final, hyper_path):
        if p.exists() and not force:
            raise FileExistsError(f"{p} exists (use --force)")

    table, hyper_rows = [], []
    for scenario_id in cfg.scenario_ids:
        for kind in cfg.priors:
            cell = {"prior": kind, "scenario": scenario_id}
            key = _cell_key(kind, scenario=scenario_id)
            jobs = [
                {
                    "study": cfg.provenance(),
                    "cell": cell,
                    "mode": "full",
                    "scenario_id": scenario_id,
                    "replicate": rep,
                    "path": str(_replicate_path(out, "across", key, rep)),
                }
                for rep in range(cfg.replicates)
            ]
            rows = _schedule(jobs, workers)
            avg = _average_rows(rows)
            metric_avg = {k: avg[k] for k in _METRIC_FIELDS}
            table.append({**cell, **metric_avg})
            for k, v in avg.items():
                if k.startswith("hyper_"):
                    hyper_rows.append(
                        {"prior": kind, "scenario": scenario_id,
                         "parameter": k[len("hyper_"):], "post_mean": v}
                    )

    fields = ["prior", "scenario"] + _METRIC_FIELDS
    write_csv(final, fields, table, cfg.provenance(), cfg.seed, force=force)
    write_csv(hyper_path, ["prior", "scenario", "parameter", "post_mean"],
              hyper_rows, cfg.provenance(), cfg.seed, force=force)
    return final


# ----------------------------------------------------------------------
def read_count_data(counts_path, population_path) -> CountDataset:
    """Ingest `disease,area,count` and `area,population` CSVs (1-based ids)."""
    _meta, crows = read_csv(counts_path)
    _meta, prows = read_csv(population_path)
    if not crows or not prows:
        raise ValueError("empty data file")
    diseases = sorted({int(r["disease"]) for r in crows})
    areas = sorted({int(r["area"]) for r in prows})
    if diseases != list(range(1, len(diseases) + 1)):
        raise ValueError("disease identifiers must be dense 1-based integers")
    if areas != list(range(1, len(areas) + 1)):
        raise ValueError("area identifiers must be dense 1-based integers")
    J, G = len(diseases), len(areas)
    counts = np.zeros((J, G), dtype=np.int64)
    for r in crows:
        counts[int(r["disease"]) - 1, int(r["area"]) - 1] = int(r["count"])
    population = np.zeros(G, dtype=np.int64)
    for r in prows:
        population[int(r["area"]) - 1] = int(r["population"])
    return CountDataset(counts, population)


def _subset(data: CountDataset, idx: tuple[int, ...]) -> CountDataset:
    return CountDataset(data.counts[list(idx)], data.population,
                        None if data.true_rates is None else data.true_rates[list(idx)],
                        data.replicate_id)


def run_real_data(
    cfg: StudyConfig,
    pairwise: bool = False,
    geojson_path: str | None = None,
    workers: int = 1,
    force: bool = False,
) -> Path:
    """Observed-data analysis: full-Bayes fits, reports and per-area components."""
    if cfg.counts_path is None or cfg.population_path is None:
        raise ValueError("real-data runs need counts and population paths")
    out = Path(cfg.out)
    final = out / "real_data.csv"
    comp_path = out / "real_data_components.csv"
    for p in (final, comp_path):
        if p.exists() and not force:
            raise FileExistsError(f"{p} exists (use --force)")

    data = read_count_data(cfg.counts_path, cfg.population_path)
    graph = cfg.graph()
    if data.num_areas != graph.num_areas:
        raise ValueError("count data and graph disagree on the number of areas")
    if data.num_diseases not in (2, 3):
        raise ValueError("real-data analysis supports 2 or 3 diseases")

    if pairwise:
        pairs = list(itertools.combinations(range(data.num_diseases), 2))
        datasets = [(f"pair{a + 1}{b + 1}", _subset(data, (a, b))) for a, b in pairs]
    else:
        datasets = [("joint", data)]

    table, comp_rows = [], []
    for kind in cfg.priors:
        for label, sub in datasets:
            spec = PriorSpec(kind) if kind == ICAR else PriorSpec(kind, None)
            summary = fit(sub, graph, spec, cfg.fit_config("full"))
            report = smoothing_report(summary.mean_rates, sub)
            row = {"prior": kind, "fit": label}
            row.update(_metric_row(report) if sub.num_diseases == 2 else
                       _metric_row_j(report))
            table.append(row)
            for j in range(sub.num_diseases):
                for i in range(sub.num_areas):
                    comp_rows.append({
                        "prior": kind, "fit": label, "disease": j + 1,
                        "area": i + 1,
                        "rmss_component": float(report.per_area_components[j, i]),
                        "post_rate": float(summary.mean_rates[j, i]),
                    })

    fields = sorted({k for row in table for k in row},
                    key=lambda k: (k not in ("prior", "fit"), k))
    for row in table:
        for k in fields:
            row.setdefault(k, 0.0)
    write_csv(final, fields, table, cfg.provenance(), cfg.seed, force=force)
    write_csv(comp_path,
              ["prior", "fit", "disease", "area", "rmss_component", "post_rate"],
              comp_rows, cfg.provenance(), cfg.seed, force=force)
    if geojson_path is not None:
        _join_geojson(geojson_path, comp_rows, graph.num_areas,
                      out / "real_data_components.geojson", force)
    return final


def _metric_row_j(report: SmoothingReport) -> dict:
    """Metric row for J != 2 (adds per-disease columns as needed)."""
    row = {
        "rmss_total": report.rmss_total,
        "rsp_total": report.rsp_total,
        "sp": report.sp,
    }
    for j in range(report.num_diseases):
        row[f"rmss{j + 1}"] = float(report.rmss[j])
        row[f"max_rmss{j + 1}"] = float(report.max_rmss[j])
        row[f"rsp{j + 1}"] = float(report.rsp[j])
        row[f"rbar{j + 1}"] = float(report.rbar[j])
    return row


def _join_geojson(path, comp_rows, num_areas: int, out_path: Path, force: bool):
    doc = json.loads(Path(path).read_text())
    features = doc.get("features", [])
    if len(features) != num_areas:
        raise ValueError(
            f"GeoJSON has {len(features)} features but the study has {num_areas} areas"
        )
    if out_path.exists() and not force:
        raise FileExistsError(f"{out_path} exists (use --force)")
    by_area: dict[int, dict] = {}
    for row in comp_rows:
        by_area.setdefault(row["area"], {})[
            f"rmss_component_{row['prior']}_{row['fit']}_d{row['disease']}"
        ] = row["rmss_component"]
    for i, feat in enumerate(features, start=1):
        feat.setdefault("properties", {}).update(by_area.get(i, {}))
    out_path.write_text(json.dumps(doc, sort_keys=True))
