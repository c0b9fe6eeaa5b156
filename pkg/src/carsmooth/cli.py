"""Command-line entry point.

Subcommands: tcv, simulate, fit, metrics, pg, within-study, across-study,
real-data.  All take a single JSON --config plus a few overrides.  Exit codes:
0 success, 2 input error, 3 output conflict, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from pathlib import Path

import numpy as np

from .graph import GraphError
from .ioutils import read_csv, write_csv
from .mcmc import fit as run_fit
from .metrics import smoothing_report
from .poisson_gamma import PGParams, eta_correlation, posterior_rate
from .priors import ICAR, LCAR, LJCAR, BetweenCov, PriorSpec
from .scenario import generate_population, simulate_replicate
from .studies import (
    StudyConfig,
    read_count_data,
    run_across_study,
    run_real_data,
    run_within_study,
)
from .tcv import tcv_grid

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONFLICT = 3
EXIT_NUMERICAL = 4


def _load_config(path: str) -> dict:
    return json.loads(Path(path).read_text())


def _study_config(args) -> StudyConfig:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    return StudyConfig.from_json(Path(args.config).read_text(), **overrides)


# ----------------------------------------------------------------------
def _cmd_tcv(args) -> int:
    cfg = _study_config(args)
    graph = cfg.graph()
    sigma_cells = list(
        itertools.product(cfg.sigma_grid, cfg.sigma_grid, cfg.rho_grid)
    )
    rows = []
    for kind in cfg.priors:
        if kind == ICAR:
            lam_grid = None
        elif kind == LCAR:
            lam_grid = list(cfg.lambda_grid)
        else:
            lam_grid = list(itertools.product(cfg.lambda_grid, cfg.lambda_grid))
        for row in tcv_grid(kind, sigma_cells, lam_grid, graph):
            rows.append({k: ("" if v is None else v) for k, v in row.items()})
    out = Path(cfg.out) / "tcv.csv"
    write_csv(out, ["prior", "lambda1", "lambda2", "sigma11", "sigma22", "rho",
                    "multitcv"],
              rows, cfg.provenance(), cfg.seed, force=args.force)
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    cfg = _study_config(args)
    graph = cfg.graph()
    grid = cfg.grid()
    population = generate_population(graph.num_areas, cfg.seed)
    out = Path(cfg.out)
    for scenario_id in cfg.scenario_ids:
        scn = cfg.scenario(scenario_id)
        for rep in range(cfg.replicates):
            data = simulate_replicate(scn, grid, population, rep)
            rows = [
                {"disease": j + 1, "area": i + 1,
                 "count": int(data.counts[j, i]),
                 "true_rate": float(data.true_rates[j, i])}
                for j in range(data.num_diseases)
                for i in range(data.num_areas)
            ]
            write_csv(out / f"scenario{scenario_id}_rep{rep}_counts.csv",
                      ["disease", "area", "count", "true_rate"], rows,
                      cfg.provenance(), cfg.seed, force=args.force)
        write_csv(out / "population.csv", ["area", "population"],
                  [{"area": i + 1, "population": int(population[i])}
                   for i in range(graph.num_areas)],
                  cfg.provenance(), cfg.seed, force=args.force)
    print(f"simulated {len(cfg.scenario_ids)} scenario(s) x "
          f"{cfg.replicates} replicate(s) into {out}")
    return EXIT_OK


def _prior_from_config(raw: dict) -> PriorSpec:
    kind = raw.get("prior", ICAR)
    lam = raw.get("lambda")
    if kind == ICAR:
        return PriorSpec(ICAR)
    if kind == LJCAR and lam is not None and not np.isscalar(lam):
        return PriorSpec(LJCAR, tuple(lam))
    return PriorSpec(kind, lam)


def _cmd_fit(args) -> int:
    raw = _load_config(args.config)
    cfg = _study_config(args)
    data = read_count_data(cfg.counts_path, cfg.population_path)
    graph = cfg.graph()
    spec = _prior_from_config(raw)
    mode = args.mode or raw.get("mode", "full")
    sigma_b = None
    if mode == "fixed":
        sb = raw.get("sigma_b")
        if sb is None:
            raise ValueError("fixed mode needs a sigma_b entry in the config")
        sigma_b = BetweenCov.from_correlation((sb["sigma11"], sb["sigma22"]),
                                              sb.get("rho", 0.0))
    summary = run_fit(data, graph, spec, cfg.fit_config(mode), sigma_b=sigma_b)
    out = Path(cfg.out)
    rate_rows = [
        {"disease": j + 1, "area": i + 1,
         "post_rate": float(summary.mean_rates[j, i]),
         "lo95": float(summary.rate_lo[j, i]),
         "hi95": float(summary.rate_hi[j, i])}
        for j in range(data.num_diseases) for i in range(data.num_areas)
    ]
    write_csv(out / "fit_rates.csv",
              ["disease", "area", "post_rate", "lo95", "hi95"],
              rate_rows, cfg.provenance(), cfg.seed, force=args.force)
    hyper_rows = [
        {"parameter": name, **{k: float(v) for k, v in s.items()}}
        for name, s in summary.hyper_summary.items()
    ]
    if hyper_rows:
        write_csv(out / "fit_hypers.csv",
                  ["parameter", "post_mean", "lo95", "hi95", "ess", "psrf"],
                  hyper_rows, cfg.provenance(), cfg.seed, force=args.force)
    for w in summary.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"fit complete; acceptance phi={summary.acceptance['phi']:.3f} "
          f"alpha={summary.acceptance['alpha']:.3f}")
    return EXIT_OK


def _cmd_metrics(args) -> int:
    raw = _load_config(args.config)
    cfg = _study_config(args)
    data = read_count_data(cfg.counts_path, cfg.population_path)
    _meta, rate_rows = read_csv(raw["rates_path"])
    post = np.zeros((data.num_diseases, data.num_areas))
    for r in rate_rows:
        post[int(r["disease"]) - 1, int(r["area"]) - 1] = float(r["post_rate"])
    if np.any(post <= 0):
        raise ValueError("rates file does not cover every disease/area cell")
    report = smoothing_report(post, data)
    out = Path(cfg.out)
    row = {"rmss_total": report.rmss_total, "rsp_total": report.rsp_total,
           "sp": report.sp}
    for j in range(report.num_diseases):
        row[f"rmss{j + 1}"] = float(report.rmss[j])
        row[f"max_rmss{j + 1}"] = float(report.max_rmss[j])
        row[f"rsp{j + 1}"] = float(report.rsp[j])
    write_csv(out / "metrics.csv", list(row), [row],
              cfg.provenance(), cfg.seed, force=args.force)
    comp_rows = [
        {"disease": j + 1, "area": i + 1,
         "rmss_component": float(report.per_area_components[j, i])}
        for j in range(report.num_diseases) for i in range(data.num_areas)
    ]
    write_csv(out / "metrics_components.csv",
              ["disease", "area", "rmss_component"], comp_rows,
              cfg.provenance(), cfg.seed, force=args.force)
    print(f"SP = {report.sp:.6f}, total RMSS = {report.rmss_total:.6f}")
    return EXIT_OK


def _cmd_pg(args) -> int:
    raw = _load_config(args.config)
    params = PGParams(tuple(raw["a"]), raw["c"], raw["b"])
    print(f"eta correlation: {eta_correlation(params):.10f}")
    if "counts" in raw:
        O = np.asarray(raw["counts"], dtype=float)
        n = np.asarray(raw["population"], dtype=float)
        rbar = float(raw["rbar"])
        for j in range(O.shape[0]):
            post, smooth = posterior_rate(params, j, O[j], n, rbar)
            print(f"disease {j + 1}: posterior rates "
                  + " ".join(f"{v:.6g}" for v in post))
            print(f"disease {j + 1}: smoothing weight (1-w) "
                  + " ".join(f"{v:.6g}" for v in smooth))
    return EXIT_OK


def _cmd_within(args) -> int:
    path = run_within_study(_study_config(args), workers=args.workers,
                            force=args.force)
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_across(args) -> int:
    path = run_across_study(_study_config(args), workers=args.workers,
                            force=args.force)
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_real(args) -> int:
    path = run_real_data(_study_config(args), pairwise=args.pairwise,
                         geojson_path=args.geojson, workers=args.workers,
                         force=args.force)
    print(f"wrote {path}")
    return EXIT_OK


# ----------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="carsmooth",
        description="Spatial smoothing quantification for multivariate "
                    "disease-mapping priors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "tcv": ("theoretical MultiTCV tables", _cmd_tcv),
        "simulate": ("generate scenario count datasets", _cmd_simulate),
        "fit": ("fit the Poisson-logitNormal model", _cmd_fit),
        "metrics": ("empirical smoothing metrics for a fit", _cmd_metrics),
        "pg": ("Poisson-gamma closed forms", _cmd_pg),
        "within-study": ("fixed-hyperparameter study", _cmd_within),
        "across-study": ("full-Bayes scenario x prior study", _cmd_across),
        "real-data": ("observed-data analysis", _cmd_real),
    }
    for name, (help_text, func) in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--force", action="store_true",
                       help="overwrite existing outputs")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--mode", choices=["fixed", "full"], default=None)
        if name == "real-data":
            p.add_argument("--pairwise", action="store_true",
                           help="fit every disease pair instead of the joint model")
            p.add_argument("--geojson", default=None,
                           help="GeoJSON to annotate with per-area components")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileExistsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFLICT
    except (np.linalg.LinAlgError, FloatingPointError, OverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (FileNotFoundError, IsADirectoryError, GraphError, KeyError,
            TypeError, ValueError) as exc:
        # ValueError covers json decoding and config validation
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
