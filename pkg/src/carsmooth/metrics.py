"""Empirical smoothing metrics from posterior mean rates and raw counts.

RMSS_j  = sum_i (post_ji - crude_ji)^2 / post_ji
RSP_j   = sum_i (post_ji - crude_ji)^2 / sum_i (rbar_j - crude_ji)^2
SP      = pooled RSP across diseases (numerators and denominators summed)

Crude rates are O/n; rbar_j defaults to the population-weighted global rate.
RSP and SP are deliberately not clamped to [0,1].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scenario import CountDataset


@dataclass(frozen=True)
class SmoothingReport:
    rmss: np.ndarray                # (J,)
    max_rmss: np.ndarray            # (J,)
    rsp: np.ndarray                 # (J,)
    sp: float
    per_area_components: np.ndarray  # (J, G)
    rbar: np.ndarray                # (J,)
    replicate_id: int = 0

    @property
    def rmss_total(self) -> float:
        return float(self.rmss.sum())

    @property
    def rsp_total(self) -> float:
        """Sum of per-disease RSPs (the 'Total RSP' summary row); distinct from SP."""
        return float(self.rsp.sum())

    @property
    def num_diseases(self) -> int:
        return self.rmss.shape[0]


def _crude(data: CountDataset, j: int) -> np.ndarray:
    return data.counts[j] / data.population


def average_rate(data: CountDataset, j: int, weighted: bool = True) -> float:
    """Average rate rbar_j; population-weighted by default."""
    if data.population.sum() <= 0:
        raise ValueError("total population must be positive")
    if weighted:
        return float(data.counts[j].sum() / data.population.sum())
    return float(np.mean(_crude(data, j)))


def rmss(post_mean_rates: np.ndarray, data: CountDataset, j: int):
    """Relative mean square smoothness: total and per-area addends."""
    post = np.asarray(post_mean_rates[j], dtype=float)
    if np.any(post <= 0):
        raise ValueError("posterior rates must be strictly positive")
    comp = (post - _crude(data, j)) ** 2 / post
    return float(comp.sum()), comp


def max_rmss(post_mean_rates: np.ndarray, data: CountDataset, j: int) -> float:
    _, comp = rmss(post_mean_rates, data, j)
    return float(comp.max())


def _rsp_parts(post_mean_rates, data, j, rbar_j):
    post = np.asarray(post_mean_rates[j], dtype=float)
    crude = _crude(data, j)
    num = float(((post - crude) ** 2).sum())
    den = float(((rbar_j - crude) ** 2).sum())
    return num, den


def rsp(post_mean_rates: np.ndarray, data: CountDataset, j: int, rbar_j: float) -> float:
    """Smoothing relative to the maximum possible (posterior constant at rbar_j)."""
    num, den = _rsp_parts(post_mean_rates, data, j, rbar_j)
    if den == 0:
        raise ValueError("degenerate denominator: crude rates all equal rbar")
    return num / den


def sp(post_mean_rates: np.ndarray, data: CountDataset, rbar: np.ndarray) -> float:
    """Overall smoothing proportion, pooling numerators and denominators over j."""
    nums, dens = 0.0, 0.0
    for j in range(data.num_diseases):
        num, den = _rsp_parts(post_mean_rates, data, j, rbar[j])
        nums += num
        dens += den
    if dens == 0:
        raise ValueError("degenerate pooled denominator")
    return nums / dens


def smoothing_report(
    post_mean_rates: np.ndarray,
    data: CountDataset,
    weighted_rbar: bool = True,
) -> SmoothingReport:
    """All metrics for one fitted replicate."""
    J = data.num_diseases
    rbar = np.array([average_rate(data, j, weighted_rbar) for j in range(J)])
    totals, comps, maxima, rsps = [], [], [], []
    for j in range(J):
        tot, comp = rmss(post_mean_rates, data, j)
        totals.append(tot)
        comps.append(comp)
        maxima.append(comp.max())
        rsps.append(rsp(post_mean_rates, data, j, rbar[j]))
    return SmoothingReport(
        rmss=np.array(totals),
        max_rmss=np.array(maxima),
        rsp=np.array(rsps),
        sp=sp(post_mean_rates, data, rbar),
        per_area_components=np.stack(comps),
        rbar=rbar,
        replicate_id=data.replicate_id,
    )


def expected_over_replicates(reports: list[SmoothingReport]) -> SmoothingReport:
    """Arithmetic mean of every field across replicates (the E(RMSS) display)."""
    if not reports:
        raise ValueError("no reports to average")
    shape = reports[0].per_area_components.shape
    if any(r.per_area_components.shape != shape for r in reports):
        raise ValueError("mismatched report shapes")
    return SmoothingReport(
        rmss=np.mean([r.rmss for r in reports], axis=0),
        max_rmss=np.mean([r.max_rmss for r in reports], axis=0),
        rsp=np.mean([r.rsp for r in reports], axis=0),
        sp=float(np.mean([r.sp for r in reports])),
        per_area_components=np.mean([r.per_area_components for r in reports], axis=0),
        rbar=np.mean([r.rbar for r in reports], axis=0),
        replicate_id=-1,
    )
