"""Closed forms for the bivariate shared-component Poisson-Gamma model.

Relative risks are eta_i^(j) = phi_i^(j) + xi_i with independent
phi_i^(j) ~ Gamma(a_j, b) and shared xi_i ~ Gamma(c, b).  Everything here is
exact conjugate algebra; the module doubles as an analytic test oracle for the
empirical smoothing metrics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PGParams:
    a: tuple[float, float]
    c: float
    b: float

    def __post_init__(self):
        if any(x <= 0 for x in self.a):
            raise ValueError("Gamma shapes a must be positive")
        if self.c < 0:
            raise ValueError("shared-component shape c must be nonnegative")
        if self.b <= 0:
            raise ValueError("rate b must be positive")

    def mu(self, j: int) -> float:
        """Prior mean (a_j + c) / b of the relative risk."""
        return (self.a[j] + self.c) / self.b

    def var(self, j: int) -> float:
        """Prior variance (a_j + c) / b^2."""
        return (self.a[j] + self.c) / self.b**2


def eta_correlation(params: PGParams) -> float:
    """corr(eta^(1), eta^(2)) = c / sqrt((a1 + c)(a2 + c))."""
    a1, a2 = params.a
    c = params.c
    return c / np.sqrt((a1 + c) * (a2 + c))


def posterior_relative_risk(
    params: PGParams, j: int, observed: float, expected: float
) -> tuple[float, float]:
    """Posterior mean (a_j + c + O) / (b + E) and the shrinkage weight w = E/(b+E)."""
    if expected <= 0:
        raise ValueError("expected count must be positive")
    if observed < 0:
        raise ValueError("observed count must be nonnegative")
    post = (params.a[j] + params.c + observed) / (params.b + expected)
    w = expected / (params.b + expected)
    return post, w


def posterior_rate(
    params: PGParams, j: int, observed: float, population: float, rbar: float
) -> tuple[float, float]:
    """Rate-scale posterior mean (1-w)*rbar*mu + w*O/n and the factor 1-w.

    1 - w = b / (rbar * n + b): free of the shared-component shape c, so
    dependence never changes the weighting.
    """
    if population <= 0:
        raise ValueError("population must be positive")
    if rbar <= 0:
        raise ValueError("average rate must be positive")
    one_minus_w = params.b / (rbar * population + params.b)
    post = one_minus_w * rbar * params.mu(j) + (1.0 - one_minus_w) * observed / population
    return post, one_minus_w


def smoothing_difference(
    params: PGParams, j: int, observed: float, population: float, rbar: float
) -> float:
    """Posterior-mean smoothing minus the crude rate O/n, in closed form.

    Equals mu / (rbar * sigma2 * n + mu) * (rbar * mu - O/n); agrees with
    posterior_rate(...) - O/n to machine precision.
    """
    if population <= 0:
        raise ValueError("population must be positive")
    mu = params.mu(j)
    sigma2 = params.var(j)
    crude = observed / population
    return mu / (rbar * sigma2 * population + mu) * (rbar * mu - crude)


def simulate_eta_pairs(params: PGParams, size: int, rng: np.random.Generator):
    """Monte Carlo draws of (eta^(1), eta^(2)) from the shared-component construction."""
    a1, a2 = params.a
    phi1 = rng.gamma(a1, 1.0 / params.b, size)
    phi2 = rng.gamma(a2, 1.0 / params.b, size)
    xi = rng.gamma(params.c, 1.0 / params.b, size) if params.c > 0 else 0.0
    return phi1 + xi, phi2 + xi
