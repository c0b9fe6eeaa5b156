"""Adaptive Metropolis-within-Gibbs for the Poisson-logitNormal M-model.

Two modes:

* fixed  -- Sigma_b and the dependence parameters are held at given values
            (the within-prior study protocol); only alpha and the latent
            fields are sampled.
* full   -- Sigma_b is sampled through its Bartlett factor (dof = J + 2,
            identity Wishart scale), lambda gets a uniform prior updated on
            the logit scale, alpha stays flat.

Latent rows phi_j carry unit-scale Leroux precisions lam_j*R + (1-lam_j)*I;
the between-disease scale enters only through Theta = M phi.  Intrinsic rows
(lam = 1) are re-centered to sum to zero each iteration, with the level
transferred to alpha.  Reported quantities are Theta-derived rates and
Sigma_b / rho / lambda summaries only; raw M and phi are not identifiable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import _kernels
from .graph import ArealGraph
from .priors import ICAR, LCAR, LJCAR, BetweenCov, PriorSpec, mixing_matrix
from .scenario import CountDataset


@dataclass(frozen=True)
class FitConfig:
    iterations: int = 6000
    burn_in: int = 2000
    thinning: int = 2
    chain_count: int = 4
    seed: int = 0
    mode: str = "fixed"
    target_accept: float = 0.44
    adapt_window: int = 50
    alpha_prior_sd: float | None = None  # None = flat (proper prior for validation runs)

    def __post_init__(self):
        if self.burn_in >= self.iterations:
            raise ValueError("burn_in must be smaller than iterations")
        if self.chain_count < 1 or self.thinning < 1:
            raise ValueError("chain_count and thinning must be >= 1")
        if self.mode not in ("fixed", "full"):
            raise ValueError("mode must be 'fixed' or 'full'")


@dataclass
class ModelState:
    """Mutable sampler state for one chain."""

    alpha: np.ndarray          # (J,)
    phi: np.ndarray            # (J, G)
    lam: np.ndarray            # (J,)
    bartlett: np.ndarray | None  # (J, J) lower-tri factor A, full mode only
    sigma_b: np.ndarray        # (J, J)
    M: np.ndarray              # (J, J)
    theta: np.ndarray          # (J, G) cache of M @ phi

    def rates(self) -> np.ndarray:
        return expit(self.alpha[:, None] + self.theta)


@dataclass(frozen=True)
class PosteriorSummary:
    mean_rates: np.ndarray               # (J, G)
    rate_lo: np.ndarray                  # (J, G) central 95% lower
    rate_hi: np.ndarray                  # (J, G)
    hyper_summary: dict[str, dict]       # name -> mean/lo/hi/ess/psrf
    acceptance: dict[str, float]
    warnings: tuple[str, ...] = ()

    @property
    def rate_intervals(self) -> np.ndarray:
        return np.stack([self.rate_lo, self.rate_hi])


# ----------------------------------------------------------------------
# numerically stable pieces (numpy side)
def _softplus(x):
    return np.logaddexp(0.0, x)


def poisson_loglik(alpha, theta, counts, population) -> float:
    """sum O * log(r) - n * r with r = expit(alpha + theta) (O! term dropped)."""
    x = alpha[:, None] + theta
    return float(np.sum(counts * (-_softplus(-x))) - np.sum(population[None, :] * expit(x)))


def log_posterior(
    state: ModelState,
    data: CountDataset,
    graph: ArealGraph,
    spec: PriorSpec,
    config: FitConfig,
) -> float:
    """Unnormalized log posterior for the current state.

    Fixed mode drops hyperparameter terms (they are constants); full mode adds
    the Bartlett element priors and the lambda-dependent Gaussian normalizer.
    Constants not involving sampled quantities are omitted throughout.
    """
    if np.any(state.lam > 1.0) or np.any(state.lam < 0.0):
        return -math.inf
    if not (np.all(np.isfinite(state.phi)) and np.all(np.isfinite(state.alpha))):
        return -math.inf
    lp = poisson_loglik(state.alpha, state.theta, data.counts, data.population)
    R = graph.structure_matrix()
    for j in range(data.num_diseases):
        lam = state.lam[j]
        quad = lam * state.phi[j] @ R @ state.phi[j] + (1 - lam) * state.phi[j] @ state.phi[j]
        lp -= 0.5 * quad
    if config.alpha_prior_sd is not None:
        lp -= 0.5 * float(state.alpha @ state.alpha) / config.alpha_prior_sd**2
    if config.mode == "full":
        J = data.num_diseases
        eig = np.linalg.eigvalsh(R)
        if spec.kind != ICAR:
            for j in range(J):
                lp += 0.5 * np.sum(np.log(state.lam[j] * eig + 1 - state.lam[j]))
        dof = J + 2
        A = state.bartlett
        for j in range(J):
            k = dof - j  # chi^2 degrees of freedom for c_{j+1}
            c = A[j, j]
            lp += (k - 1) * math.log(c) - 0.5 * c * c
            for l in range(j):
                lp -= 0.5 * A[j, l] ** 2
    return lp


# ----------------------------------------------------------------------
def _ess(x: np.ndarray) -> float:
    """Effective sample size via the initial positive sequence estimator."""
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    x = x - x.mean()
    var = x @ x / n
    if var == 0:
        return float(n)
    acf = np.correlate(x, x, mode="full")[n - 1 :] / (n * var)
    s = 0.0
    for t in range(1, n):
        pair = acf[t] + (acf[t + 1] if t + 1 < n else 0.0)
        if pair < 0:
            break
        s += acf[t]
        if t + 1 < n:
            s += acf[t + 1]
        t += 1
    return float(n / (1 + 2 * s))


def _split_rhat(chains: np.ndarray) -> float:
    """Split-chain potential scale reduction; chains is (m, n)."""
    m, n = chains.shape
    half = n // 2
    if half < 2:
        return float("nan")
    seq = np.concatenate([chains[:, :half], chains[:, half : 2 * half]], axis=0)
    means = seq.mean(axis=1)
    w = seq.var(axis=1, ddof=1).mean()
    b = half * means.var(ddof=1)
    if w == 0:
        return 1.0
    return float(np.sqrt((half - 1) / half + b / (w * half)))


# ----------------------------------------------------------------------
class _Sampler:
    """One-chain Metropolis-within-Gibbs driver."""

    def __init__(
        self,
        data: CountDataset,
        graph: ArealGraph,
        spec: PriorSpec,
        config: FitConfig,
        rng: np.random.Generator,
        sigma_b: BetweenCov | None = None,
        prior_lambda_scale: float = 1.0,
    ):
        self.data = data
        self.graph = graph
        self.spec = spec
        self.config = config
        self.rng = rng
        self.J, self.G = data.counts.shape
        self.O = data.counts.astype(float)
        self.n = data.population.astype(float)
        self.wplus = graph.neighbor_counts.astype(float)
        self.indptr, self.indices = graph.adjacency_csr()
        self.R = graph.structure_matrix()
        self.R_eig = np.linalg.eigvalsh(self.R)
        self.dof = self.J + 2
        # deliberate prior misspecification hook for the Geweke negative control
        self.prior_lambda_scale = prior_lambda_scale

        if config.mode == "fixed":
            if sigma_b is None:
                raise ValueError("fixed mode needs a between-disease covariance")
            if sigma_b.dim != self.J:
                raise ValueError("Sigma_b dimension does not match the data")
            lam = spec.lambdas(self.J)
            A = None
            sig = sigma_b.values.copy()
        else:
            lam = spec.lambdas(self.J) if spec.kind == ICAR else np.full(self.J, 0.5)
            A = np.eye(self.J)
            sig = A @ A.T
        M = mixing_matrix(sig)
        crude = np.clip(self.O.sum(axis=1) / self.n.sum(), 1e-8, 1 - 1e-8)
        alpha = np.log(crude) - np.log1p(-crude)
        phi = np.zeros((self.J, self.G))
        self.state = ModelState(alpha, phi, lam, A, sig, M, M @ phi)

        # proposal scales and acceptance bookkeeping
        self.phi_step = np.full((self.J, self.G), 0.5)
        self.alpha_step = np.full(self.J, 0.1)
        self.phi_acc = np.zeros((self.J, self.G), dtype=np.int64)
        self.alpha_acc = np.zeros(self.J, dtype=np.int64)
        self.hyper_names = []
        if config.mode == "full":
            for j in range(self.J):
                self.hyper_names.append(f"bartlett_c{j + 1}")
                for l in range(j):
                    self.hyper_names.append(f"bartlett_n{j + 1}{l + 1}")
            if spec.kind == LCAR:
                self.hyper_names.append("lambda")
            elif spec.kind == LJCAR:
                self.hyper_names += [f"lambda{j + 1}" for j in range(self.J)]
        self.hyper_step = {name: 0.3 for name in self.hyper_names}
        self.hyper_acc = {name: 0 for name in self.hyper_names}
        self._iter = 0
        self._batch = 0

    # -- update blocks -------------------------------------------------
    def _update_phi(self):
        s = self.state
        z = self.rng.standard_normal((self.J, self.G))
        logu = np.log(self.rng.random((self.J, self.G)))
        _kernels.phi_sweep(
            s.phi,
            s.theta,
            s.alpha,
            np.ascontiguousarray(s.M),
            self.O,
            self.n,
            np.clip(s.lam * self.prior_lambda_scale, 0.0, 1.0),
            self.wplus,
            self.indptr,
            self.indices,
            self.phi_step,
            z,
            logu,
            self.phi_acc,
        )
        # intrinsic rows: transfer the free level to alpha
        for j in range(self.J):
            if s.lam[j] == 1.0:
                mean = s.phi[j].mean()
                if mean != 0.0:
                    s.phi[j] -= mean
                    s.alpha += s.M[:, j] * mean
                    s.theta = s.M @ s.phi

    def _update_alpha(self):
        s = self.state
        sd = self.config.alpha_prior_sd
        for j in range(self.J):
            prop = s.alpha[j] + self.alpha_step[j] * self.rng.standard_normal()
            x0 = s.alpha[j] + s.theta[j]
            x1 = prop + s.theta[j]
            dlp = float(
                np.sum(self.O[j] * (_softplus(-x0) - _softplus(-x1)))
                - np.sum(self.n * (expit(x1) - expit(x0)))
            )
            if sd is not None:
                dlp -= 0.5 * (prop**2 - s.alpha[j] ** 2) / sd**2
            if math.log(self.rng.random()) < dlp:
                s.alpha[j] = prop
                self.alpha_acc[j] += 1

    def _loglik(self, alpha, theta) -> float:
        return poisson_loglik(alpha, theta, self.O, self.n)

    def _update_bartlett(self):
        s = self.state
        for j in range(self.J):
            for l in range(j + 1):
                name = f"bartlett_c{j + 1}" if l == j else f"bartlett_n{j + 1}{l + 1}"
                step = self.hyper_step[name]
                A_new = s.bartlett.copy()
                if l == j:
                    t = math.log(s.bartlett[j, j]) + step * self.rng.standard_normal()
                    A_new[j, j] = math.exp(t)
                    k = self.dof - j
                    dprior = (k - 1) * (t - math.log(s.bartlett[j, j])) - 0.5 * (
                        A_new[j, j] ** 2 - s.bartlett[j, j] ** 2
                    )
                    djac = t - math.log(s.bartlett[j, j])
                else:
                    A_new[j, l] = s.bartlett[j, l] + step * self.rng.standard_normal()
                    dprior = -0.5 * (A_new[j, l] ** 2 - s.bartlett[j, l] ** 2)
                    djac = 0.0
                sig_new = A_new @ A_new.T
                try:
                    M_new = mixing_matrix(sig_new)
                except (ValueError, np.linalg.LinAlgError):
                    self.rng.random()  # keep stream aligned with the accept draw
                    continue
                theta_new = M_new @ s.phi
                dlp = self._loglik(s.alpha, theta_new) - self._loglik(s.alpha, s.theta)
                dlp += dprior + djac
                if math.log(self.rng.random()) < dlp:
                    s.bartlett = A_new
                    s.sigma_b = sig_new
                    s.M = M_new
                    s.theta = theta_new
                    self.hyper_acc[name] += 1

    def _lambda_logtarget(self, lam: float, rows) -> float:
        s = self.state
        val = 0.0
        for j in rows:
            quad = lam * s.phi[j] @ self.R @ s.phi[j] + (1 - lam) * s.phi[j] @ s.phi[j]
            val += 0.5 * np.sum(np.log(lam * self.R_eig + 1 - lam)) - 0.5 * quad
        return float(val)

    def _update_lambda(self):
        s = self.state
        groups = (
            [("lambda", range(self.J))]
            if self.spec.kind == LCAR
            else [(f"lambda{j + 1}", [j]) for j in range(self.J)]
        )
        for name, rows in groups:
            lam = s.lam[list(rows)[0]]
            logit = math.log(lam) - math.log1p(-lam)
            prop_logit = logit + self.hyper_step[name] * self.rng.standard_normal()
            prop = 1.0 / (1.0 + math.exp(-prop_logit))
            dlp = self._lambda_logtarget(prop, rows) - self._lambda_logtarget(lam, rows)
            # logit-scale Jacobian: log lam(1-lam)
            dlp += math.log(prop) + math.log1p(-prop) - math.log(lam) - math.log1p(-lam)
            if math.log(self.rng.random()) < dlp:
                for j in rows:
                    s.lam[j] = prop
                self.hyper_acc[name] += 1

    # -- adaptation -----------------------------------------------------
    def _adapt(self):
        self._batch += 1
        w = self.config.adapt_window
        gain = min(0.1, 1.0 / math.sqrt(self._batch))
        tgt = self.config.target_accept
        self.phi_step *= np.exp(np.where(self.phi_acc / w > tgt, gain, -gain))
        self.phi_acc[:] = 0
        self.alpha_step *= np.exp(np.where(self.alpha_acc / w > tgt, gain, -gain))
        self.alpha_acc[:] = 0
        for name in self.hyper_names:
            rate = self.hyper_acc[name] / w
            self.hyper_step[name] *= math.exp(gain if rate > tgt else -gain)
            self.hyper_acc[name] = 0

    # -- one iteration ---------------------------------------------------
    def step(self, adapt: bool = False):
        self._update_alpha()
        self._update_phi()
        if self.config.mode == "full":
            self._update_bartlett()
            if self.spec.kind != ICAR:
                self._update_lambda()
        self._iter += 1
        if adapt and self._iter % self.config.adapt_window == 0:
            self._adapt()

    def hyper_values(self) -> dict[str, float]:
        s = self.state
        out = {}
        J = self.J
        for a in range(J):
            for b in range(a, J):
                out[f"sigma_{a + 1}{b + 1}"] = float(s.sigma_b[a, b])
        if J >= 2:
            out["rho_12"] = float(
                s.sigma_b[0, 1] / math.sqrt(s.sigma_b[0, 0] * s.sigma_b[1, 1])
            )
        if self.spec.kind == LCAR:
            out["lambda"] = float(s.lam[0])
        elif self.spec.kind == LJCAR:
            for j in range(J):
                out[f"lambda{j + 1}"] = float(s.lam[j])
        for j in range(J):
            out[f"alpha{j + 1}"] = float(s.alpha[j])
        return out


# ----------------------------------------------------------------------
def fit(
    data: CountDataset,
    graph: ArealGraph,
    spec: PriorSpec,
    config: FitConfig,
    sigma_b: BetweenCov | None = None,
) -> PosteriorSummary:
    """Run the sampler and summarize posterior rates and hyperparameters.

    Deterministic given (config.seed, chain_count): chains use spawned child
    streams and post-burn-in thinned draws are pooled across chains.
    """
    if data.num_areas != graph.num_areas:
        raise ValueError("dataset and graph disagree on the number of areas")
    seeds = np.random.SeedSequence(config.seed).spawn(config.chain_count)
    rate_draws = []          # per chain: (n_kept, J, G)
    hyper_draws = []         # per chain: dict name -> (n_kept,)
    acc_phi, acc_alpha = [], []
    for chain in range(config.chain_count):
        sampler = _Sampler(
            data, graph, spec, config, np.random.default_rng(seeds[chain]), sigma_b
        )
        kept_rates, kept_hyper = [], []
        for it in range(config.iterations):
            burn = it < config.burn_in
            sampler.step(adapt=burn)
            if burn:
                if it == config.burn_in - 1:
                    sampler.phi_acc[:] = 0
                    sampler.alpha_acc[:] = 0
                continue
            if (it - config.burn_in) % config.thinning == 0:
                kept_rates.append(sampler.state.rates())
                kept_hyper.append(sampler.hyper_values())
        n_post = config.iterations - config.burn_in
        acc_phi.append(sampler.phi_acc.mean() / n_post)
        acc_alpha.append(sampler.alpha_acc.mean() / n_post)
        rate_draws.append(np.array(kept_rates))
        hyper_draws.append(
            {k: np.array([h[k] for h in kept_hyper]) for k in kept_hyper[0]}
        )

    pooled = np.concatenate(rate_draws, axis=0)
    mean_rates = pooled.mean(axis=0)
    lo, hi = np.percentile(pooled, [2.5, 97.5], axis=0)
    mean_rates = np.minimum(np.maximum(mean_rates, lo), hi)

    hyper_summary: dict[str, dict] = {}
    warnings = []
    fixed_mode = config.mode == "fixed"
    for name in hyper_draws[0]:
        per_chain = np.stack([d[name] for d in hyper_draws])
        flat = per_chain.ravel()
        constant = np.ptp(flat) == 0
        ess = float(flat.size) if constant else float(
            sum(_ess(c) for c in per_chain)
        )
        psrf = 1.0 if constant else _split_rhat(per_chain)
        hyper_summary[name] = {
            "post_mean": float(flat.mean()),
            "lo95": float(np.percentile(flat, 2.5)),
            "hi95": float(np.percentile(flat, 97.5)),
            "ess": ess,
            "psrf": psrf,
        }
        if not constant and psrf > 1.05:
            warnings.append(f"psrf({name}) = {psrf:.3f} > 1.05")
    if fixed_mode:
        # Sigma_b-derived entries are constants in fixed mode; drop them
        hyper_summary = {
            k: v for k, v in hyper_summary.items() if k.startswith(("alpha", "lambda"))
        }

    return PosteriorSummary(
        mean_rates=mean_rates,
        rate_lo=lo,
        rate_hi=hi,
        hyper_summary=hyper_summary,
        acceptance={
            "phi": float(np.mean(acc_phi)),
            "alpha": float(np.mean(acc_alpha)),
        },
        warnings=tuple(warnings),
    )


# ----------------------------------------------------------------------
def sample_prior_field(
    spec: PriorSpec,
    sigma_b: BetweenCov,
    graph: ArealGraph,
    rng: np.random.Generator,
) -> np.ndarray:
    """One prior draw of Theta (J, G); intrinsic rows on the sum-zero subspace."""
    J, G = sigma_b.dim, graph.num_areas
    if G > 2000:
        raise ValueError("prior-field sampling is a dense small-G oracle")
    lam = spec.lambdas(J)
    R = graph.structure_matrix()
    eigval, eigvec = np.linalg.eigh(R)
    phi = np.empty((J, G))
    for j in range(J):
        marg = lam[j] * eigval + 1 - lam[j]
        if lam[j] == 1.0:
            keep = eigval > 1e-10 * eigval.max()
            z = rng.standard_normal(int(keep.sum()))
            phi[j] = eigvec[:, keep] @ (z / np.sqrt(eigval[keep]))
        else:
            z = rng.standard_normal(G)
            phi[j] = eigvec @ (z / np.sqrt(marg))
    return mixing_matrix(sigma_b) @ phi


# ----------------------------------------------------------------------
def geweke_joint_check(
    spec: PriorSpec,
    graph: ArealGraph,
    config: FitConfig,
    population: np.ndarray | None = None,
    num_samples: int = 4000,
    sc_thin: int = 3,
    prior_lambda_scale: float = 1.0,
    seed: int = 0,
) -> dict:
    """Joint-distribution sampler validation (marginal- vs successive-conditional).

    Requires a proper joint model: full mode, non-intrinsic prior and a finite
    alpha_prior_sd.  Returns per-statistic z-scores; |z| > 4 is flagged.
    ``prior_lambda_scale`` deliberately corrupts the field-update prior and is
    only for negative-control tests.
    """
    if config.iterations == 0 or num_samples <= 0:
        return {"error": "zero-length configuration", "z": {}, "flagged": []}
    if config.mode != "full" or config.alpha_prior_sd is None or spec.kind == ICAR:
        raise ValueError("geweke check needs full mode, a proper alpha prior, "
                         "and a non-intrinsic spatial prior")
    J, G = 2, graph.num_areas
    if G > 16:
        raise ValueError("geweke check is a small-G harness")
    n = population if population is not None else np.full(G, 60.0)
    rng = np.random.default_rng([seed, 4242])
    R = graph.structure_matrix()
    eigval, eigvec = np.linalg.eigh(R)
    dof = J + 2

    def prior_draw(r):
        alpha = config.alpha_prior_sd * r.standard_normal(J)
        A = np.zeros((J, J))
        for j in range(J):
            A[j, j] = math.sqrt(r.chisquare(dof - j))
            for l in range(j):
                A[j, l] = r.standard_normal()
        lam_val = r.uniform()
        lam = np.full(J, lam_val) if spec.kind == LCAR else r.uniform(size=J)
        phi = np.empty((J, G))
        for j in range(J):
            marg = lam[j] * eigval + 1 - lam[j]
            phi[j] = eigvec @ (r.standard_normal(G) / np.sqrt(marg))
        sig = A @ A.T
        M = mixing_matrix(sig)
        return ModelState(alpha, phi, lam, A, sig, M, M @ phi)

    def stats(state, counts):
        # phi moments are heavy-tailed under the uniform lambda prior (the
        # Leroux precision degenerates as lambda -> 1), so bounded transforms
        # keep every test function square-integrable.
        return np.array(
            [
                state.alpha[0],
                state.alpha[1],
                math.tanh(state.phi[0].mean()),
                math.tanh(float(state.phi[0] @ state.phi[0]) / (4 * G)),
                math.tanh(float(state.phi[1] @ state.phi[1]) / (4 * G)),
                state.lam[0],
                math.log(state.sigma_b[0, 0]),
                counts.mean(),
            ]
        )

    names = ["alpha1", "alpha2", "phi1_mean_t", "phi1_msq_t", "phi2_msq_t",
             "lambda", "log_sigma11", "count_mean"]

    # marginal-conditional: independent prior + data draws
    mc = np.empty((num_samples, len(names)))
    for s in range(num_samples):
        state = prior_draw(rng)
        counts = rng.poisson(n[None, :] * state.rates())
        mc[s] = stats(state, counts)

    # successive-conditional: transition kernel + data refresh
    state0 = prior_draw(rng)
    counts = rng.poisson(n[None, :] * state0.rates())
    sc = np.empty((num_samples, len(names)))
    dataset = CountDataset(counts.astype(np.int64), n.astype(np.int64))
    sampler = _Sampler(dataset, graph, spec, config, rng,
                       prior_lambda_scale=prior_lambda_scale)
    sampler.state = state0
    for s in range(num_samples):
        for _ in range(sc_thin):
            sampler.step(adapt=False)
            counts = rng.poisson(n[None, :] * sampler.state.rates())
            sampler.O = counts.astype(float)
        sc[s] = stats(sampler.state, counts)

    z = {}
    n_batches = 40
    batches = np.array_split(sc, n_batches)
    for k, name in enumerate(names):
        mc_se2 = mc[:, k].var(ddof=1) / num_samples
        bmeans = np.array([b[:, k].mean() for b in batches])
        sc_se2 = bmeans.var(ddof=1) / n_batches
        z[name] = float((mc[:, k].mean() - sc[:, k].mean()) / math.sqrt(mc_se2 + sc_se2))
    flagged = [name for name, v in z.items() if abs(v) > 4.0]
    return {"z": z, "flagged": flagged}
