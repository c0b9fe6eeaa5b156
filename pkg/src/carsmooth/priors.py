"""M-model covariance machinery: mixing matrix, Bartlett draws, precisions.

All computation is done on the precision side; the generalized inverse of the
intrinsic CAR structure matrix is never materialized.  The vec ordering is
area-major throughout (disease index fastest), so the i-th diagonal J x J
block of the joint precision is contiguous.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import ArealGraph

ICAR = "icar"
LCAR = "lcar"
LJCAR = "ljcar"
_KINDS = (ICAR, LCAR, LJCAR)


@dataclass(frozen=True)
class BetweenCov:
    """Symmetric positive-definite between-disease covariance."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("between-disease covariance must be square")
        if not np.allclose(v, v.T, rtol=0, atol=1e-12 * max(1.0, np.abs(v).max())):
            raise ValueError("between-disease covariance must be symmetric")
        if np.linalg.eigvalsh(v).min() <= 0:
            raise ValueError("between-disease covariance must be positive definite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_correlation(cls, diag, rho: float) -> "BetweenCov":
        """J=2 helper: diagonal (s11, s22) and off-diagonal rho*sqrt(s11*s22)."""
        s11, s22 = diag
        off = rho * np.sqrt(s11 * s22)
        return cls(np.array([[s11, off], [off, s22]]))


@dataclass(frozen=True)
class PriorSpec:
    """Which spatial prior, plus its dependence parameter(s).

    kind: "icar" (no lambda), "lcar" (scalar lambda in [0,1]) or
    "ljcar" (one lambda per disease).
    """

    kind: str
    lam: float | tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if self.kind == ICAR:
            if self.lam is not None:
                raise ValueError("iCAR takes no dependence parameter")
        elif self.lam is None:
            pass  # lambda left free: legal for full-Bayes fits only
        elif self.kind == LCAR:
            if not np.isscalar(self.lam):
                raise ValueError("LCAR takes a scalar lambda")
            if not 0.0 <= self.lam <= 1.0:
                raise ValueError("lambda must lie in [0,1]")
        else:
            lam = tuple(float(x) for x in np.atleast_1d(self.lam))
            if any(not 0.0 <= x <= 1.0 for x in lam):
                raise ValueError("every lambda must lie in [0,1]")
            object.__setattr__(self, "lam", lam)

    def lambdas(self, num_diseases: int) -> np.ndarray:
        """Per-disease dependence parameters (lambda = 1 encodes iCAR)."""
        if self.kind == ICAR:
            return np.ones(num_diseases)
        if self.lam is None:
            raise ValueError("lambda is unset (full-Bayes spec); no fixed values")
        if self.kind == LCAR:
            return np.full(num_diseases, float(self.lam))
        if len(self.lam) != num_diseases:
            raise ValueError(
                f"LjCAR has {len(self.lam)} lambdas but J={num_diseases}"
            )
        return np.asarray(self.lam, dtype=float)

    @property
    def separable(self) -> bool:
        return self.kind in (ICAR, LCAR)


@dataclass(frozen=True)
class BartlettFactor:
    """Lower-triangular Wishart factor A: diagonal c_j > 0, N(0,1) below."""

    matrix: np.ndarray
    dof: int

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def between_cov(self) -> np.ndarray:
        return self.matrix @ self.matrix.T


def mixing_matrix(sigma_b: BetweenCov | np.ndarray) -> np.ndarray:
    """Deterministic M with M M' = Sigma_b, from the eigendecomposition.

    Eigenvalues are sorted descending; each eigenvector's first component of
    magnitude above tolerance is made positive so the factor is unique.
    """
    values = sigma_b.values if isinstance(sigma_b, BetweenCov) else np.asarray(sigma_b, float)
    kappa, H = np.linalg.eigh(values)
    if kappa.min() <= 0:
        raise ValueError("mixing matrix requires a positive definite input")
    order = np.argsort(kappa, kind="stable")[::-1]
    kappa, H = kappa[order], H[:, order]
    tol = 1e-12 * np.abs(H).max()
    for j in range(H.shape[1]):
        col = H[:, j]
        lead = col[np.abs(col) > tol][0]
        if lead < 0:
            H[:, j] = -col
    return np.ascontiguousarray(H * np.sqrt(kappa))


def sample_bartlett(dim: int, dof: int, rng: np.random.Generator) -> BartlettFactor:
    """Draw the Bartlett factor of a Wishart(dof, I) matrix.

    Diagonal entries satisfy c_j^2 ~ chi^2_{dof-j+1} (1-based j); strict
    lower entries are standard normal.
    """
    if dof < dim:
        raise ValueError(f"need dof >= dim, got dof={dof}, dim={dim}")
    A = np.zeros((dim, dim))
    for j in range(dim):
        A[j, j] = np.sqrt(rng.chisquare(dof - j))
        for l in range(j):
            A[j, l] = rng.standard_normal()
    return BartlettFactor(A, dof)


def within_precision(
    spec: PriorSpec, graph: ArealGraph, disease_index: int | None = None
) -> np.ndarray:
    """Per-disease G x G precision: R, or lambda*R + (1-lambda)*I."""
    if spec.kind == LJCAR:
        if disease_index is None:
            raise ValueError("LjCAR requires a disease_index")
        lam = spec.lam[disease_index]
    else:
        if disease_index is not None:
            raise ValueError("disease_index only applies to LjCAR")
        lam = 1.0 if spec.kind == ICAR else float(spec.lam)
    R = graph.structure_matrix()
    if lam == 1.0:
        return R
    return lam * R + (1.0 - lam) * np.eye(graph.num_areas)


def _block_diag_entries(spec: PriorSpec, graph: ArealGraph, J: int) -> np.ndarray:
    """(J, G) array of per-disease precision diagonals lam*w+ + (1-lam)."""
    lam = spec.lambdas(J)
    wplus = graph.neighbor_counts.astype(float)
    return lam[:, None] * wplus[None, :] + (1.0 - lam)[:, None]


def joint_precision_block(
    spec: PriorSpec,
    sigma_b: BetweenCov,
    graph: ArealGraph,
    area_index: int,
) -> np.ndarray:
    """The J x J diagonal block of the joint precision for one area (0-based)."""
    if not 0 <= area_index < graph.num_areas:
        raise ValueError(f"area_index {area_index} out of range")
    J = sigma_b.dim
    if spec.separable:
        lam = spec.lambdas(J)[0]
        qii = lam * graph.neighbor_counts[area_index] + (1.0 - lam)
        return qii * np.linalg.inv(sigma_b.values)
    diag = _block_diag_entries(spec, graph, J)[:, area_index]
    Minv = np.linalg.inv(mixing_matrix(sigma_b))
    return Minv.T @ np.diag(diag) @ Minv


def full_joint_precision(
    spec: PriorSpec,
    sigma_b: BetweenCov,
    graph: ArealGraph,
    max_dim: int = 4000,
) -> np.ndarray:
    """Dense JG x JG joint precision in area-major vec ordering.

    Intended as a small-G oracle; guarded by ``max_dim``.
    """
    J, G = sigma_b.dim, graph.num_areas
    if J * G > max_dim:
        raise MemoryError(f"dense precision of size {J * G} exceeds guard {max_dim}")
    if spec.separable:
        Q = within_precision(spec, graph)
        return np.kron(Q, np.linalg.inv(sigma_b.values))
    # Non-separable: (I (x) M'^-1) C^-1 (I (x) M^-1) where the (l,k) block of
    # C^-1 is diag((Q_1)_lk, ..., (Q_J)_lk).
    Qs = np.stack([within_precision(spec, graph, j) for j in range(J)])
    Cinv = np.zeros((J * G, J * G))
    for l in range(G):
        for k in range(G):
            Cinv[l * J : (l + 1) * J, k * J : (k + 1) * J] = np.diag(Qs[:, l, k])
    Minv = np.linalg.inv(mixing_matrix(sigma_b))
    block = np.kron(np.eye(G), Minv)
    return block.T @ Cinv @ block
