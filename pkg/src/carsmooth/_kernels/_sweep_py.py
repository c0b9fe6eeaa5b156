"""Pure-Python sweep kernel; semantically identical to the Cython version.

Both implementations consume exactly the same pre-drawn random arrays in the
same order, so a fit is bit-identical whichever backend is active.
"""

from __future__ import annotations

import math


def _softplus(t: float) -> float:
    if t > 35.0:
        return t
    if t < -35.0:
        return math.exp(t)
    return math.log1p(math.exp(t))


def _expit(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def phi_sweep(phi, theta, alpha, M, O, n, lam, wplus, indptr, indices, step, z, logu, acc):
    """One Metropolis sweep over every latent field entry phi[j, i].

    phi (J,G) and its mixed cache theta = M @ phi are updated in place; acc
    accumulates per-entry acceptance counts.  The log target combines the
    Poisson likelihood (through all diseases at area i) with the Leroux
    quadratic form lam*R + (1-lam)*I on row j (lam = 1 for intrinsic rows).
    """
    J, G = phi.shape
    for j in range(J):
        lam_j = lam[j]
        for i in range(G):
            cur = phi[j, i]
            prop = cur + step[j, i] * z[j, i]
            d = prop - cur
            qd = lam_j * wplus[i] + 1.0 - lam_j
            nb = 0.0
            for p in range(indptr[i], indptr[i + 1]):
                nb += phi[j, indices[p]]
            dlp = -(0.5 * qd * (prop * prop - cur * cur) - lam_j * d * nb)
            for l in range(J):
                m = M[l, j]
                if m == 0.0:
                    continue
                x0 = alpha[l] + theta[l, i]
                x1 = x0 + m * d
                dlp += O[l, i] * (_softplus(-x0) - _softplus(-x1))
                dlp -= n[i] * (_expit(x1) - _expit(x0))
            if logu[j, i] < dlp:
                phi[j, i] = prop
                acc[j, i] += 1
                for l in range(J):
                    theta[l, i] += M[l, j] * d
