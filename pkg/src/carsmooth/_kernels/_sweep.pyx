# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Metropolis sweep over the latent spatial fields.

Must stay semantically identical to ``_sweep_py.phi_sweep``: same update
order, same random-array consumption, bit-identical accept decisions.
"""

from libc.math cimport exp, log1p


cdef inline double _softplus(double t) nogil:
    if t > 35.0:
        return t
    if t < -35.0:
        return exp(t)
    return log1p(exp(t))


cdef inline double _expit(double x) nogil:
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


def phi_sweep(
    double[:, ::1] phi,
    double[:, ::1] theta,
    double[::1] alpha,
    double[:, ::1] M,
    double[:, ::1] O,
    double[::1] n,
    double[::1] lam,
    double[::1] wplus,
    long long[::1] indptr,
    long long[::1] indices,
    double[:, ::1] step,
    double[:, ::1] z,
    double[:, ::1] logu,
    long long[:, ::1] acc,
):
    cdef Py_ssize_t J = phi.shape[0]
    cdef Py_ssize_t G = phi.shape[1]
    cdef Py_ssize_t i, j, l
    cdef long long p
    cdef double lam_j, cur, prop, d, qd, nb, dlp, m, x0, x1

    with nogil:
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
