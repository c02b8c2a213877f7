# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled element kernels; same contract as ``_pykernels``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline void _rows(const double[:, :] N, const double[:, :, :] dN, int q, double[:, :] B) noexcept nogil:
    cdef int a, k
    for a in range(12):
        for k in range(6):
            B[a, k] = 0.0
    for a in range(4):
        B[3 * a, 0] = dN[q, a, 0]
        B[3 * a, 2] = dN[q, a, 1]
        B[3 * a + 1, 1] = dN[q, a, 1]
        B[3 * a + 1, 2] = dN[q, a, 0]
        B[3 * a + 2, 3] = N[q, a]
        B[3 * a + 2, 4] = dN[q, a, 0]
        B[3 * a + 2, 5] = dN[q, a, 1]


cdef inline void _gen(const double[:, :] U, Py_ssize_t c, double[:, :, :] B, int q, double* out) noexcept nogil:
    cdef int i, k
    for k in range(6):
        out[k] = 0.0
    for i in range(12):
        for k in range(6):
            out[k] += U[c, i] * B[q, i, k]


cdef inline void _sig(double* e, double mu, double lam, double* s) noexcept nogil:
    cdef double tr = e[0] + e[1]
    s[0] = 2 * mu * e[0] + lam * tr
    s[1] = 2 * mu * e[1] + lam * tr
    s[2] = mu * e[2]


def element_a(const double[:, :] Ue, const double[:, :] N, const double[:, :, :] dN,
              const double[:] w, double G_c, double eps, double kappa, double mu,
              double lam, bint want_matrix=True):
    cdef Py_ssize_t nc = Ue.shape[0], c
    cdef int nq = N.shape[0], q, i, j, k, l
    r_arr = np.zeros((nc, 12))
    cdef double[:, :] r = r_arr
    K_arr = np.zeros((nc, 12, 12)) if want_matrix else np.zeros((0, 12, 12))
    cdef double[:, :, :] K = K_arr
    Bs = np.zeros((nq, 12, 6))
    cdef double[:, :, :] Bq = Bs
    cdef double gs[6]
    cdef double sig[3]
    cdef double coef[6]
    cdef double D[6][6]
    cdef double DB[6][12]
    cdef double phi, W, g, cp, wq, acc
    for q in range(nq):
        _rows(N, dN, q, Bq[q])
    with nogil:
        for c in range(nc):
            for q in range(nq):
                wq = w[q]
                _gen(Ue, c, Bq, q, gs)
                _sig(gs, mu, lam, sig)
                phi = gs[3]
                W = sig[0] * gs[0] + sig[1] * gs[1] + sig[2] * gs[2]
                g = (1 - kappa) * phi * phi + kappa
                coef[0] = g * sig[0]
                coef[1] = g * sig[1]
                coef[2] = g * sig[2]
                coef[3] = -G_c / eps * (1 - phi) + (1 - kappa) * phi * W
                coef[4] = G_c * eps * gs[4]
                coef[5] = G_c * eps * gs[5]
                for i in range(12):
                    acc = 0.0
                    for k in range(6):
                        acc += Bq[q, i, k] * coef[k]
                    r[c, i] += wq * acc
                if not want_matrix:
                    continue
                for k in range(6):
                    for l in range(6):
                        D[k][l] = 0.0
                D[0][0] = g * (2 * mu + lam)
                D[1][1] = g * (2 * mu + lam)
                D[0][1] = g * lam
                D[1][0] = g * lam
                D[2][2] = g * mu
                cp = 2 * (1 - kappa) * phi
                for k in range(3):
                    D[k][3] = cp * sig[k]
                    D[3][k] = cp * sig[k]
                D[3][3] = G_c / eps + (1 - kappa) * W
                D[4][4] = G_c * eps
                D[5][5] = G_c * eps
                for k in range(6):
                    for j in range(12):
                        acc = 0.0
                        for l in range(6):
                            acc += D[k][l] * Bq[q, j, l]
                        DB[k][j] = acc
                for i in range(12):
                    for j in range(12):
                        acc = 0.0
                        for k in range(6):
                            acc += Bq[q, i, k] * DB[k][j]
                        K[c, i, j] += wq * acc
    return r_arr, (K_arr if want_matrix else None)


def element_a_third(const double[:, :] Ue, const double[:, :] dUe, const double[:, :] Ze,
                    const double[:, :] N, const double[:, :, :] dN, const double[:] w,
                    double kappa, double mu, double lam):
    cdef Py_ssize_t nc = Ue.shape[0], c
    cdef int nq = N.shape[0], q, i, k
    v_arr = np.zeros((nc, 12))
    cdef double[:, :] v = v_arr
    Bs = np.zeros((nq, 12, 6))
    cdef double[:, :, :] Bq = Bs
    cdef double gu[6]
    cdef double gd[6]
    cdef double gz[6]
    cdef double su[3]
    cdef double sd[3]
    cdef double sz[3]
    cdef double coef[6]
    cdef double c2 = 2 * (1 - kappa), acc, a1, a2, a3
    for q in range(nq):
        _rows(N, dN, q, Bq[q])
    with nogil:
        for c in range(nc):
            for q in range(nq):
                _gen(Ue, c, Bq, q, gu)
                _gen(dUe, c, Bq, q, gd)
                _gen(Ze, c, Bq, q, gz)
                _sig(gu, mu, lam, su)
                _sig(gd, mu, lam, sd)
                _sig(gz, mu, lam, sz)
                a1 = gu[3] * gd[3]
                a2 = gd[3] * gz[3]
                a3 = gu[3] * gz[3]
                for k in range(3):
                    coef[k] = c2 * (a1 * sz[k] + a2 * su[k] + a3 * sd[k])
                coef[3] = c2 * (gd[3] * (su[0] * gz[0] + su[1] * gz[1] + su[2] * gz[2])
                                + gu[3] * (sd[0] * gz[0] + sd[1] * gz[1] + sd[2] * gz[2])
                                + gz[3] * (sd[0] * gu[0] + sd[1] * gu[1] + sd[2] * gu[2]))
                coef[4] = 0.0
                coef[5] = 0.0
                for i in range(12):
                    acc = 0.0
                    for k in range(4):
                        acc += Bq[q, i, k] * coef[k]
                    v[c, i] += w[q] * acc
    return v_arr
