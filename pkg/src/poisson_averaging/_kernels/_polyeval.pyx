# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batched sparse-polynomial evaluation."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef enum:
    BLOCK = 256


def poly_eval_batch(points, exponents, coeffs):
    cdef double[:, ::1] X = np.ascontiguousarray(points, dtype=np.float64)
    cdef long long[:, ::1] E = np.ascontiguousarray(exponents, dtype=np.int64)
    cdef double[::1] C = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef Py_ssize_t d = X.shape[0], n = X.shape[1], nt = E.shape[0]
    cdef Py_ssize_t i, j, t, k, q, j0, nb, emax = 0, nnz = 0
    for t in range(nt):
        for i in range(d):
            if E[t, i] > emax:
                emax = E[t, i]
            if E[t, i]:
                nnz += 1
    out = np.zeros(n, dtype=np.float64)
    if nt == 0 or n == 0:
        return out
    cdef double[::1] O = out

    # nonzero factors of each term, CSR layout, as row offsets into the power table
    cdef Py_ssize_t[::1] start = np.empty(nt + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] row = np.empty(max(nnz, 1), dtype=np.intp)
    q = 0
    for t in range(nt):
        start[t] = q
        for i in range(d):
            if E[t, i]:
                row[q] = i * (emax + 1) + E[t, i]
                q += 1
    start[nt] = q

    # pw[i * (emax + 1) + k, j] = x_i^k on the current block
    cdef double[:, ::1] pw = np.empty((d * (emax + 1), BLOCK), dtype=np.float64)
    cdef double[::1] tmp = np.empty(BLOCK, dtype=np.float64)
    cdef double[::1] acc = np.empty(BLOCK, dtype=np.float64)
    cdef double c
    cdef double* a
    cdef double* b
    for j0 in range(0, n, BLOCK):
        nb = min(BLOCK, n - j0)
        for i in range(d):
            a = &pw[i * (emax + 1), 0]
            for j in range(nb):
                a[j] = 1.0
            for k in range(1, emax + 1):
                a = &pw[i * (emax + 1) + k, 0]
                b = &pw[i * (emax + 1) + k - 1, 0]
                for j in range(nb):
                    a[j] = b[j] * X[i, j0 + j]
        for j in range(nb):
            acc[j] = 0.0
        for t in range(nt):
            c = C[t]
            if start[t + 1] == start[t]:
                for j in range(nb):
                    acc[j] += c
                continue
            a = &pw[row[start[t]], 0]
            for j in range(nb):
                tmp[j] = c * a[j]
            for q in range(start[t] + 1, start[t + 1]):
                a = &pw[row[q], 0]
                for j in range(nb):
                    tmp[j] *= a[j]
            for j in range(nb):
                acc[j] += tmp[j]
        for j in range(nb):
            O[j0 + j] = acc[j]
    return out
