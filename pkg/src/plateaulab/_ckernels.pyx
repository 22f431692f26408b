# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in _pykernels."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def tri_area_grad(V, T, bint want_grad=True):
    cdef double[:, ::1] v = np.ascontiguousarray(V, dtype=np.float64)
    cdef long long[:, ::1] t = np.ascontiguousarray(T, dtype=np.int64)
    cdef Py_ssize_t m = t.shape[0], k, d
    areas_arr = np.zeros(m, dtype=np.float64)
    grad_arr = np.zeros((v.shape[0], 3), dtype=np.float64)
    cdef double[::1] areas = areas_arr
    cdef double[:, ::1] grad = grad_arr
    cdef double e1[3]
    cdef double e2[3]
    cdef double n[3]
    cdef double u[3]
    cdef double cb[3]
    cdef double ac[3]
    cdef double ba[3]
    cdef double nn
    cdef long long ia, ib, ic
    for k in range(m):
        ia = t[k, 0]
        ib = t[k, 1]
        ic = t[k, 2]
        for d in range(3):
            e1[d] = v[ib, d] - v[ia, d]
            e2[d] = v[ic, d] - v[ia, d]
        n[0] = e1[1] * e2[2] - e1[2] * e2[1]
        n[1] = e1[2] * e2[0] - e1[0] * e2[2]
        n[2] = e1[0] * e2[1] - e1[1] * e2[0]
        nn = sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2])
        areas[k] = 0.5 * nn
        if not want_grad or nn <= 0.0:
            continue
        for d in range(3):
            u[d] = n[d] / nn
            cb[d] = v[ic, d] - v[ib, d]
            ac[d] = v[ia, d] - v[ic, d]
            ba[d] = v[ib, d] - v[ia, d]
        grad[ia, 0] += 0.5 * (u[1] * cb[2] - u[2] * cb[1])
        grad[ia, 1] += 0.5 * (u[2] * cb[0] - u[0] * cb[2])
        grad[ia, 2] += 0.5 * (u[0] * cb[1] - u[1] * cb[0])
        grad[ib, 0] += 0.5 * (u[1] * ac[2] - u[2] * ac[1])
        grad[ib, 1] += 0.5 * (u[2] * ac[0] - u[0] * ac[2])
        grad[ib, 2] += 0.5 * (u[0] * ac[1] - u[1] * ac[0])
        grad[ic, 0] += 0.5 * (u[1] * ba[2] - u[2] * ba[1])
        grad[ic, 1] += 0.5 * (u[2] * ba[0] - u[0] * ba[2])
        grad[ic, 2] += 0.5 * (u[0] * ba[1] - u[1] * ba[0])
    return areas_arr, (grad_arr if want_grad else None)


def douglas_pairs(G, kvec):
    # expects points in R^3 and a symmetric row, k[m] == k[N - m]
    if np.ndim(G) != 2 or np.shape(G)[1] != 3 or len(kvec) != np.shape(G)[0]:
        raise ValueError("douglas_pairs needs G of shape (N, 3) and kvec of length N")
    cdef double[:, ::1] g = np.ascontiguousarray(G, dtype=np.float64)
    cdef double[::1] kk = np.ascontiguousarray(kvec, dtype=np.float64)
    cdef Py_ssize_t N = g.shape[0], i, j, d
    grad_arr = np.zeros((N, 3), dtype=np.float64)
    cdef double[:, ::1] grad = grad_arr
    cdef double energy = 0.0, w, dx, dy, dz, row
    for i in range(N):
        row = 0.0
        for j in range(N):
            if i == j:
                continue
            w = kk[(i - j + N) % N]
            dx = g[i, 0] - g[j, 0]
            dy = g[i, 1] - g[j, 1]
            dz = g[i, 2] - g[j, 2]
            row += w * (dx * dx + dy * dy + dz * dz)
            grad[i, 0] += 4.0 * w * dx
            grad[i, 1] += 4.0 * w * dy
            grad[i, 2] += 4.0 * w * dz
        energy += row
    return energy, grad_arr
