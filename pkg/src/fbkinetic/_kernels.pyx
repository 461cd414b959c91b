# cython: language_level=3
"""Compiled Duhamel segment kernels; same contract as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, expm1, fabs

cnp.import_array()

cdef double SERIES_CUTOFF = 0.1
cdef enum:
    NTERMS = 10
cdef double C1[NTERMS]
cdef double C2[NTERMS]


cdef void _init_series():
    cdef int k
    cdef double f = 1.0  # (k + 1)!
    for k in range(NTERMS):
        f *= k + 1
        C1[k] = 1.0 / f
        C2[k] = (k + 1) / (f * (k + 2))


_init_series()


cdef inline double _phi1(double z) nogil:
    cdef double s = 0.0
    cdef int k
    if fabs(z) < SERIES_CUTOFF:
        for k in range(NTERMS - 1, -1, -1):
            s = s * (-z) + C1[k]
        return s
    return -expm1(-z) / z


cdef inline double _phi2(double z) nogil:
    cdef double s = 0.0
    cdef int k
    if fabs(z) < SERIES_CUTOFF:
        for k in range(NTERMS - 1, -1, -1):
            s = s * (-z) + C2[k]
        return s
    return (_phi1(z) - exp(-z)) / z


def phi1(z):
    z = np.asarray(z, dtype=np.float64)
    flat = np.ascontiguousarray(z).ravel()
    out = np.empty_like(flat)
    cdef double[::1] zv = flat
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(zv.shape[0]):
            ov[i] = _phi1(zv[i])
    return out.reshape(z.shape)


def phi2(z):
    z = np.asarray(z, dtype=np.float64)
    flat = np.ascontiguousarray(z).ravel()
    out = np.empty_like(flat)
    cdef double[::1] zv = flat
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(zv.shape[0]):
            ov[i] = _phi2(zv[i])
    return out.reshape(z.shape)


def forward_scan(lam, xs, F):
    cdef double[::1] lv = np.ascontiguousarray(lam, dtype=np.float64)
    cdef double[::1] xv = np.ascontiguousarray(xs, dtype=np.float64)
    cdef double[:, ::1] Fv = np.ascontiguousarray(F, dtype=np.float64)
    cdef Py_ssize_t s = xv.shape[0], m = lv.shape[0], j, i
    out = np.zeros((s, m))
    cdef double[:, ::1] ov = out
    cdef double h, z
    with nogil:
        for j in range(s - 1):
            h = xv[j + 1] - xv[j]
            for i in range(m):
                z = lv[i] * h
                ov[j + 1, i] = (exp(-z) * ov[j, i] + Fv[j + 1, i] * h * _phi1(z)
                                - (Fv[j + 1, i] - Fv[j, i]) * h * _phi2(z))
    return out


def backward_scan(lam, xs, F, end=None):
    cdef double[::1] lv = np.ascontiguousarray(lam, dtype=np.float64)
    cdef double[::1] xv = np.ascontiguousarray(xs, dtype=np.float64)
    cdef double[:, ::1] Fv = np.ascontiguousarray(F, dtype=np.float64)
    cdef Py_ssize_t s = xv.shape[0], m = lv.shape[0], j, i
    out = np.zeros((s, m))
    if end is not None:
        out[s - 1] = end
    cdef double[:, ::1] ov = out
    cdef double h, z
    with nogil:
        for j in range(s - 2, -1, -1):
            h = xv[j + 1] - xv[j]
            for i in range(m):
                z = lv[i] * h
                ov[j, i] = (exp(-z) * ov[j + 1, i] + Fv[j, i] * h * _phi1(z)
                            + (Fv[j + 1, i] - Fv[j, i]) * h * _phi2(z))
    return out


cdef inline Py_ssize_t _locate(double[::1] xv, double x) nogil:
    cdef Py_ssize_t lo = 0, hi = xv.shape[0] - 1, mid
    # largest j with xv[j] <= x, clipped to [0, n - 2]
    if x <= xv[0]:
        return 0
    if x >= xv[hi]:
        return hi - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if xv[mid] <= x:
            lo = mid
        else:
            hi = mid
    return lo


def eval_forward(lam, xs, F, I, xq):
    cdef double[::1] lv = np.ascontiguousarray(lam, dtype=np.float64)
    cdef double[::1] xv = np.ascontiguousarray(xs, dtype=np.float64)
    cdef double[:, ::1] Fv = np.ascontiguousarray(F, dtype=np.float64)
    cdef double[:, ::1] Iv = np.ascontiguousarray(I, dtype=np.float64)
    cdef double[::1] qv = np.ascontiguousarray(xq, dtype=np.float64).ravel()
    cdef Py_ssize_t nq = qv.shape[0], m = lv.shape[0], a, i, j
    out = np.empty((nq, m))
    cdef double[:, ::1] ov = out
    cdef double h, d, slope, fx, z
    with nogil:
        for a in range(nq):
            j = _locate(xv, qv[a])
            h = xv[j + 1] - xv[j]
            d = qv[a] - xv[j]
            for i in range(m):
                slope = (Fv[j + 1, i] - Fv[j, i]) / h
                fx = Fv[j, i] + slope * d
                z = lv[i] * d
                ov[a, i] = exp(-z) * Iv[j, i] + fx * d * _phi1(z) - slope * d * d * _phi2(z)
    return out


def eval_backward(lam, xs, F, K, xq):
    cdef double[::1] lv = np.ascontiguousarray(lam, dtype=np.float64)
    cdef double[::1] xv = np.ascontiguousarray(xs, dtype=np.float64)
    cdef double[:, ::1] Fv = np.ascontiguousarray(F, dtype=np.float64)
    cdef double[:, ::1] Kv = np.ascontiguousarray(K, dtype=np.float64)
    cdef double[::1] qv = np.ascontiguousarray(xq, dtype=np.float64).ravel()
    cdef Py_ssize_t nq = qv.shape[0], m = lv.shape[0], a, i, j
    out = np.empty((nq, m))
    cdef double[:, ::1] ov = out
    cdef double h, d, slope, fx, z
    with nogil:
        for a in range(nq):
            j = _locate(xv, qv[a])
            h = xv[j + 1] - xv[j]
            d = xv[j + 1] - qv[a]
            for i in range(m):
                slope = (Fv[j + 1, i] - Fv[j, i]) / h
                fx = Fv[j + 1, i] - slope * d
                z = lv[i] * d
                ov[a, i] = exp(-z) * Kv[j + 1, i] + fx * d * _phi1(z) + slope * d * d * _phi2(z)
    return out
