# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 kernels; same contracts as ``_pykernels``.  Loops run without the GIL."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, log, sqrt

cnp.import_array()


cdef inline bint _bad(double x, double thr) noexcept nogil:
    return not (fabs(x) <= thr)


cdef inline void _step(double* u, double h, double a0, double am, double a1,
                       double b0, double bm, double b1) noexcept nogil:
    cdef double k11, k12, k21, k22, l11, l12, l21, l22, m11, m12, m21, m22
    cdef double n11, n12, n21, n22, v11, v12, v21, v22, hh = 0.5 * h, s = h / 6.0
    k11 = u[2]; k12 = u[3]
    k21 = -b0 * u[0] - a0 * u[2]; k22 = -b0 * u[1] - a0 * u[3]
    v11 = u[0] + hh * k11; v12 = u[1] + hh * k12; v21 = u[2] + hh * k21; v22 = u[3] + hh * k22
    l11 = v21; l12 = v22
    l21 = -bm * v11 - am * v21; l22 = -bm * v12 - am * v22
    v11 = u[0] + hh * l11; v12 = u[1] + hh * l12; v21 = u[2] + hh * l21; v22 = u[3] + hh * l22
    m11 = v21; m12 = v22
    m21 = -bm * v11 - am * v21; m22 = -bm * v12 - am * v22
    v11 = u[0] + h * m11; v12 = u[1] + h * m12; v21 = u[2] + h * m21; v22 = u[3] + h * m22
    n11 = v21; n12 = v22
    n21 = -b1 * v11 - a1 * v21; n22 = -b1 * v12 - a1 * v22
    u[0] = u[0] + s * (k11 + 2 * l11 + 2 * m11 + n11)
    u[1] = u[1] + s * (k12 + 2 * l12 + 2 * m12 + n12)
    u[2] = u[2] + s * (k21 + 2 * l21 + 2 * m21 + n21)
    u[3] = u[3] + s * (k22 + 2 * l22 + 2 * m22 + n22)


def matrix_blocks(a, b, hs, ends, double threshold):
    cdef double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[:, ::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef double[::1] hv = np.ascontiguousarray(hs, dtype=np.float64)
    cdef long[::1] ev = np.ascontiguousarray(ends, dtype=np.int64)
    out = np.zeros((ev.shape[0], 4))
    cdef double[:, ::1] ov = out
    cdef double u[4]
    cdef Py_ssize_t j, k = 0, nb = ev.shape[0]
    cdef long fail = -1
    with nogil:
        for j in range(nb):
            u[0] = 1.0; u[1] = 0.0; u[2] = 0.0; u[3] = 1.0
            while k < ev[j]:
                _step(u, hv[k], av[k, 0], av[k, 1], av[k, 2], bv[k, 0], bv[k, 1], bv[k, 2])
                if _bad(u[0], threshold) or _bad(u[1], threshold) or _bad(u[2], threshold) or _bad(u[3], threshold):
                    fail = k
                    break
                k += 1
            if fail >= 0:
                break
            ov[j, 0] = u[0]; ov[j, 1] = u[1]; ov[j, 2] = u[2]; ov[j, 3] = u[3]
    return out, int(fail)


def vector_blocks(a, b, hs, ends, v0, double threshold):
    cdef double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[:, ::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef double[::1] hv = np.ascontiguousarray(hs, dtype=np.float64)
    cdef long[::1] ev = np.ascontiguousarray(ends, dtype=np.int64)
    logs = np.zeros(ev.shape[0])
    cdef double[::1] lv = logs
    cdef double x = float(v0[0]), y = float(v0[1]), nrm, h
    cdef double k1x, k1y, k2x, k2y, k3x, k3y, k4x, k4y, px, py
    cdef Py_ssize_t j, k = 0, nb = ev.shape[0]
    cdef long fail = -1
    nrm = sqrt(x * x + y * y)
    x /= nrm; y /= nrm
    with nogil:
        for j in range(nb):
            while k < ev[j]:
                h = hv[k]
                k1x = y; k1y = -bv[k, 0] * x - av[k, 0] * y
                px = x + 0.5 * h * k1x; py = y + 0.5 * h * k1y
                k2x = py; k2y = -bv[k, 1] * px - av[k, 1] * py
                px = x + 0.5 * h * k2x; py = y + 0.5 * h * k2y
                k3x = py; k3y = -bv[k, 1] * px - av[k, 1] * py
                px = x + h * k3x; py = y + h * k3y
                k4x = py; k4y = -bv[k, 2] * px - av[k, 2] * py
                x = x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
                y = y + h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
                if _bad(x, threshold) or _bad(y, threshold):
                    fail = k
                    break
                k += 1
            if fail >= 0:
                break
            nrm = sqrt(x * x + y * y)
            if nrm == 0.0:
                fail = k - 1 if k > 0 else 0
                break
            lv[j] = log(nrm)
            x /= nrm; y /= nrm
    return logs, np.array([x, y]), int(fail)


cdef inline void _rot_rhs(const double* s, double a, double b, double xi, double* d) noexcept nogil:
    cdef double det = s[0] * s[3] - s[1] * s[2]
    cdef double c = xi / det
    cdef double g11 = -c * s[0] * s[1], g12 = -c * s[1] * s[1]
    cdef double g21 = c * s[0] * s[0], g22 = c * s[0] * s[1]
    d[0] = s[2]; d[1] = s[3]
    d[2] = -b * s[0] - a * s[2]; d[3] = -b * s[1] - a * s[3]
    d[4] = g11 * s[4] + g12 * s[6]; d[5] = g11 * s[5] + g12 * s[7]
    d[6] = g21 * s[4] + g22 * s[6]; d[7] = g21 * s[5] + g22 * s[7]


def rotation(a, b, hs, double xi, double threshold):
    cdef double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[:, ::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef double[::1] hv = np.ascontiguousarray(hs, dtype=np.float64)
    cdef double s[8]
    cdef double t[8]
    cdef double k1[8]
    cdef double k2[8]
    cdef double k3[8]
    cdef double k4[8]
    cdef double h
    cdef Py_ssize_t k, i, n = hv.shape[0]
    cdef long fail = -1
    for i in range(8):
        s[i] = 0.0
    s[0] = 1.0; s[3] = 1.0; s[4] = 1.0; s[7] = 1.0
    with nogil:
        for k in range(n):
            h = hv[k]
            _rot_rhs(s, av[k, 0], bv[k, 0], xi, k1)
            for i in range(8):
                t[i] = s[i] + 0.5 * h * k1[i]
            _rot_rhs(t, av[k, 1], bv[k, 1], xi, k2)
            for i in range(8):
                t[i] = s[i] + 0.5 * h * k2[i]
            _rot_rhs(t, av[k, 1], bv[k, 1], xi, k3)
            for i in range(8):
                t[i] = s[i] + h * k3[i]
            _rot_rhs(t, av[k, 2], bv[k, 2], xi, k4)
            for i in range(8):
                s[i] = s[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i])
            for i in range(8):
                if _bad(s[i], threshold):
                    fail = k
            if fail >= 0:
                break
    return (np.array([s[0], s[1], s[2], s[3]]), np.array([s[4], s[5], s[6], s[7]]), int(fail))
