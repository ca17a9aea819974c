"""Pure-Python RK4 kernels for ``U' = [[0, 1], [-b(t), -a(t)]] U``.

Coefficients arrive pre-sampled: ``a[k] = (a(t_k), a(t_k + h_k/2), a(t_k + h_k))``
for step ``k`` of signed length ``h_k``.  Blocks are given by the exclusive end
step indices in ``ends``.  The compiled module exposes the same functions.
"""
from __future__ import annotations

import math

import numpy as np


def _rk4_step(u11, u12, u21, u22, h, a0, am, a1, b0, bm, b1):
    # k = M U with M = [[0, 1], [-b, -a]]
    k11, k12 = u21, u22
    k21 = -b0 * u11 - a0 * u21
    k22 = -b0 * u12 - a0 * u22
    hh = 0.5 * h
    v11, v12, v21, v22 = u11 + hh * k11, u12 + hh * k12, u21 + hh * k21, u22 + hh * k22
    l11, l12 = v21, v22
    l21 = -bm * v11 - am * v21
    l22 = -bm * v12 - am * v22
    v11, v12, v21, v22 = u11 + hh * l11, u12 + hh * l12, u21 + hh * l21, u22 + hh * l22
    m11, m12 = v21, v22
    m21 = -bm * v11 - am * v21
    m22 = -bm * v12 - am * v22
    v11, v12, v21, v22 = u11 + h * m11, u12 + h * m12, u21 + h * m21, u22 + h * m22
    n11, n12 = v21, v22
    n21 = -b1 * v11 - a1 * v21
    n22 = -b1 * v12 - a1 * v22
    s = h / 6.0
    return (
        u11 + s * (k11 + 2 * l11 + 2 * m11 + n11),
        u12 + s * (k12 + 2 * l12 + 2 * m12 + n12),
        u21 + s * (k21 + 2 * l21 + 2 * m21 + n21),
        u22 + s * (k22 + 2 * l22 + 2 * m22 + n22),
    )


def _bad(x, threshold):
    return not (abs(x) <= threshold)  # also catches NaN


def matrix_blocks(a, b, hs, ends, threshold):
    """Propagator of every block, each started from the identity.

    Returns ``(mats, fail)``: ``mats`` has shape ``(len(ends), 4)`` in row-major
    order and ``fail`` is the first offending step index or -1.
    """
    a = np.asarray(a, dtype=float).tolist()
    b = np.asarray(b, dtype=float).tolist()
    hs = np.asarray(hs, dtype=float).tolist()
    ends = [int(e) for e in ends]
    out = np.zeros((len(ends), 4))
    k = 0
    for j, end in enumerate(ends):
        u = (1.0, 0.0, 0.0, 1.0)
        while k < end:
            ak, bk = a[k], b[k]
            u = _rk4_step(*u, hs[k], ak[0], ak[1], ak[2], bk[0], bk[1], bk[2])
            if _bad(u[0], threshold) or _bad(u[1], threshold) or _bad(u[2], threshold) or _bad(u[3], threshold):
                return out, k
            k += 1
        out[j] = u
    return out, -1


def vector_blocks(a, b, hs, ends, v0, threshold):
    """Renormalised vector propagation; returns ``(log_growth per block, v_final, fail)``."""
    a = np.asarray(a, dtype=float).tolist()
    b = np.asarray(b, dtype=float).tolist()
    hs = np.asarray(hs, dtype=float).tolist()
    ends = [int(e) for e in ends]
    logs = np.zeros(len(ends))
    x, y = float(v0[0]), float(v0[1])
    nrm = math.hypot(x, y)
    x, y = x / nrm, y / nrm
    k = 0
    for j, end in enumerate(ends):
        while k < end:
            ak, bk = a[k], b[k]
            h = hs[k]
            # RK4 on a single column
            k1x, k1y = y, -bk[0] * x - ak[0] * y
            px, py = x + 0.5 * h * k1x, y + 0.5 * h * k1y
            k2x, k2y = py, -bk[1] * px - ak[1] * py
            px, py = x + 0.5 * h * k2x, y + 0.5 * h * k2y
            k3x, k3y = py, -bk[1] * px - ak[1] * py
            px, py = x + h * k3x, y + h * k3y
            k4x, k4y = py, -bk[2] * px - ak[2] * py
            x += h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
            y += h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
            if _bad(x, threshold) or _bad(y, threshold):
                return logs, np.array([x, y]), k
            k += 1
        nrm = math.hypot(x, y)
        if nrm == 0.0:
            return logs, np.array([x, y]), max(k - 1, 0)
        logs[j] = math.log(nrm)
        x, y = x / nrm, y / nrm
    return logs, np.array([x, y]), -1


def _rot_rhs(p11, p12, p21, p22, r11, r12, r21, r22, a, b, xi):
    dp11, dp12 = p21, p22
    dp21 = -b * p11 - a * p21
    dp22 = -b * p12 - a * p22
    det = p11 * p22 - p12 * p21
    c = xi / det
    g11 = -c * p11 * p12
    g12 = -c * p12 * p12
    g21 = c * p11 * p11
    g22 = c * p11 * p12
    return (
        dp11, dp12, dp21, dp22,
        g11 * r11 + g12 * r21, g11 * r12 + g12 * r22,
        g21 * r11 + g22 * r21, g21 * r12 + g22 * r22,
    )


def rotation(a, b, hs, xi, threshold):
    """Joint RK4 for ``Phi' = A Phi`` and ``R' = Phi^-1 N Phi R`` with ``N = [[0, 0], [xi, 0]]``.

    Returns ``(phi, r, fail)`` as row-major length-4 arrays.
    """
    a = np.asarray(a, dtype=float).tolist()
    b = np.asarray(b, dtype=float).tolist()
    hs = np.asarray(hs, dtype=float).tolist()
    s = [1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]
    for k in range(len(hs)):
        h = hs[k]
        ak, bk = a[k], b[k]
        k1 = _rot_rhs(*s, ak[0], bk[0], xi)
        k2 = _rot_rhs(*[s[i] + 0.5 * h * k1[i] for i in range(8)], ak[1], bk[1], xi)
        k3 = _rot_rhs(*[s[i] + 0.5 * h * k2[i] for i in range(8)], ak[1], bk[1], xi)
        k4 = _rot_rhs(*[s[i] + h * k3[i] for i in range(8)], ak[2], bk[2], xi)
        s = [s[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]) for i in range(8)]
        if any(_bad(x, threshold) for x in s):
            return np.array(s[:4]), np.array(s[4:]), k
    return np.array(s[:4]), np.array(s[4:]), -1
