# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: scalar attention and Pareto filtering."""

from libc.math cimport exp

import numpy as np


def scalar_attention(double[:, ::1] q, double[:, ::1] k, double[:, ::1] v):
    """softmax(q k^T) v for one (batch, head) slice, one scalar at a time."""
    cdef Py_ssize_t n = q.shape[0], m = k.shape[0], dk = q.shape[1], dv = v.shape[1]
    cdef Py_ssize_t i, j, c
    cdef double acc, mx, total
    out_arr = np.zeros((n, dv), dtype=np.float64)
    row_arr = np.empty(m, dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] row = row_arr
    for i in range(n):
        mx = -1e308
        for j in range(m):
            acc = 0.0
            for c in range(dk):
                acc += q[i, c] * k[j, c]
            row[j] = acc
            if acc > mx:
                mx = acc
        total = 0.0
        for j in range(m):
            row[j] = exp(row[j] - mx)
            total += row[j]
        for j in range(m):
            row[j] /= total
        for j in range(m):
            for c in range(dv):
                out[i, c] += row[j] * v[j, c]
    return out_arr


def pareto_mask(double[:, ::1] pts):
    """Non-dominated rows when every column is minimized."""
    cdef Py_ssize_t n = pts.shape[0], d = pts.shape[1]
    cdef Py_ssize_t i, j, c
    cdef bint le, lt
    mask_arr = np.ones(n, dtype=np.bool_)
    cdef unsigned char[::1] mask = mask_arr.view(np.uint8)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            le = True
            lt = False
            for c in range(d):
                if pts[j, c] > pts[i, c]:
                    le = False
                    break
                if pts[j, c] < pts[i, c]:
                    lt = True
            if le and lt:
                mask[i] = 0
                break
    return mask_arr
