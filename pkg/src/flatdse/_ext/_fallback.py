"""Pure-Python versions of the compiled kernels."""

import math

import numpy as np


def scalar_attention(q, k, v):
    n, dk = q.shape
    m, dv = k.shape[0], v.shape[1]
    out = np.zeros((n, dv))
    for i in range(n):
        row = [sum(q[i, c] * k[j, c] for c in range(dk)) for j in range(m)]
        mx = max(row)
        row = [math.exp(x - mx) for x in row]
        total = sum(row)
        for j in range(m):
            p = row[j] / total
            for c in range(dv):
                out[i, c] += p * v[j, c]
    return out


def pareto_mask(pts):
    pts = np.asarray(pts, dtype=np.float64)
    n = pts.shape[0]
    mask = np.ones(n, dtype=bool)
    for i in range(n):
        le = np.all(pts <= pts[i], axis=1)
        lt = np.any(pts < pts[i], axis=1)
        if np.any(le & lt):
            mask[i] = False
    return mask
