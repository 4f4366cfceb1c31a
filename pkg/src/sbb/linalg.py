"""Dense symmetric eigen-decomposition via cyclic Jacobi rotations.

Sized for the small matrices this solver needs (quadratic curvature checks
and 3x3 moment-minor separation); k is capped at 16.
"""

from __future__ import annotations

import math

import numpy as np


def eig_sym(a: np.ndarray, max_sweeps: int = 50) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of symmetric a.

    Returns ``(w, v)`` with columns of v the eigenvectors, ``a @ v[:, i]``
    within 1e-9 * ||a||_inf of ``w[i] * v[:, i]``.
    """
    a = np.asarray(a, dtype=float)
    k = a.shape[0]
    if a.shape != (k, k):
        raise ValueError("matrix must be square")
    if k > 16:
        raise ValueError("eig_sym is limited to k <= 16")
    if k and np.max(np.abs(a - a.T)) > 1e-12 * max(1.0, np.max(np.abs(a))):
        raise ValueError("matrix must be symmetric")
    m = 0.5 * (a + a.T)
    v = np.eye(k)
    if k <= 1:
        return m.diagonal().copy(), v
    scale = max(1.0, np.max(np.abs(m)))
    tol = 1e-14 * scale
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(k - 1):
            for q in range(p + 1, k):
                off = max(off, abs(m[p, q]))
                apq = m[p, q]
                if abs(apq) <= tol:
                    continue
                theta = 0.5 * (m[q, q] - m[p, p]) / apq
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(1.0, theta))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                rot = np.eye(k)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                m = rot.T @ m @ rot
                v = v @ rot
        if off <= tol:
            break
    w = m.diagonal().copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]
