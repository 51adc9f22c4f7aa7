"""Pure-numpy fallback for the compiled kernels.

Same contracts as ``_kernels.pyx``; used when the extension is not built.
Per-candidate accumulation still runs in ascending row order, so the fallback
agrees with the compiled path to floating-point noise (exactly, on data whose
squared distances are integer-representable).
"""

from __future__ import annotations

import numpy as np


def pool_totals(feats: np.ndarray) -> np.ndarray:
    """T[i] = sum over rows p (ascending) of ||feats[p] - feats[i]||^2."""
    m = feats.shape[0]
    totals = np.zeros(m, dtype=np.float64)
    for p in range(m):
        diff = feats - feats[p]
        totals += np.einsum("ij,ij->i", diff, diff)
    return totals


def sqdist_accumulate(feats: np.ndarray, sel: int, acc: np.ndarray) -> None:
    """acc[i] += ||feats[i] - feats[sel]||^2 for every row i."""
    diff = feats - feats[sel]
    acc += np.einsum("ij,ij->i", diff, diff)


def best_gain(accum: np.ndarray, totals: np.ndarray, alive: np.ndarray) -> tuple[int, float]:
    """Position and value of max(2*A - T) over alive rows; ties to lowest."""
    gains = 2.0 * accum - totals
    gains[alive == 0] = -np.inf
    pos = int(np.argmax(gains))  # first occurrence = lowest position
    if alive[pos] == 0:
        raise ValueError("no alive candidate")
    return pos, float(gains[pos])


def jacobi_eigh(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigendecomposition, mirroring the compiled kernel.

    Fixed (p, q) sweep order, stop when the off-diagonal Frobenius norm is
    below 1e-12 of the input norm, 100-sweep cap. Returns (w, V) unsorted.
    """
    A = np.array(mat, dtype=np.float64, copy=True)
    m = A.shape[0]
    V = np.eye(m, dtype=np.float64)
    fro = float(np.sqrt((A * A).sum()))
    if fro == 0.0:
        return np.zeros(m, dtype=np.float64), V
    tol = 1e-12 * fro

    for _ in range(100):
        off = float(np.sqrt(2.0 * (np.triu(A, 1) ** 2).sum()))
        if off <= tol:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                app = A[p, p]
                aqq = A[q, q]
                theta = 0.5 * (aqq - app) / apq
                if abs(theta) > 1.0e150:
                    t = 1.0 / (2.0 * theta)
                elif theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + np.sqrt(1.0 + theta * theta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                tau = s / (1.0 + c)
                mask = np.ones(m, dtype=bool)
                mask[p] = mask[q] = False
                arp = A[mask, p].copy()
                arq = A[mask, q].copy()
                A[mask, p] = arp - s * (arq + tau * arp)
                A[p, mask] = A[mask, p]
                A[mask, q] = arq + s * (arp - tau * arq)
                A[q, mask] = A[mask, q]
                A[p, p] = app - t * apq
                A[q, q] = aqq + t * apq
                A[p, q] = A[q, p] = 0.0
                vrp = V[:, p].copy()
                vrq = V[:, q].copy()
                V[:, p] = vrp - s * (vrq + tau * vrp)
                V[:, q] = vrq + s * (vrp - tau * vrq)

    return np.diagonal(A).copy(), V
