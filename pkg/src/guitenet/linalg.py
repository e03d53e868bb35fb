"""Self-contained dense factorizations used by the reference interpreter.

These are deliberately written from scratch (Householder reflections for
the reduced QR, one-sided Jacobi rotations for the SVD) instead of calling
into a linear-algebra library: the interpreter serves as the reference
against which generated code is checked, so it must not share the
factorization routines of any emission target.  NumPy is used only as the
array container and for elementwise arithmetic.  Matrices at desk scale
(up to a few hundred rows and columns) are the design point; asymptotic
performance is a non-goal.
"""

from __future__ import annotations

import numpy as np

# Relative off-diagonal threshold for the Jacobi sweep convergence test.
_JACOBI_EPS = 1e-14
_MAX_SWEEPS = 60


def householder_qr(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reduced QR factorization of a real matrix.

    Returns (q, r) with q of shape (m, k), r of shape (k, n), k = min(m, n),
    q'q = I and r upper triangular with non-negative diagonal (the sign
    convention makes the factorization unique for full-rank input).
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("householder_qr expects a matrix")
    m, n = a.shape
    k = min(m, n)
    r = a.copy()
    reflectors: list[np.ndarray] = []
    for j in range(k):
        x = r[j:, j].copy()
        norm_x = float(np.sqrt((x * x).sum()))
        v = x
        if norm_x > 0.0:
            v[0] += norm_x if x[0] >= 0 else -norm_x
            norm_v = float(np.sqrt((v * v).sum()))
            if norm_v > 0.0:
                v /= norm_v
                r[j:, j:] -= 2.0 * np.outer(v, v @ r[j:, j:])
        else:
            v = np.zeros_like(v)
        reflectors.append(v)

    q = np.zeros((m, k))
    for i in range(k):
        q[i, i] = 1.0
    for j in range(k - 1, -1, -1):
        v = reflectors[j]
        if v.any():
            q[j:, :] -= 2.0 * np.outer(v, v @ q[j:, :])

    r = r[:k, :]
    # The reflections leave numerical noise below the diagonal.
    for i in range(1, k):
        r[i, :min(i, n)] = 0.0
    for i in range(k):
        if r[i, i] < 0.0:
            r[i, :] = -r[i, :]
            q[:, i] = -q[:, i]
    return q, r


def jacobi_svd(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reduced singular value decomposition via one-sided Jacobi rotations.

    Returns (u, s, vt) with u of shape (m, k), s the singular values sorted
    descending as a 1-d array of length k = min(m, n), vt of shape (k, n),
    and a ~ u @ diag(s) @ vt.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("jacobi_svd expects a matrix")
    m, n = a.shape
    if m < n:
        # Orthogonalize the columns of the transpose instead.
        ut, s, vtt = jacobi_svd(a.T)
        return vtt.T, s, ut.T

    w = a.copy()          # columns converge to u_j * sigma_j
    v = np.zeros((n, n))
    for i in range(n):
        v[i, i] = 1.0

    for _ in range(_MAX_SWEEPS):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                cp = w[:, p]
                cq = w[:, q]
                app = float(cp @ cp)
                aqq = float(cq @ cq)
                apq = float(cp @ cq)
                if abs(apq) <= _JACOBI_EPS * np.sqrt(app * aqq):
                    continue
                rotated = True
                zeta = (aqq - app) / (2.0 * apq)
                sign = 1.0 if zeta >= 0 else -1.0
                t = sign / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s_rot = c * t
                new_p = c * cp - s_rot * cq
                new_q = s_rot * cp + c * cq
                w[:, p] = new_p
                w[:, q] = new_q
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s_rot * vq
                v[:, q] = s_rot * vp + c * vq
        if not rotated:
            break

    norms = np.sqrt((w * w).sum(axis=0))
    order = np.argsort(-norms, kind="stable")
    s = norms[order]
    u = np.zeros((m, n))
    for idx, col in enumerate(order):
        if s[idx] > 0.0:
            u[:, idx] = w[:, col] / s[idx]
    vt = v[:, order].T
    return u, s, vt


def truncation_count(s: np.ndarray, sv_cutoff_abs: float,
                     max_bond: int | None) -> int:
    """Number of singular values kept: those strictly above the absolute
    cutoff, capped by max_bond, but never fewer than one."""
    kept = int(np.sum(s > sv_cutoff_abs))
    if max_bond is not None:
        kept = min(kept, max_bond)
    return max(kept, 1)
