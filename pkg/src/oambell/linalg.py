"""Small dense complex SVD by one-sided (Hestenes) Jacobi rotations.

The routine is batched: it accepts a stack ``(..., m, n)`` of matrices and
rotates every member of the batch with the same column-pair schedule, so a
few thousand 6x6 decompositions cost a handful of numpy calls per pair.
"""

from __future__ import annotations

import numpy as np

OFF_DIAGONAL_TOL = 1e-14
MAX_SWEEPS = 80


def jacobi_svd(a: np.ndarray, tol: float = OFF_DIAGONAL_TOL, max_sweeps: int = MAX_SWEEPS):
    """Singular value decomposition ``a = u @ diag(s) @ vh``.

    Returns ``(u, s, vh)`` with ``s`` sorted in descending order. Ties keep the
    original column order (stable sort). Shapes follow the thin SVD with
    ``k = min(m, n)``: ``u`` is ``(..., m, k)``, ``s`` is ``(..., k)`` and ``vh``
    is ``(..., k, n)``. Columns of ``u`` belonging to zero singular values are
    completed to an orthonormal set.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim < 2:
        raise ValueError("jacobi_svd needs at least a 2-d array")
    m, n = a.shape[-2:]
    if n > m:
        u, s, vh = jacobi_svd(np.conj(np.swapaxes(a, -1, -2)), tol, max_sweeps)
        return np.conj(np.swapaxes(vh, -1, -2)), s, np.conj(np.swapaxes(u, -1, -2))

    batch_shape = a.shape[:-2]
    w = a.reshape((-1, m, n)).copy()
    v = np.broadcast_to(np.eye(n, dtype=complex), (w.shape[0], n, n)).copy()

    for _ in range(max_sweeps):
        worst = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                wp = w[:, :, p]
                wq = w[:, :, q]
                alpha = np.einsum("bi,bi->b", wp.conj(), wp).real
                beta = np.einsum("bi,bi->b", wq.conj(), wq).real
                gamma = np.einsum("bi,bi->b", wp.conj(), wq)
                g = np.abs(gamma)
                scale = np.sqrt(alpha * beta)
                with np.errstate(divide="ignore", invalid="ignore"):
                    off = np.where(scale > 0.0, g / scale, 0.0)
                worst = max(worst, float(off.max(initial=0.0)))
                rotate = off > tol
                if not rotate.any():
                    continue
                g_safe = np.where(rotate, g, 1.0)
                phase = np.where(rotate, gamma / g_safe, 1.0)
                zeta = (beta - alpha) / (2.0 * g_safe)
                sign = np.where(zeta >= 0.0, 1.0, -1.0)
                t = sign / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                c = np.where(rotate, c, 1.0)[:, None]
                s = np.where(rotate, s, 0.0)[:, None]
                ph = phase.conj()[:, None]
                for mat in (w, v):
                    xp = mat[:, :, p].copy()
                    xq = mat[:, :, q] * ph
                    mat[:, :, p] = c * xp - s * xq
                    mat[:, :, q] = s * xp + c * xq
        if worst <= tol:
            break

    sing = np.linalg.norm(w, axis=1)
    order = np.argsort(-sing, axis=1, kind="stable")
    sing = np.take_along_axis(sing, order, axis=1)
    w = np.take_along_axis(w, order[:, None, :], axis=2)
    v = np.take_along_axis(v, order[:, None, :], axis=2)

    u = np.empty_like(w)
    for b in range(w.shape[0]):
        u[b] = _orthonormal_columns(w[b], sing[b])

    u = u.reshape(batch_shape + (m, n))
    sing = sing.reshape(batch_shape + (n,))
    vh = np.conj(np.swapaxes(v, -1, -2)).reshape(batch_shape + (n, n))
    return u, sing, vh


def _orthonormal_columns(w: np.ndarray, sing: np.ndarray) -> np.ndarray:
    m, n = w.shape
    rank_tol = max(m, n) * np.finfo(float).eps * (sing[0] if n else 0.0)
    u = np.zeros((m, n), dtype=complex)
    filled = []
    for j in range(n):
        if sing[j] > rank_tol:
            u[:, j] = w[:, j] / sing[j]
            filled.append(j)
    # complete the null columns by Gram-Schmidt against the unit vectors
    basis = [u[:, j] for j in filled]
    e = 0
    for j in range(n):
        if j in filled:
            continue
        while e < m:
            cand = np.zeros(m, dtype=complex)
            cand[e] = 1.0
            e += 1
            for b in basis:
                cand -= np.vdot(b, cand) * b
            nrm = np.linalg.norm(cand)
            if nrm > 1e-8:
                u[:, j] = cand / nrm
                basis.append(u[:, j])
                break
    return u
