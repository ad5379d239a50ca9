"""Pure-NumPy ADMM iteration for complex basis pursuit denoising.

Mirrors the compiled kernel in ``_solver_core``; kept in lockstep so the
two backends are interchangeable. Solves

    min ||x||_1  subject to  ||y - D x||_2 <= eps

by splitting x into an l1 block (complex soft threshold) and the
constraint into a Euclidean-ball projection. The x-update linear system
(I + D^H D) x = b is solved through the Woodbury identity with a cached
Cholesky factor of the small m-by-m Gram matrix I + D D^H.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve


def soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    """Shrink complex moduli by t, preserving phases."""
    mag = np.abs(v)
    scale = np.maximum(0.0, 1.0 - t / np.maximum(mag, 1e-300))
    return v * scale


def admm_bpdn(D, Dh, chol_lower, y, eps, rho, max_iters, tol):
    """Run the ADMM loop; returns (z, iterations, converged).

    chol_lower is the lower Cholesky factor of I_m + D D^H.
    """
    m, n = D.shape
    x = np.zeros(n, dtype=np.complex128)
    z = np.zeros(n, dtype=np.complex128)
    u = np.zeros(n, dtype=np.complex128)
    w = np.zeros(m, dtype=np.complex128)
    v = np.zeros(m, dtype=np.complex128)
    inv_rho = 1.0 / rho
    sqrt_dims = np.sqrt(n + m)
    y_norm = np.linalg.norm(y)

    iters = 0
    converged = False
    for iters in range(1, max_iters + 1):
        # x-update: (I + D^H D) x = (z - u) + D^H (w - v)
        b = (z - u) + Dh @ (w - v)
        x = b - Dh @ cho_solve((chol_lower, True), D @ b)
        Dx = D @ x

        z_old = z
        w_old = w
        z = soft_threshold(x + u, inv_rho)
        q = Dx + v
        diff = q - y
        dist = np.linalg.norm(diff)
        if dist <= eps:
            w = q
        else:
            w = y + diff * (eps / dist)
        u = u + (x - z)
        v = v + (Dx - w)

        r_norm = np.sqrt(np.linalg.norm(x - z) ** 2
                         + np.linalg.norm(Dx - w) ** 2)
        s_norm = rho * np.sqrt(np.linalg.norm(z - z_old) ** 2
                               + np.linalg.norm(Dh @ (w - w_old)) ** 2)
        scale_pri = max(
            np.sqrt(np.linalg.norm(x) ** 2 + np.linalg.norm(Dx) ** 2),
            np.sqrt(np.linalg.norm(z) ** 2 + np.linalg.norm(w) ** 2),
            y_norm, 1e-12)
        scale_dual = max(
            rho * np.sqrt(np.linalg.norm(u) ** 2
                          + np.linalg.norm(Dh @ v) ** 2),
            y_norm, 1e-12)
        eps_pri = sqrt_dims * 1e-14 + tol * scale_pri
        eps_dual = sqrt_dims * 1e-14 + tol * scale_dual
        if r_norm <= eps_pri and s_norm <= eps_dual:
            converged = True
            break
    return z, iters, converged
