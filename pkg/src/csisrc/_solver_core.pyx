# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled ADMM iteration for complex basis pursuit denoising.

Mirrors ``_solver_py.admm_bpdn``; the Python wrapper selects whichever
backend imported successfully.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from scipy.linalg.cython_blas cimport zgemv, ztrsv

cnp.import_array()

ctypedef double complex cplx


cdef inline cplx conj(cplx z) nogil:
    return z.real - 1j * z.imag


cdef void matvec(cplx[:, ::1] A, cplx[::1] x, cplx[::1] out) nogil:
    # A is C-contiguous, so in Fortran terms it is A^T with lda = n;
    # a transposed zgemv then computes A @ x with BLAS speed
    cdef int m = <int> A.shape[0], n = <int> A.shape[1], inc = 1
    cdef cplx one = 1.0, zero = 0.0
    zgemv("T", &n, &m, &one, &A[0, 0], &n, &x[0], &inc, &zero,
          &out[0], &inc)


cdef void cho_solve_inplace(cplx[:, ::1] L, cplx[::1] b) nogil:
    """Solve (L L^H) s = b in place, L lower triangular (C order).

    Viewed column-major the same buffer is the upper triangle U = L^T,
    so L s = b is U^T s = b, and L^H s = b is conj(U) s = b, which is
    U conj(s) = conj(b).
    """
    cdef int m = <int> L.shape[0], inc = 1
    cdef Py_ssize_t i
    ztrsv("U", "T", "N", &m, &L[0, 0], &m, &b[0], &inc)
    for i in range(m):
        b[i] = conj(b[i])
    ztrsv("U", "N", "N", &m, &L[0, 0], &m, &b[0], &inc)
    for i in range(m):
        b[i] = conj(b[i])


cdef double norm_sq(cplx[::1] v) nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(v.shape[0]):
        acc += v[i].real * v[i].real + v[i].imag * v[i].imag
    return acc


cdef inline double cabs2(cplx z) nogil:
    return z.real * z.real + z.imag * z.imag


def admm_bpdn(cplx[:, ::1] D, cplx[:, ::1] Dh, cplx[:, ::1] chol_lower,
              cplx[::1] y, double eps, double rho, int max_iters,
              double tol):
    """Run the ADMM loop; returns (z, iterations, converged)."""
    cdef Py_ssize_t m = D.shape[0], n = D.shape[1], i
    z_arr = np.zeros(n, dtype=np.complex128)
    cdef cplx[::1] z = z_arr
    cdef cplx[::1] x = np.zeros(n, dtype=np.complex128)
    cdef cplx[::1] u = np.zeros(n, dtype=np.complex128)
    cdef cplx[::1] w = np.zeros(m, dtype=np.complex128)
    cdef cplx[::1] v = np.zeros(m, dtype=np.complex128)
    cdef cplx[::1] b = np.zeros(n, dtype=np.complex128)
    cdef cplx[::1] tmp_m = np.zeros(m, dtype=np.complex128)
    cdef cplx[::1] tmp_m2 = np.zeros(m, dtype=np.complex128)
    cdef cplx[::1] Dx = np.zeros(m, dtype=np.complex128)
    cdef cplx[::1] z_old = np.zeros(n, dtype=np.complex128)
    cdef cplx[::1] w_old = np.zeros(m, dtype=np.complex128)
    cdef cplx[::1] tmp_n = np.zeros(n, dtype=np.complex128)

    cdef double inv_rho = 1.0 / rho
    cdef double sqrt_dims = sqrt(<double> (n + m))
    cdef double y_norm = sqrt(norm_sq(y))
    cdef double dist, mag, scale, r_norm, s_norm
    cdef double scale_pri, scale_dual, eps_pri, eps_dual, acc
    cdef cplx zi, qi
    cdef int iters = 0
    cdef bint converged = False

    with nogil:
        for iters in range(1, max_iters + 1):
            # x-update: b = (z - u) + Dh (w - v), then Woodbury solve
            for i in range(m):
                tmp_m[i] = w[i] - v[i]
            matvec(Dh, tmp_m, b)
            for i in range(n):
                b[i] = b[i] + z[i] - u[i]
            matvec(D, b, tmp_m)
            cho_solve_inplace(chol_lower, tmp_m)
            matvec(Dh, tmp_m, tmp_n)
            for i in range(n):
                x[i] = b[i] - tmp_n[i]
            matvec(D, x, Dx)

            for i in range(n):
                z_old[i] = z[i]
            for i in range(m):
                w_old[i] = w[i]

            # z-update: complex soft threshold of x + u
            for i in range(n):
                zi = x[i] + u[i]
                mag = sqrt(cabs2(zi))
                if mag <= 1e-300:
                    scale = 0.0
                else:
                    scale = 1.0 - inv_rho / mag
                    if scale < 0.0:
                        scale = 0.0
                z[i] = zi * scale

            # w-update: project Dx + v onto the eps-ball around y
            dist = 0.0
            for i in range(m):
                qi = Dx[i] + v[i]
                tmp_m[i] = qi - y[i]
                dist += cabs2(tmp_m[i])
            dist = sqrt(dist)
            if dist <= eps:
                for i in range(m):
                    w[i] = Dx[i] + v[i]
            else:
                scale = eps / dist
                for i in range(m):
                    w[i] = y[i] + tmp_m[i] * scale

            for i in range(n):
                u[i] = u[i] + (x[i] - z[i])
            for i in range(m):
                v[i] = v[i] + (Dx[i] - w[i])

            # residuals
            acc = 0.0
            for i in range(n):
                acc += cabs2(x[i] - z[i])
            for i in range(m):
                acc += cabs2(Dx[i] - w[i])
            r_norm = sqrt(acc)

            for i in range(m):
                tmp_m2[i] = w[i] - w_old[i]
            matvec(Dh, tmp_m2, tmp_n)
            acc = 0.0
            for i in range(n):
                acc += cabs2(z[i] - z_old[i])
            s_norm = rho * sqrt(acc + norm_sq(tmp_n))

            scale_pri = sqrt(norm_sq(x) + norm_sq(Dx))
            acc = sqrt(norm_sq(z) + norm_sq(w))
            if acc > scale_pri:
                scale_pri = acc
            if y_norm > scale_pri:
                scale_pri = y_norm
            if scale_pri < 1e-12:
                scale_pri = 1e-12

            matvec(Dh, v, tmp_n)
            scale_dual = rho * sqrt(norm_sq(u) + norm_sq(tmp_n))
            if y_norm > scale_dual:
                scale_dual = y_norm
            if scale_dual < 1e-12:
                scale_dual = 1e-12

            eps_pri = sqrt_dims * 1e-14 + tol * scale_pri
            eps_dual = sqrt_dims * 1e-14 + tol * scale_dual
            if r_norm <= eps_pri and s_norm <= eps_dual:
                converged = True
                break

    return z_arr, iters, converged
