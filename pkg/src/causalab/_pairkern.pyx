# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pairwise product-spectrum kernels.

Same two entry points as `causalab._pairstats_py`, with the matrix product
and the nonsymmetric eigensolve done through BLAS/LAPACK (zgemm + zgeev)
without per-pair Python overhead.
"""

import numpy as np

cimport numpy as cnp
from libc.string cimport memcpy
from scipy.linalg.cython_blas cimport zgemm
from scipy.linalg.cython_lapack cimport zgeev

cnp.import_array()

BACKEND_NAME = "cython"


cdef int _product_into(double complex* a, double complex* b, double complex* c,
                       int d) noexcept nogil:
    # Row-major C = A @ B via column-major zgemm on the transposed views:
    # C^T = B^T A^T.
    cdef double complex one = 1.0, zero = 0.0
    zgemm("N", "N", &d, &d, &d, &one, b, &d, a, &d, &zero, c, &d)
    return 0


cdef int _eigvals_into(double complex* mat, double complex* w, int d,
                       double complex* work, int lwork, double* rwork) noexcept nogil:
    cdef int info = 0
    cdef int ldv = 1
    cdef double complex vdummy
    zgeev("N", "N", &d, mat, &d, w, &vdummy, &ldv, &vdummy, &ldv,
          work, &lwork, rwork, &info)
    return info


cdef int _lwork_for(int d):
    # Workspace query once per matrix size.
    cdef int info = 0, lwork = -1, ldv = 1
    cdef double complex wopt, vdummy, adummy, wdummy
    cdef double rdummy
    zgeev("N", "N", &d, &adummy, &d, &wdummy, &vdummy, &ldv, &vdummy, &ldv,
          &wopt, &lwork, &rdummy, &info)
    if info != 0 or wopt.real < 2 * d:
        return 4 * d
    return <int> wopt.real


def product_spectra_block(cnp.complex128_t[:, :, ::1] a,
                          cnp.complex128_t[:, :, ::1] b):
    """Eigenvalues of every product a[i] @ b[j]; see the NumPy twin."""
    cdef int ma = a.shape[0], mb = b.shape[0], d = a.shape[1]
    cdef int i, j, info
    cdef int lwork = _lwork_for(d)
    out_arr = np.empty((ma, mb, d), dtype=np.complex128)
    prod_arr = np.empty((d, d), dtype=np.complex128)
    work_arr = np.empty(lwork, dtype=np.complex128)
    rwork_arr = np.empty(2 * d, dtype=np.float64)
    cdef cnp.complex128_t[:, :, ::1] out = out_arr
    cdef cnp.complex128_t[:, ::1] prod = prod_arr
    cdef cnp.complex128_t[::1] work = work_arr
    cdef double[::1] rwork = rwork_arr
    for i in range(ma):
        for j in range(mb):
            _product_into(&a[i, 0, 0], &b[j, 0, 0], &prod[0, 0], d)
            info = _eigvals_into(&prod[0, 0], &out[i, j, 0], d,
                                 &work[0], lwork, &rwork[0])
            if info != 0:
                from .errors import NumericalFailure
                raise NumericalFailure(
                    f"zgeev failed with info={info} on pair ({i}, {j})")
    return out_arr


def action_sums(cnp.complex128_t[:, :, ::1] ops, double[::1] weights,
                double[::1] norms, int two_n, double tol):
    """Accumulate the causal action and boundedness sums; see the NumPy twin."""
    cdef int m = ops.shape[0], d = ops.shape[1]
    cdef int i, j, k, info
    cdef int lwork = _lwork_for(d)
    cdef double s1, s2, mod, thresh, lag, ww
    cdef double action = 0.0, bound = 0.0
    prod_arr = np.empty((d, d), dtype=np.complex128)
    w_arr = np.empty(d, dtype=np.complex128)
    work_arr = np.empty(lwork, dtype=np.complex128)
    rwork_arr = np.empty(2 * d, dtype=np.float64)
    cdef cnp.complex128_t[:, ::1] prod = prod_arr
    cdef cnp.complex128_t[::1] w = w_arr
    cdef cnp.complex128_t[::1] work = work_arr
    cdef double[::1] rwork = rwork_arr
    for i in range(m):
        for j in range(m):
            _product_into(&ops[i, 0, 0], &ops[j, 0, 0], &prod[0, 0], d)
            info = _eigvals_into(&prod[0, 0], &w[0], d, &work[0], lwork, &rwork[0])
            if info != 0:
                from .errors import NumericalFailure
                raise NumericalFailure(
                    f"zgeev failed with info={info} on pair ({i}, {j})")
            thresh = tol * norms[i] * norms[j]
            s1 = 0.0
            s2 = 0.0
            for k in range(d):
                mod = abs(w[k])
                if mod > thresh:
                    s1 += mod
                    s2 += mod * mod
            lag = s2 - s1 * s1 / two_n
            if lag < 0.0:
                lag = 0.0
            ww = weights[i] * weights[j]
            action += ww * lag
            bound += ww * s1 * s1
    return action, bound
