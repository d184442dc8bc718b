# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the hot-loop kernels.

Same contract as ``ionduet.kernels.pyref``: phased-rotation propagation and
Poisson CDF inversion seeded from a caller-supplied exp(-lam), so both
backends agree (the inversion bit-exactly, the propagation to rounding).
"""

import numpy as np

from libc.math cimport cos, sin
from scipy.linalg.cython_blas cimport zgemm

cdef long K_MAX = 4096


def apply_phased_rotation(states, basis, eigvals, times):
    """Propagate trial states through one pulse given its eigensystem.

    The two d x d rotations go through BLAS zgemm; only the per-trial phase
    multiply runs as an explicit loop in between.
    """
    cdef double complex[:, ::1] psi = np.ascontiguousarray(states, dtype=np.complex128)
    cdef double complex[:, ::1] V = np.ascontiguousarray(basis, dtype=np.complex128)
    cdef double complex[:, ::1] Vc = np.ascontiguousarray(np.conj(basis), dtype=np.complex128)
    cdef double[::1] w = np.ascontiguousarray(eigvals, dtype=np.float64)
    cdef double[::1] t = np.ascontiguousarray(times, dtype=np.float64)

    cdef Py_ssize_t n = psi.shape[0]
    cdef Py_ssize_t d = psi.shape[1]
    if V.shape[0] != d or V.shape[1] != d or w.shape[0] != d or t.shape[0] != n:
        raise ValueError("shape mismatch in apply_phased_rotation")

    out_arr = np.empty((n, d), dtype=np.complex128)
    y_arr = np.empty((n, d), dtype=np.complex128)
    if n == 0:
        return out_arr
    cdef double complex[:, ::1] out = out_arr
    cdef double complex[:, ::1] y = y_arr
    cdef char no_trans = 'N'
    cdef char trans = 'T'
    cdef int m_ = <int> d, n_ = <int> n, k_ = <int> d
    cdef double complex one = 1.0, zero = 0.0
    cdef Py_ssize_t trial, j
    cdef double phase

    # Row-major buffers read column-major are the transposes, so
    # y = psi @ conj(V) is the column-major product y^T = conj(V)^T psi^T
    # with no transpose flags.
    zgemm(&no_trans, &no_trans, &m_, &n_, &k_, &one,
          &Vc[0, 0], &m_, &psi[0, 0], &k_, &zero, &y[0, 0], &m_)
    for trial in range(n):
        for j in range(d):
            phase = w[j] * t[trial]
            y[trial, j] = y[trial, j] * (cos(phase) - 1j * sin(phase))
    # out = y @ V^T: transposing the column-major read of V gives V itself.
    zgemm(&trans, &no_trans, &m_, &n_, &k_, &one,
          &V[0, 0], &m_, &y[0, 0], &k_, &zero, &out[0, 0], &m_)
    return out_arr


def poisson_mixture_counts(uniforms, lams, p_zero):
    """Summed Poisson counts per trial from per-component uniforms."""
    cdef double[:, ::1] u = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef double[:, ::1] lam = np.ascontiguousarray(lams, dtype=np.float64)
    cdef double[:, ::1] p0 = np.ascontiguousarray(p_zero, dtype=np.float64)

    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t c = u.shape[1]
    if lam.shape[0] != n or lam.shape[1] != c or p0.shape[0] != n or p0.shape[1] != c:
        raise ValueError("shape mismatch in poisson_mixture_counts")

    m_arr = np.zeros(n, dtype=np.int64)
    cdef long[::1] m = m_arr
    cdef Py_ssize_t trial, comp
    cdef long k
    cdef double uu, ll, p, cdf

    for trial in range(n):
        for comp in range(c):
            uu = u[trial, comp]
            ll = lam[trial, comp]
            p = p0[trial, comp]
            cdf = p
            k = 0
            while uu > cdf and k < K_MAX:
                k += 1
                p *= ll / k
                cdf += p
            m[trial] += k
    return m_arr
