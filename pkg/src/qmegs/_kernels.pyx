# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Signatures mirror :mod:`qmegs._fallback` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, sqrt, fabs

cnp.import_array()

# Grid points handled per re-seeded phasor; chunk boundaries must be multiples of this.
DEF BLOCK = 64
FILTER_BLOCK = BLOCK


def filter_sum(const double[::1] t, const double complex[::1] z,
               double theta0, double dtheta, Py_ssize_t npts):
    """Return (1/N) sum_n z_n exp(i theta_j t_n) for theta_j = theta0 + j*dtheta."""
    cdef Py_ssize_t n_shots = t.shape[0]
    cdef Py_ssize_t j0, jb, jj, n
    cdef double th, c, s, sc, ss, pr, pi_, zr, zi, tmp
    cdef double accr[BLOCK]
    cdef double acci[BLOCK]
    out = np.empty(npts, dtype=np.complex128)
    cdef double complex[::1] o = out
    if n_shots == 0:
        raise ValueError("empty dataset")
    with nogil:
        j0 = 0
        while j0 < npts:
            jb = BLOCK if npts - j0 > BLOCK else npts - j0
            for jj in range(jb):
                accr[jj] = 0.0
                acci[jj] = 0.0
            th = theta0 + j0 * dtheta
            for n in range(n_shots):
                c = cos(th * t[n])
                s = sin(th * t[n])
                sc = cos(dtheta * t[n])
                ss = sin(dtheta * t[n])
                zr = z[n].real
                zi = z[n].imag
                pr = zr * c - zi * s
                pi_ = zr * s + zi * c
                for jj in range(jb):
                    accr[jj] += pr
                    acci[jj] += pi_
                    tmp = pr * sc - pi_ * ss
                    pi_ = pr * ss + pi_ * sc
                    pr = tmp
            for jj in range(jb):
                o[j0 + jj] = (accr[jj] + 1j * acci[jj]) / n_shots
            j0 += BLOCK
    return out


def jacobi_eig(double[:, ::1] a, double tol, int max_sweeps):
    """Cyclic Jacobi on a copy of ``a``.

    Returns (diag, V, sweeps, off) where off is the final off-diagonal
    Frobenius norm; the caller decides whether that counts as converged.
    Only rows are swept (contiguous); columns are mirrored from them.
    """
    cdef Py_ssize_t n = a.shape[0]
    A_arr = np.array(a, dtype=np.float64, copy=True)
    Vt_arr = np.eye(n, dtype=np.float64)
    cdef double[:, ::1] A = A_arr
    cdef double[:, ::1] Vt = Vt_arr
    cdef Py_ssize_t p, q, k
    cdef int sweep = 0
    cdef double off, apq, theta, tt, cs, sn, akp, akq
    with nogil:
        while True:
            off = 0.0
            for p in range(n):
                for q in range(p + 1, n):
                    off += 2.0 * A[p, q] * A[p, q]
            off = sqrt(off)
            if off <= tol or sweep >= max_sweeps:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = A[p, q]
                    if apq == 0.0:
                        continue
                    theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                    if fabs(theta) > 1e150:
                        continue
                    if theta >= 0:
                        tt = 1.0 / (theta + sqrt(1.0 + theta * theta))
                    else:
                        tt = -1.0 / (-theta + sqrt(1.0 + theta * theta))
                    cs = 1.0 / sqrt(1.0 + tt * tt)
                    sn = tt * cs
                    A[p, p] = A[p, p] - tt * apq
                    A[q, q] = A[q, q] + tt * apq
                    A[p, q] = 0.0
                    A[q, p] = 0.0
                    for k in range(n):
                        if k == p or k == q:
                            continue
                        akp = A[p, k]
                        akq = A[q, k]
                        A[p, k] = cs * akp - sn * akq
                        A[q, k] = sn * akp + cs * akq
                    for k in range(n):
                        if k == p or k == q:
                            continue
                        A[k, p] = A[p, k]
                        A[k, q] = A[q, k]
                    for k in range(n):
                        akp = Vt[p, k]
                        akq = Vt[q, k]
                        Vt[p, k] = cs * akp - sn * akq
                        Vt[q, k] = sn * akp + cs * akq
            sweep += 1
    return np.diag(A_arr).copy(), Vt_arr.T.copy(), sweep, off


def hankel_matmat(const double complex[::1] h, double complex[:, ::1] x,
                  Py_ssize_t rows, Py_ssize_t cols, bint adjoint):
    """Y = H X (or H^H X) for the Hankel matrix H[i, j] = h[i + j].

    Real and imaginary parts are split and X is transposed so every inner
    loop is a contiguous dot product.
    """
    cdef Py_ssize_t b = x.shape[1]
    cdef Py_ssize_t nin = cols if not adjoint else rows
    cdef Py_ssize_t nout = rows if not adjoint else cols
    cdef Py_ssize_t i, j, k
    cdef double sr, si, hr_, hi_, xr_, xi_
    hr_arr = np.ascontiguousarray(np.real(np.asarray(h)))
    # H^H[j, i] = conj(h[i + j]): same index pattern, conjugated entries
    hi_arr = np.ascontiguousarray(np.imag(np.asarray(h)) * (-1.0 if adjoint else 1.0))
    xt = np.asarray(x).T
    xr_arr = np.ascontiguousarray(xt.real)
    xi_arr = np.ascontiguousarray(xt.imag)
    cdef double[::1] hr = hr_arr
    cdef double[::1] hi = hi_arr
    cdef double[:, ::1] xr = xr_arr
    cdef double[:, ::1] xi = xi_arr
    out = np.empty((nout, b), dtype=np.complex128)
    cdef double complex[:, ::1] y = out
    with nogil:
        for i in range(nout):
            for k in range(b):
                sr = 0.0
                si = 0.0
                for j in range(nin):
                    hr_ = hr[i + j]
                    hi_ = hi[i + j]
                    xr_ = xr[k, j]
                    xi_ = xi[k, j]
                    sr = sr + hr_ * xr_ - hi_ * xi_
                    si = si + hr_ * xi_ + hi_ * xr_
                y[i, k] = sr + 1j * si
    return out
