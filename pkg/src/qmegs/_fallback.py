"""Pure-numpy versions of the hot loops in ``_kernels.pyx``.

Results agree with the compiled path to rounding error, not bit for bit.
"""

import numpy as np

FILTER_BLOCK = 64
_ROWS_PER_CHUNK = 16 * FILTER_BLOCK


def filter_sum(t, z, theta0, dtheta, npts):
    t = np.ascontiguousarray(t, dtype=np.float64)
    z = np.ascontiguousarray(z, dtype=np.complex128)
    if t.size == 0:
        raise ValueError("empty dataset")
    out = np.empty(npts, dtype=np.complex128)
    for j0 in range(0, npts, _ROWS_PER_CHUNK):
        j1 = min(npts, j0 + _ROWS_PER_CHUNK)
        theta = theta0 + np.arange(j0, j1) * dtheta
        # contiguous last-axis reduction: each row summed independently of the chunk shape
        out[j0:j1] = (np.exp(1j * np.outer(theta, t)) * z).sum(axis=1) / t.size
    return out


def _round_robin(m):
    """Pairings for m (even) players: m-1 rounds covering every pair once."""
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        half = m // 2
        rounds.append((np.array(players[:half]), np.array(players[half:][::-1])))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def jacobi_eig(a, tol, max_sweeps):
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[0]
    m = n + (n % 2)
    A = np.zeros((m, m))
    A[:n, :n] = a
    V = np.eye(m)
    rounds = _round_robin(m) if m > 1 else []
    sweep = 0
    while True:
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol or sweep >= max_sweeps:
            break
        for P, Q in rounds:
            apq = A[P, Q]
            app = A[P, P]
            aqq = A[Q, Q]
            nz = apq != 0.0
            theta = np.where(nz, (aqq - app) / np.where(nz, 2.0 * apq, 1.0), 0.0)
            big = np.abs(theta) > 1e150
            theta = np.where(big, 0.0, theta)
            tt = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(1.0 + theta * theta))
            tt = np.where(nz & ~big, tt, 0.0)
            c = 1.0 / np.sqrt(1.0 + tt * tt)
            s = tt * c
            Ap = A[:, P].copy()
            Aq = A[:, Q]
            A[:, P] = c * Ap - s * Aq
            A[:, Q] = s * Ap + c * Aq
            Ap = A[P, :].copy()
            Aq = A[Q, :]
            A[P, :] = c[:, None] * Ap - s[:, None] * Aq
            A[Q, :] = s[:, None] * Ap + c[:, None] * Aq
            A[P, Q] = 0.0
            A[Q, P] = 0.0
            Vp = V[:, P].copy()
            Vq = V[:, Q]
            V[:, P] = c * Vp - s * Vq
            V[:, Q] = s * Vp + c * Vq
        sweep += 1
    return np.diag(A)[:n].copy(), V[:n, :n].copy(), sweep, off


def hankel_matmat(h, x, rows, cols, adjoint):
    """Hankel product by FFT convolution; the dense matrix is never formed."""
    h = np.asarray(h, dtype=np.complex128)[: rows + cols - 1]
    x = np.asarray(x, dtype=np.complex128)
    if adjoint:
        # (H^H X)[j] = sum_i conj(h[i + j]) X[i]
        h = h.conj()
        nin, nout = rows, cols
    else:
        nin, nout = cols, rows
    # Y[i] = sum_j h[i + j] X[j] is a correlation: convolve h with X reversed, keep lags nin-1 ..
    n = h.size + nin - 1
    size = 1 << (n - 1).bit_length()
    fh = np.fft.fft(h, size)
    fx = np.fft.fft(x[::-1], size, axis=0)
    full = np.fft.ifft(fh[:, None] * fx, axis=0)
    return full[nin - 1:nin - 1 + nout]
