"""Small dense linear algebra used by the model builders and the baselines.

Everything here is written out by hand on top of numpy array arithmetic:
Jacobi for symmetric eigenproblems, randomized block power iteration for
leading singular subspaces, shifted Hessenberg QR for small non-Hermitian
eigenvalue problems, and pivoted Householder QR for least squares.
"""

import numpy as np

from . import _backend, _fallback
from .errors import ConvergenceError, InvalidInputError, RankError

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 50
MAX_SYM_DIM = 4096
MAX_SMALL_EIG = 32
RANK_TOL = 1e-10


def sym_eig(A):
    """Eigen-decomposition of a real symmetric matrix.

    Returns ``(w, V)`` with ``w`` ascending and the columns of ``V``
    orthonormal, ``A @ V ~= V * w``.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise InvalidInputError(f"expected a non-empty square matrix, got shape {A.shape}")
    if A.shape[0] > MAX_SYM_DIM:
        raise InvalidInputError(f"dimension {A.shape[0]} exceeds {MAX_SYM_DIM}")
    if not np.array_equal(A, A.T):
        raise InvalidInputError("matrix is not symmetric")
    norm = np.linalg.norm(A)
    w, V, _, off = _backend.impl.jacobi_eig(np.ascontiguousarray(A), JACOBI_TOL * norm, JACOBI_MAX_SWEEPS)
    if off > JACOBI_TOL * norm:
        raise ConvergenceError(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps", off / norm)
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def hermitian_eig(A):
    """Eigenpairs of a small Hermitian matrix, descending.

    Goes through the real symmetric embedding [[Re, -Im], [Im, Re]], whose
    spectrum is that of ``A`` with every eigenvalue doubled.
    """
    A = np.asarray(A, dtype=np.complex128)
    n = A.shape[0]
    A = 0.5 * (A + A.conj().T)
    E = np.block([[A.real, -A.imag], [A.imag, A.real]])
    E = 0.5 * (E + E.T)
    w, X = sym_eig(E)
    order = np.argsort(-w, kind="stable")
    candidates = X[:n, order] + 1j * X[n:, order]
    vecs = []
    for k in range(2 * n):
        v = candidates[:, k].copy()
        for u in vecs:
            v -= u * np.vdot(u, v)
        nv = np.linalg.norm(v)
        # the partner [-b; a] of an accepted [a; b] maps onto i*v and vanishes here
        if nv > 0.5:
            vecs.append(v / nv)
            if len(vecs) == n:
                break
    U = np.column_stack(vecs)
    vals = np.real(np.einsum("ij,ij->j", U.conj(), A @ U))
    order = np.argsort(-vals, kind="stable")
    return vals[order], U[:, order]


def orthonormalize(X, rng=None):
    """Twice-iterated modified Gram-Schmidt; dependent columns are replaced by random ones."""
    X = np.array(X, dtype=np.complex128)
    n, b = X.shape
    Q = np.zeros_like(X)
    for k in range(b):
        v = X[:, k]
        v0 = np.linalg.norm(v)
        for _ in range(2):
            for j in range(k):
                v = v - Q[:, j] * np.vdot(Q[:, j], v)
        nv = np.linalg.norm(v)
        if nv <= 1e-12 * max(v0, 1e-300):
            if rng is None:
                rng = np.random.default_rng(k)
            for _ in range(10):
                v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
                for _ in range(2):
                    for j in range(k):
                        v = v - Q[:, j] * np.vdot(Q[:, j], v)
                nv = np.linalg.norm(v)
                if nv > 1e-8:
                    break
        Q[:, k] = v / nv
    return Q


def _rayleigh_ritz(Q, Z, r):
    """Given Q (rows x b) orthonormal and Z = M^H Q, the rank-r SVD of Q^H M."""
    lam, W = hermitian_eig(Z.conj().T @ Z)
    s = np.sqrt(np.clip(lam, 0.0, None))
    U = Q @ W[:, :r]
    V = np.zeros((Z.shape[0], r), dtype=np.complex128)
    for k in range(r):
        if s[k] > 1e-14 * max(s[0], 1e-300):
            V[:, k] = (Z @ W[:, k]) / s[k]
    return U, s, V


def top_singular_subspace_full(matmat, rmatmat, rows, cols, r, tol=1e-9, max_iter=500,
                               oversample=6, seed=0):
    """Randomized block power iteration; returns ``(U, s, V, iterations)``.

    ``matmat(X)`` must return ``M @ X`` and ``rmatmat(X)`` ``M^H @ X`` for
    2-D blocks ``X``.
    """
    if r < 1 or r > min(rows, cols):
        raise InvalidInputError(f"rank {r} outside [1, {min(rows, cols)}]")
    b = min(r + oversample, rows, cols)
    rng = np.random.default_rng(seed)
    omega = rng.standard_normal((cols, b)) + 1j * rng.standard_normal((cols, b))
    Q = orthonormalize(matmat(omega), rng)
    resid = np.inf
    for it in range(1, max_iter + 1):
        Z = rmatmat(Q)
        U, s, V = _rayleigh_ritz(Q, Z, r)
        if s[0] == 0.0:
            return Q[:, :r], s[:r], V, it
        R = matmat(V) - U * s[:r]
        resid = np.linalg.norm(R) / s[0]
        if resid <= tol:
            return U, s[:r], V, it
        Q = orthonormalize(matmat(Z), rng)
    raise ConvergenceError(f"subspace iteration stagnated after {max_iter} iterations", resid)


def top_singular_subspace(matmat, rmatmat, rows, cols, r, tol=1e-9, max_iter=500, seed=0):
    """Orthonormal basis (rows x r) of the leading left singular subspace."""
    return top_singular_subspace_full(matmat, rmatmat, rows, cols, r, tol, max_iter, seed=seed)[0]


def hankel_operator(h, rows, cols, impl=None):
    """(matmat, rmatmat) for the Hankel matrix H[i, j] = h[i + j].

    Defaults to the FFT correlation in ``_fallback``: it beats the compiled
    O(rows*cols) loop by an order of magnitude at ESPRIT sizes (see
    benchmarks/bench_kernels.py). Pass ``impl`` to pick another module.
    """
    h = np.ascontiguousarray(h, dtype=np.complex128)
    if h.size < rows + cols - 1:
        raise InvalidInputError(f"need {rows + cols - 1} samples, got {h.size}")
    kernel = (impl or _fallback).hankel_matmat

    def matmat(X):
        return kernel(h, np.ascontiguousarray(X, dtype=np.complex128), rows, cols, False)

    def rmatmat(X):
        return kernel(h, np.ascontiguousarray(X, dtype=np.complex128), rows, cols, True)

    return matmat, rmatmat


def _hessenberg(A):
    H = np.array(A, dtype=np.complex128)
    n = H.shape[0]
    for k in range(n - 2):
        x = H[k + 1:, k].copy()
        nx = np.linalg.norm(x)
        if nx == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * nx
        v /= np.linalg.norm(v)
        H[k + 1:, :] -= 2.0 * np.outer(v, v.conj() @ H[k + 1:, :])
        H[:, k + 1:] -= 2.0 * np.outer(H[:, k + 1:] @ v, v.conj())
    return H


def _eig2(a, b, c, d):
    half_tr = 0.5 * (a + d)
    disc = np.sqrt(0.25 * (a - d) ** 2 + b * c + 0j)
    e1 = half_tr + disc
    e2 = half_tr - disc
    det = a * d - b * c
    # recompute the smaller root from the product to avoid cancellation
    if abs(e1) >= abs(e2):
        e2 = det / e1 if e1 != 0 else e2
    else:
        e1 = det / e2 if e2 != 0 else e1
    return complex(e1), complex(e2)


def small_complex_eig(A):
    """All eigenvalues of a K x K complex matrix, K <= 32."""
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise InvalidInputError(f"expected a non-empty square matrix, got shape {A.shape}")
    K = A.shape[0]
    if K > MAX_SMALL_EIG:
        raise InvalidInputError(f"K={K} exceeds {MAX_SMALL_EIG}")
    if K == 1:
        return np.array([A[0, 0]])
    if K == 2:
        return np.array(_eig2(A[0, 0], A[0, 1], A[1, 0], A[1, 1]))
    H = _hessenberg(A)
    eps = np.finfo(float).eps
    eigs = []
    hi = K - 1
    its = 0
    while hi >= 0:
        if hi == 0:
            eigs.append(H[0, 0])
            break
        lo = hi
        while lo > 0:
            scale = abs(H[lo, lo]) + abs(H[lo - 1, lo - 1])
            if scale == 0.0:
                scale = np.abs(H).sum()
            if abs(H[lo, lo - 1]) <= eps * scale:
                H[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            eigs.append(H[hi, hi])
            hi -= 1
            its = 0
            continue
        if lo == hi - 1:
            eigs.extend(_eig2(H[lo, lo], H[lo, hi], H[hi, lo], H[hi, hi]))
            hi -= 2
            its = 0
            continue
        its += 1
        if its > 60 * K:
            raise ConvergenceError("Hessenberg QR did not converge", abs(H[hi, hi - 1]))
        if its % 11 == 0:
            mu = H[hi, hi] + abs(H[hi, hi - 1]) * (1.0 + 0.5j)  # exceptional shift
        else:
            e1, e2 = _eig2(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
            mu = e1 if abs(e1 - H[hi, hi]) < abs(e2 - H[hi, hi]) else e2
        W = H[lo:hi + 1, lo:hi + 1] - mu * np.eye(hi - lo + 1)
        m = W.shape[0]
        rots = []
        for k in range(m - 1):
            x, y = W[k, k], W[k + 1, k]
            r = np.hypot(abs(x), abs(y))
            if r == 0.0:
                c, s = 1.0, 0.0
            else:
                c, s = x / r, y / r
            G = np.array([[np.conj(c), np.conj(s)], [-s, c]])
            W[k:k + 2, :] = G @ W[k:k + 2, :]
            rots.append(G)
        for k, G in enumerate(rots):
            W[:, k:k + 2] = W[:, k:k + 2] @ G.conj().T
        H[lo:hi + 1, lo:hi + 1] = W + mu * np.eye(m)
    return np.array(eigs[::-1])


def lstsq_complex(A, b, rank_tol=RANK_TOL):
    """Least-squares solution of ``A x ~= b`` by pivoted Householder QR.

    Raises :class:`RankError` when ``|R_kk| <= rank_tol * |R_00|`` for some k.
    """
    A = np.array(A, dtype=np.complex128)
    b = np.array(b, dtype=np.complex128)
    if A.ndim != 2 or b.ndim != 1 or b.shape[0] != A.shape[0]:
        raise InvalidInputError(f"shape mismatch: A {A.shape}, b {b.shape}")
    m, k = A.shape
    if m < k:
        raise InvalidInputError(f"underdetermined system ({m} < {k})")
    perm = np.arange(k)
    colnorm = np.sum(np.abs(A) ** 2, axis=0)
    r00 = None
    for j in range(k):
        p = j + int(np.argmax(colnorm[j:]))
        if p != j:
            A[:, [j, p]] = A[:, [p, j]]
            colnorm[[j, p]] = colnorm[[p, j]]
            perm[[j, p]] = perm[[p, j]]
        x = A[j:, j]
        nx = np.linalg.norm(x)
        if r00 is None:
            r00 = nx
        if nx <= rank_tol * r00 or nx == 0.0:
            raise RankError("matrix is rank deficient", j)
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * nx
        v /= np.linalg.norm(v)
        A[j:, j:] -= 2.0 * np.outer(v, v.conj() @ A[j:, j:])
        b[j:] -= 2.0 * v * np.vdot(v, b[j:])
        colnorm[j + 1:] = np.sum(np.abs(A[j + 1:, j + 1:]) ** 2, axis=0)
    R = np.triu(A[:k, :k])
    y = b[:k].copy()
    for i in range(k - 1, -1, -1):
        y[i] = (y[i] - R[i, i + 1:] @ y[i + 1:]) / R[i, i]
    x = np.empty(k, dtype=np.complex128)
    x[perm] = y
    return x
