"""Comparison estimators: ESPRIT, ground-state QPE and multilevel MM-QCELS."""

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidInputError, RankError
from .estimator import EstimateResult, FilterGrid, filter_eval, peak_search, search_grid
from .linalg import hankel_operator, lstsq_complex, small_complex_eig, top_singular_subspace
from .sampler import REAL, generate_dataset, hadamard_shots

MAX_QPE_D = 24
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# -- ESPRIT -----------------------------------------------------------------

@dataclass(frozen=True)
class EspritConfig:
    T: float
    K: int = 2
    shots_per_node: int = 1
    tol: float = 1e-10
    max_iter: int = 500

    def __post_init__(self):
        if self.K < 1 or self.shots_per_node < 1:
            raise InvalidInputError("K and shots_per_node must be >= 1")
        if self.K > (self.N - 1) // 2:
            raise InvalidInputError(f"K={self.K} too large for N={self.N}")

    @property
    def N(self):
        """floor(T), decremented to the nearest odd integer."""
        n = int(math.floor(self.T))
        return n - 1 if n % 2 == 0 else n


def esprit_phases(z, K, tol=1e-10, max_iter=500):
    """ESPRIT on samples z_0..z_{N-1} at unit spacing (N odd); returns angles of U1^+ U0."""
    z = np.asarray(z, dtype=np.complex128)
    size = (z.size + 1) // 2
    matmat, rmatmat = hankel_operator(z, size, size)
    U = top_singular_subspace(matmat, rmatmat, size, size, K, tol=tol, max_iter=max_iter)
    U0, U1 = U[:-1], U[1:]
    # U1^+ U0 column by column; U1 has (nearly) orthonormal columns so the solve is well posed
    Phi = np.column_stack([lstsq_complex(U1, U0[:, k]) for k in range(K)])
    mu = small_complex_eig(Phi)
    # H[i, j] = sum p e^{-i lam (i+j)} gives mu = e^{+i lam}, pinned by the noiseless oracle
    return np.sort(np.angle(mu))


def esprit_cost(N, shots_per_node=1):
    """(T_max, T_total) for unit-spaced samples t_n = n, 0 <= n <= N."""
    return float(N), float(shots_per_node * N * (N + 1) // 2)


def esprit_run(model, config, rng):
    N = config.N
    t = np.arange(N + 1, dtype=np.float64)
    shots = hadamard_shots(model, np.repeat(t, config.shots_per_node), rng)
    z = shots.reshape(N + 1, config.shots_per_node).mean(axis=1)
    thetas = esprit_phases(z[:N], config.K, config.tol, config.max_iter)
    T_max, T_total = esprit_cost(N, config.shots_per_node)
    return EstimateResult(thetas, T_max, T_total, "esprit", asdict(config))


# -- QPE --------------------------------------------------------------------

@dataclass(frozen=True)
class QpeConfig:
    d: int
    n_samples: int = 15

    def __post_init__(self):
        if self.d < 1 or self.n_samples < 1:
            raise InvalidInputError("need d >= 1 and n_samples >= 1")
        if self.d > MAX_QPE_D:
            raise InvalidInputError(f"d={self.d} exceeds the table limit {MAX_QPE_D}")

    @classmethod
    def for_model(cls, model, T, rule="round"):
        """d = rule(log2 T) and n_samples = ceil(6/p_1), p_1 the overlap of the lowest dominant level."""
        rounding = {"round": round, "floor": math.floor, "ceil": math.ceil}[rule]
        d = max(1, int(rounding(math.log2(T))))
        p1 = float(model.overlaps[model.dominant[0]])
        return cls(d, math.ceil(6.0 / p1 - 1e-12))


def fejer_kernel(theta, Nt):
    """sin^2(theta Nt/2) / (Nt^2 sin^2(theta/2)), equal to 1 at theta = 0 mod 2 pi."""
    theta = np.asarray(theta, dtype=np.float64)
    x = np.mod(theta + math.pi, 2.0 * math.pi) - math.pi
    den = np.sin(x / 2.0)
    small = np.abs(den) < 1e-15
    den = np.where(small, 1.0, den)
    out = np.sin(x * Nt / 2.0) ** 2 / (Nt * Nt * den * den)
    return np.where(small, 1.0, out)


def qpe_outcomes(d):
    Nt = 1 << d
    return np.arange(-Nt // 2, Nt // 2)


def qpe_distribution(model, d):
    """P(k) for k = -N_t/2 .. N_t/2 - 1."""
    if not 1 <= d <= MAX_QPE_D:
        raise InvalidInputError(f"d={d} outside [1, {MAX_QPE_D}]")
    Nt = 1 << d
    grid = 2.0 * math.pi * qpe_outcomes(d) / Nt
    P = np.zeros(Nt)
    for lam, p in zip(model.eigenvalues, model.overlaps):
        if p > 0:
            P += p * fejer_kernel(grid - lam, Nt)
    return P


def qpe_run(model, config, rng):
    """2 pi min_i k_i / N_t over n_samples draws of the outcome distribution."""
    Nt = 1 << config.d
    P = qpe_distribution(model, config.d)
    cdf = np.cumsum(P)
    idx = np.searchsorted(cdf, rng.random(config.n_samples) * cdf[-1], side="right")
    k = qpe_outcomes(config.d)[np.minimum(idx, Nt - 1)]
    est = 2.0 * math.pi * k.min() / Nt
    return EstimateResult(np.array([est]), float(Nt), float(config.n_samples * Nt), "qpe", asdict(config))


# -- MM-QCELS ---------------------------------------------------------------

@dataclass(frozen=True)
class QcelsConfig:
    T: float
    K: int = 2
    T0: float = 100.0
    N0: int = 1000
    Nj: int = 500
    sigma: float = 1.0
    alpha: float = 5.0
    q: float = 0.05
    passes: int = 3
    scan: int = 33
    xtol: float = 1e-10

    def __post_init__(self):
        for name in ("T", "K", "T0", "N0", "Nj", "sigma", "alpha", "q", "passes", "scan"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive")
        if self.T < self.T0:
            raise InvalidInputError(f"target T={self.T} below T0={self.T0}")

    @property
    def levels(self):
        """Largest L with T0 * 2^(L-1) <= T."""
        return int(math.floor(math.log2(self.T / self.T0) + 1e-12)) + 1

    def depth(self, j):
        return self.T0 * 2.0**j


def _design(t, theta):
    return np.exp(-1j * np.outer(t, theta))


def qcels_fit(dataset, theta):
    """(loss, r) with r the least-squares amplitudes for fixed phases."""
    A = _design(dataset.t, np.atleast_1d(theta))
    r = lstsq_complex(A, dataset.z)
    return float(np.mean(np.abs(dataset.z - A @ r) ** 2)), r


def qcels_loss(dataset, r, theta):
    """(1/N) sum_n |Z_n - sum_k r_k exp(-i theta_k t_n)|^2."""
    r = np.atleast_1d(np.asarray(r, dtype=np.complex128))
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    if r.shape != theta.shape:
        raise InvalidInputError("r and theta must have the same length")
    resid = dataset.z - _design(dataset.t, theta) @ r
    return float(np.mean(np.abs(resid) ** 2))


def _projected_loss(dataset, theta):
    try:
        return qcels_fit(dataset, theta)[0]
    except RankError:
        return math.inf


def _golden(f, a, b, xtol):
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _refine(dataset, theta, centers, half, config):
    """Coordinate descent: per phase, scan the trust window then golden-section the best bracket."""
    theta = np.array(theta, dtype=np.float64)
    best = _projected_loss(dataset, theta)
    for _ in range(config.passes):
        for k in range(theta.size):
            lo, hi = centers[k] - half, centers[k] + half

            def f(x, k=k):
                trial = theta.copy()
                trial[k] = x
                return _projected_loss(dataset, trial)

            xs = np.linspace(lo, hi, config.scan)
            fs = np.array([f(x) for x in xs])
            i = int(np.argmin(fs))
            x, fx = _golden(f, xs[max(i - 1, 0)], xs[min(i + 1, xs.size - 1)], config.xtol)
            if fs[i] < fx:
                x, fx = xs[i], fs[i]
            if fx < best:
                theta[k], best = x, fx
    return theta, best


def mmqcels_run(model, config, rng):
    """Multilevel variable-projection least squares over a doubling depth schedule."""
    flags = []
    T_max, T_total = 0.0, 0.0
    theta = None
    prev_T = None
    for j in range(config.levels):
        T = config.depth(j)
        data = generate_dataset(model, config.N0 if j == 0 else config.Nj, T, config.sigma, rng, mode=REAL)
        T_max = max(T_max, data.T_max)
        T_total += data.T_total
        if j == 0:
            grid = search_grid(T, config.q)
            fg = FilterGrid(grid.thetas, filter_eval(data, grid), T, config.q)
            theta = peak_search(fg, config.K, config.alpha, T)
            half = math.pi / T
        else:
            half = math.pi / prev_T
        centers = theta.copy()
        theta, loss = _refine(data, theta, centers, half, config)
        if not math.isfinite(loss):
            flags.append(f"level {j}: no full-rank fit in the trust region")
        elif np.any(np.abs(theta - centers) >= half * (1 - 1e-6)):
            flags.append(f"level {j}: optimum pinned to the trust-region edge")
        prev_T = T
    return EstimateResult(np.sort(theta), T_max, T_total, "mmqcels", asdict(config),
                          tuple(("degraded: " + f) for f in flags))
