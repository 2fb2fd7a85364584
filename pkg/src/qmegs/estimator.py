"""Gaussian-filtered search for multiple dominant eigenvalues.

The estimator averages ``Z_n exp(i theta t_n)`` over the dataset on a
uniform grid of candidate phases, then repeatedly takes the grid argmax of
the modulus while blocking an open window of half-width ``alpha/T`` around
every peak already found.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _backend
from .errors import ExhaustionError, InvalidInputError, ModelConditionError
from .sampler import INTEGER, REAL, dataset_cost, generate_dataset

TWO_PI = 2.0 * math.pi
_W_TERMS = 20


def _is_integer_ratio(a, b):
    r = a / b
    return abs(r - round(r)) <= 1e-9 * max(1.0, r)


@dataclass(frozen=True)
class QmegsConfig:
    N: int = 500
    T: float = 200.0
    sigma: float = 1.0
    alpha: float = 5.0
    q: float = 0.05
    K: int = 2
    warnings: tuple = field(default=(), compare=False)

    def __post_init__(self):
        for name in ("N", "T", "sigma", "alpha", "q", "K"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive")
        if not self.q < self.alpha / 3:
            raise InvalidInputError(f"need q < alpha/3 (q={self.q}, alpha={self.alpha})")
        if not _is_integer_ratio(self.alpha, self.q):
            raise InvalidInputError(f"alpha/q = {self.alpha / self.q} is not an integer")

    @property
    def block_steps(self):
        """Grid steps spanned by one block half-width (alpha/q)."""
        return int(round(self.alpha / self.q))

    def to_dict(self):
        d = asdict(self)
        d["warnings"] = list(self.warnings)
        return d


@dataclass(frozen=True)
class Grid:
    """theta_j = start + j*step for 0 <= j < size."""

    start: float
    step: float
    size: int

    @property
    def thetas(self):
        return self.start + np.arange(self.size) * self.step


def search_grid(T, q):
    """Candidates -pi + j q/T for 0 <= j <= floor(2 pi T / q)."""
    J = int(math.floor(TWO_PI * T / q))
    return Grid(-math.pi, q / T, J + 1)


@dataclass(frozen=True, eq=False)
class FilterGrid:
    thetas: np.ndarray
    values: np.ndarray
    T: float
    q: float

    def to_csv(self, path):
        np.savetxt(path, np.column_stack([self.thetas, self.values]), fmt="%.17g",
                   delimiter=",", header="theta,G", comments="")


@dataclass(frozen=True, eq=False)
class EstimateResult:
    estimates: np.ndarray
    T_max: float
    T_total: float
    algorithm: str
    config: dict
    flags: tuple = ()
    grid: FilterGrid = None


def filter_average(dataset, thetas):
    """Complex average (1/N) sum_n Z_n exp(i theta t_n) at each theta."""
    if dataset.N == 0:
        raise InvalidInputError("empty dataset")
    t = np.ascontiguousarray(dataset.t, dtype=np.float64)
    z = np.ascontiguousarray(dataset.z, dtype=np.complex128)
    if isinstance(thetas, Grid):
        return _backend.impl.filter_sum(t, z, thetas.start, thetas.step, thetas.size)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=np.float64))
    if thetas.size == 0:
        raise InvalidInputError("empty grid")
    return np.array([np.sum(z * np.exp(1j * th * t)) / t.size for th in thetas])


def filter_eval(dataset, thetas):
    """G(theta) = |(1/N) sum_n Z_n exp(i theta t_n)|; ``thetas`` is an array or a :class:`Grid`."""
    return np.abs(filter_average(dataset, thetas))


def filter_oracle(model, theta, T, tail_only=False):
    """Noise-free untruncated filter sum_m p_m exp(-T^2 (theta - lambda_m)^2 / 2)."""
    lam = model.eigenvalues
    p = model.overlaps
    if tail_only:
        mask = np.ones(lam.size, dtype=bool)
        mask[list(model.dominant)] = False
        lam, p = lam[mask], p[mask]
    theta = np.asarray(theta, dtype=np.float64)
    out = np.exp(-0.5 * T * T * np.subtract.outer(theta, lam) ** 2) @ p
    return float(out) if out.ndim == 0 else out


def filter_tail(model, theta, T):
    return filter_oracle(model, theta, T, tail_only=True)


def _blocked_argmax(values, K, m, step, half, wrap):
    n = values.size
    idx = np.arange(n)
    avail = np.ones(n, dtype=bool)
    found = []
    for _ in range(K):
        if not avail.any():
            raise ExhaustionError(f"grid ran out of eligible points before {K} peaks", found)
        j = int(np.argmax(np.where(avail, values, -np.inf)))
        found.append(j)
        dist = np.abs(idx - j)
        avail &= dist >= m
        if wrap:
            # the same open window measured the other way round the circle
            avail &= (TWO_PI - dist * step) >= half * (1 - 1e-12)
    return np.array(found, dtype=np.int64)


def peak_search(grid, K, alpha, T, wrap=False):
    """Blocked iterative argmax over a :class:`FilterGrid`; returns the K peak phases.

    A peak at index j blocks every index i with |i - j| < alpha/q, which is the
    open window of half-width alpha/T (its boundary points stay eligible).
    With ``wrap`` the window also reaches across the +-pi seam. Ties go to
    the lowest index.
    """
    if K < 1:
        raise InvalidInputError("K must be >= 1")
    if not _is_integer_ratio(alpha, grid.q):
        raise InvalidInputError("alpha/q must be an integer")
    values = np.asarray(grid.values, dtype=np.float64)
    m = int(round(alpha / grid.q))
    idx = _blocked_argmax(values, K, m, grid.q / T, alpha / T, wrap)
    return np.asarray(grid.thetas)[idx]


def _qmegs(model, config, rng, mode, keep_grid):
    data = generate_dataset(model, config.N, config.T, config.sigma, rng, mode=mode)
    grid = search_grid(config.T, config.q)
    fg = FilterGrid(grid.thetas, filter_eval(data, grid), config.T, config.q)
    thetas = peak_search(fg, config.K, config.alpha, config.T, wrap=(mode == INTEGER))
    T_max, T_total = dataset_cost(data)
    if not keep_grid:
        fg = None
    tag = "qmegs" if mode == REAL else "qmegs-int"
    return EstimateResult(thetas, T_max, T_total, tag, config.to_dict(), config.warnings, fg)


def qmegs_run(model, config, rng, keep_grid=False):
    """Data generation, filter evaluation on the search grid, blocked peak search."""
    return _qmegs(model, config, rng, REAL, keep_grid)


def qmegs_int_run(model, config, rng, keep_grid=False):
    """Integer-power variant: times drawn from the periodic-Gaussian table, blocking mod 2 pi."""
    if config.T < 1:
        raise InvalidInputError("integer-power mode needs T >= 1")
    return _qmegs(model, config, rng, INTEGER, keep_grid)


def _image_sum(ax, T):
    """R(x) = sum_{j>=1} [e^{-(x+2pi j)^2 T^2/2} + e^{-(x-2pi j)^2 T^2/2}] / e^{-x^2 T^2/2} for |x| <= pi."""
    out = np.zeros_like(ax)
    for j in range(1, _W_TERMS + 1):
        a = -2.0 * math.pi**2 * j * j * T * T
        b = TWO_PI * j * T * T * ax
        if a < -700.0:
            # e^a underflows; the split form cannot overflow since b <= |a|
            out += np.exp(a + b) + np.exp(a - b)
        else:
            out += 2.0 * math.exp(a) * np.cosh(b)
    return out


def _reduce(x):
    """|x| folded into [0, pi]; folding |x| rather than x keeps phi_p exactly even."""
    return np.abs(np.mod(np.abs(np.asarray(x, dtype=np.float64)) + math.pi, TWO_PI) - math.pi)


def periodic_gaussian_excess(x, T):
    """log(phi_p(x) / exp(-x^2 T^2/2)) = log((1 + R(x)) / (1 + R(0))) with |x| reduced to [0, pi]."""
    if T < 1:
        raise InvalidInputError(f"periodic Gaussian bounds need T >= 1, got {T}")
    x = _reduce(x)
    out = np.log1p(_image_sum(x, T)) - np.log1p(_image_sum(np.zeros(1), T)[0])
    return float(out) if out.ndim == 0 else out


def log_periodic_gaussian(x, T):
    """log phi_p(x), free of underflow."""
    excess = periodic_gaussian_excess(x, T)
    x = _reduce(x)
    out = -0.5 * T * T * x * x + excess
    return float(out) if out.ndim == 0 else out


def periodic_gaussian(x, T):
    """2 pi-periodic Gaussian W sum_j exp(-(x + 2 pi j)^2 T^2 / 2), normalized so phi_p(0) = 1 (T >= 1)."""
    return np.exp(log_periodic_gaussian(x, T))


def wrapped_distance(u, v):
    """min(|u - v mod 2pi|, |v - u mod 2pi|), in [0, pi]."""
    d = np.mod(np.asarray(u, dtype=np.float64) - np.asarray(v, dtype=np.float64), TWO_PI)
    out = np.minimum(d, TWO_PI - d)
    return float(out) if out.ndim == 0 else out


def _snap_q(alpha, q_bound):
    """Largest q <= q_bound with alpha/q an integer >= 4 (so q < alpha/3)."""
    steps = max(4, math.ceil(alpha / q_bound - 1e-12))
    return alpha / steps


def theorem_params(regime, p_min, p_tail, epsilon, eta, n_dominant=2, delta_dom=None,
                   delta=None, zeta=None, K=None, c1=5.0, c2=8.0, c3=6.0):
    """Parameters from the lower/upper bounds of the coverage theorems.

    ``regime`` is "general", "gapped-dominant" (needs ``delta_dom``) or
    "gapped-tail" (needs ``delta``; ``zeta`` defaults to p_min/8). The
    constants c1 (alpha, sigma), c2 (samples) and c3 (gap depth) are
    defaults, not derived values.
    """
    if not p_min > p_tail:
        raise ModelConditionError(f"p_min={p_min} does not exceed p_tail={p_tail}")
    if epsilon <= 0 or not 0 < eta < 1:
        raise InvalidInputError("need epsilon > 0 and 0 < eta < 1")
    warnings = []
    margin = p_min - p_tail
    if margin < 1e-6:
        warnings.append(f"p_min - p_tail = {margin:.3g}: sample count is huge")
    root = c1 * max(1.0, math.sqrt(max(0.0, math.log(1.0 / margin))))
    alpha = sigma = root
    q_bound = min(math.sqrt(2.0 * math.log(p_min / (p_tail + margin / 2.0))), alpha / 3)
    T = alpha / epsilon
    scale = margin
    if regime == "general":
        pass
    elif regime == "gapped-dominant":
        if delta_dom is None or delta_dom <= 0:
            raise InvalidInputError("gapped-dominant regime needs delta_dom > 0")
        if p_tail > 0:
            scale = min(margin / p_tail, 1.0) * p_tail
        else:
            scale = p_min
        T = max(T, c3 * alpha / delta_dom)
    elif regime == "gapped-tail":
        if delta is None or delta <= 0:
            raise InvalidInputError("gapped-tail regime needs delta > 0")
        zeta = p_min / 8.0 if zeta is None else zeta
        if not 0 < zeta < p_min / 4:
            raise InvalidInputError(f"zeta must lie in (0, p_min/4), got {zeta}")
        scale = zeta
        T = max(T, c3 * alpha / delta)
    else:
        raise InvalidInputError(f"unknown regime {regime!r}")
    q = _snap_q(alpha, q_bound)
    N = math.ceil(c2 / scale**2 * math.log((T / q + n_dominant) / eta))
    return QmegsConfig(N=N, T=T, sigma=sigma, alpha=alpha, q=q, K=K or n_dominant,
                       warnings=tuple(warnings))
