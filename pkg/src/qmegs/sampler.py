"""Classical simulation of single-shot Hadamard-test data.

Times come from the truncated Gaussian (real powers) or from the
periodic-Gaussian coefficient table (integer powers); each time yields one
X and one Y measurement, so ``z = X + iY`` is an unbiased estimate of the
signal at that time.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidInputError
from .spectrum import exact_signal

REAL = "real"
INTEGER = "integer"
_W_TERMS = 20


def _check_positive(**kw):
    for k, v in kw.items():
        if not v > 0:
            raise InvalidInputError(f"{k} must be positive, got {v}")


def sample_time(T, sigma, rng):
    """One draw from the truncated Gaussian; mass beyond sigma*T lands on 0."""
    return float(sample_times(T, sigma, 1, rng)[0])


def sample_times(T, sigma, n, rng):
    _check_positive(T=T, sigma=sigma)
    s = rng.normal(0.0, T, size=n)
    return np.where(np.abs(s) <= sigma * T, s, 0.0)


def _bernoulli_pm1(prob_plus, u):
    return np.where(u < prob_plus, 1.0, -1.0)


def hadamard_shots(model, t, rng):
    """Vectorized single shots at times ``t`` (shot at t == 0 is exactly 1)."""
    t = np.asarray(t, dtype=np.float64)
    sig = np.atleast_1d(exact_signal(model, t))
    u = rng.random((t.size, 2))
    x = _bernoulli_pm1((1.0 + sig.real) / 2.0, u[:, 0])
    y = _bernoulli_pm1((1.0 + sig.imag) / 2.0, u[:, 1])
    z = x + 1j * y
    z[t.ravel() == 0] = 1.0
    return z.reshape(t.shape)


def hadamard_shot(model, t, rng):
    # negative t simulated directly: Z(-t) = conj(Z(t)), the Bernoulli recipe is unchanged
    return complex(hadamard_shots(model, np.array([t]), rng)[0])


@lru_cache(maxsize=64)
def integer_time_table(T, sigma):
    """Support ``k`` and probabilities ``a(k)`` of the integer-power time distribution."""
    if not T >= 1:
        raise InvalidInputError(f"T must be >= 1, got {T}")
    _check_positive(sigma=sigma)
    j = np.arange(-_W_TERMS, _W_TERMS + 1)
    W = 1.0 / np.sum(np.exp(-((2 * np.pi * j) ** 2) * T * T / 2.0))
    kmax = int(math.floor(sigma * T))

    def coeff(k):
        return W / (math.sqrt(2 * math.pi) * T) * np.exp(-(k.astype(np.float64) ** 2) / (2.0 * T * T))

    ks = np.arange(-kmax, kmax + 1)
    probs = coeff(ks)
    # fold the mass outside the support onto k = 0
    far = np.arange(kmax + 1, kmax + 1 + int(40 * T) + 50)
    probs[kmax] += 2.0 * coeff(far).sum()
    probs /= probs.sum()
    ks.setflags(write=False)
    probs.setflags(write=False)
    return ks, probs


def sample_integer_times(T, sigma, n, rng):
    ks, probs = integer_time_table(float(T), float(sigma))
    cdf = np.cumsum(probs)
    idx = np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right")
    return ks[np.minimum(idx, ks.size - 1)].astype(np.float64)


def sample_integer_time(T, sigma, rng):
    return int(sample_integer_times(T, sigma, 1, rng)[0])


@dataclass(frozen=True, eq=False)
class Dataset:
    t: np.ndarray
    z: np.ndarray
    T: float
    sigma: float
    mode: str = REAL

    @property
    def N(self):
        return self.t.size

    @property
    def T_max(self):
        return float(np.max(np.abs(self.t))) if self.t.size else 0.0

    @property
    def T_total(self):
        return float(np.sum(np.abs(self.t)))

    def to_text(self, path):
        header = f"T={self.T!r} sigma={self.sigma!r} mode={self.mode}\nt re_z im_z"
        np.savetxt(path, np.column_stack([self.t, self.z.real, self.z.imag]), fmt="%.17g", header=header)

    @classmethod
    def from_text(cls, path):
        with open(path) as fh:
            meta = dict(kv.split("=") for kv in fh.readline().lstrip("# ").split())
        arr = np.loadtxt(path, ndmin=2)
        return cls(arr[:, 0], arr[:, 1] + 1j * arr[:, 2], float(meta["T"]), float(meta["sigma"]), meta["mode"])


def generate_dataset(model, N, T, sigma, rng, mode=REAL):
    """N independent (t_n, Z_n) pairs."""
    if N < 1:
        raise InvalidInputError(f"N must be >= 1, got {N}")
    if mode == REAL:
        t = sample_times(T, sigma, N, rng)
    elif mode == INTEGER:
        t = sample_integer_times(T, sigma, N, rng)
    else:
        raise InvalidInputError(f"unknown mode {mode!r}")
    return Dataset(t, hadamard_shots(model, t, rng), float(T), float(sigma), mode)


def dataset_cost(dataset):
    """(T_max, T_total) of a dataset."""
    return dataset.T_max, dataset.T_total
