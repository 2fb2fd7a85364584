"""Spectral models: eigenvalue/overlap pairs plus the dominant index set.

Every estimator in the package consumes only these pairs; no state vector
is ever materialized. The builders reproduce the three experiment families
(random toy spectrum, periodic transverse-field Ising chain, open Hubbard
chain) and rescale spectra into [-pi/4, pi/4].
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, ModelConditionError
from .linalg import sym_eig

SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SpectralModel:
    """Eigenvalues (ascending, radians), overlaps and dominant indices.

    Construction rejects models that break the sufficiently dominant
    condition ``p_min > p_tail``.
    """

    eigenvalues: np.ndarray
    overlaps: np.ndarray
    dominant: tuple
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=np.float64)
        p = np.array(self.overlaps, dtype=np.float64)
        dom = tuple(int(i) for i in self.dominant)
        if lam.ndim != 1 or lam.size == 0 or lam.shape != p.shape:
            raise InvalidInputError("eigenvalues and overlaps must be equal-length 1-D lists")
        if np.any(np.diff(lam) < 0):
            raise InvalidInputError("eigenvalues must be ascending")
        if np.any(np.abs(lam) > math.pi):
            raise InvalidInputError("eigenvalues must lie in [-pi, pi]")
        if np.any(p < 0):
            raise InvalidInputError("overlaps must be nonnegative")
        if abs(p.sum() - 1.0) > SUM_TOL:
            raise InvalidInputError(f"overlaps sum to {p.sum()!r}, not 1")
        if not dom or len(set(dom)) != len(dom) or min(dom) < 0 or max(dom) >= lam.size:
            raise InvalidInputError(f"invalid dominant index set {dom}")
        lam.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "overlaps", p)
        object.__setattr__(self, "dominant", tuple(sorted(dom)))
        if not self.p_min > self.p_tail:
            raise ModelConditionError(f"p_min={self.p_min:.6g} does not exceed p_tail={self.p_tail:.6g}")

    @property
    def p_min(self):
        return float(min(self.overlaps[i] for i in self.dominant))

    @property
    def p_tail(self):
        mask = np.ones(self.overlaps.size, dtype=bool)
        mask[list(self.dominant)] = False
        return float(self.overlaps[mask].sum())

    @property
    def dominant_eigenvalues(self):
        return self.eigenvalues[list(self.dominant)]

    def to_dict(self):
        return {
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "overlaps": [float(x) for x in self.overlaps],
            "dominant": list(self.dominant),
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["eigenvalues"], d["overlaps"], tuple(d["dominant"]), dict(d.get("provenance", {})))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class GapReport:
    delta_dom: float
    delta: float
    p_min: float
    p_tail: float


def gap_report(model):
    lam = model.eigenvalues
    dom = model.dominant
    delta_dom = math.inf
    for a in dom:
        for b in dom:
            if a != b:
                delta_dom = min(delta_dom, abs(lam[a] - lam[b]))
    delta = math.inf
    for a in dom:
        for j in range(lam.size):
            if j != a:
                delta = min(delta, abs(lam[a] - lam[j]))
    return GapReport(float(delta_dom), float(delta), model.p_min, model.p_tail)


def exact_signal(model, t):
    """sum_m p_m exp(-i lambda_m t); ``t`` may be a scalar or an array."""
    t = np.asarray(t, dtype=np.float64)
    out = np.exp(-1j * np.multiply.outer(t, model.eigenvalues)) @ model.overlaps
    return complex(out) if out.ndim == 0 else out


def normalize_spectrum(eigenvalues):
    """Rescale so the largest magnitude becomes pi/4."""
    lam = np.asarray(eigenvalues, dtype=np.float64)
    if lam.size == 0:
        raise InvalidInputError("empty spectrum")
    scale = np.max(np.abs(lam))
    if scale == 0.0:
        raise ZeroDivisionError("cannot normalize an all-zero spectrum")
    out = np.pi * lam / (4.0 * scale)
    # pi*s/(4s) can round past pi/4; clipping is monotone so order survives
    np.clip(out, -math.pi / 4, math.pi / 4, out=out)
    extreme = np.abs(lam) == scale
    out[extreme] = np.copysign(math.pi / 4, lam[extreme])
    return out


def assign_overlaps(eigenvalues, dominant_indices, dominant_weights, seed, provenance=None):
    """Fix p on the dominant indices and spread the rest by a uniform Dirichlet draw."""
    lam = np.asarray(eigenvalues, dtype=np.float64)
    dom = [int(i) for i in dominant_indices]
    w = np.asarray(dominant_weights, dtype=np.float64)
    if len(dom) != w.size:
        raise InvalidInputError("one weight per dominant index is required")
    if len(set(dom)) != len(dom) or min(dom) < 0 or max(dom) >= lam.size:
        raise InvalidInputError(f"invalid dominant indices {dom}")
    if np.any(w <= 0):
        raise InvalidInputError("dominant weights must be positive")
    residual = 1.0 - w.sum()
    tail = [i for i in range(lam.size) if i not in set(dom)]
    if residual < -SUM_TOL or (residual > 0 and not tail):
        raise InvalidInputError(f"dominant weights sum to {w.sum()!r}; need < 1 with tail modes present")
    p = np.zeros(lam.size)
    p[dom] = w
    if tail:
        rng = np.random.default_rng(seed)
        e = rng.exponential(size=len(tail))
        p[tail] = max(residual, 0.0) * e / e.sum()
    return SpectralModel(lam, p, tuple(dom), dict(provenance or {}))


def build_tfim(L, g):
    """Dense periodic transverse-field Ising Hamiltonian; qubit 1 is the most significant bit."""
    if not 2 <= L <= 12:
        raise InvalidInputError(f"L={L} outside [2, 12]")
    dim = 1 << L
    states = np.arange(dim)
    spins = 1 - 2 * ((states[:, None] >> (L - 1 - np.arange(L))[None, :]) & 1)
    H = np.zeros((dim, dim))
    bonds = [(i, i + 1) for i in range(L - 1)] + [(L - 1, 0)]
    diag = -sum(spins[:, i] * spins[:, j] for i, j in bonds)
    H[states, states] = diag
    for i in range(L):
        H[states, states ^ (1 << (L - 1 - i))] -= g
    return H


def build_hubbard(L, t, U):
    """Dense open-chain Hubbard Hamiltonian under Jordan-Wigner.

    Mode order: spin-up sites 0..L-1, then spin-down sites 0..L-1; mode m
    sits on bit ``2L-1-m``.
    """
    if not 2 <= L <= 5:
        raise InvalidInputError(f"L={L} outside [2, 5]")
    nmodes = 2 * L
    dim = 1 << nmodes

    def occ(state, m):
        return (state >> (nmodes - 1 - m)) & 1

    H = np.zeros((dim, dim))
    pairs = [(s * L + j, s * L + j + 1) for s in range(2) for j in range(L - 1)]
    for state in range(dim):
        n = [occ(state, m) for m in range(nmodes)]
        H[state, state] = U * sum((n[j] - 0.5) * (n[L + j] - 0.5) for j in range(L))
        for a, b in pairs:
            for p, q in ((a, b), (b, a)):
                # c_p^dag c_q
                if n[q] == 1 and n[p] == 0:
                    lo, hi = min(p, q), max(p, q)
                    sign = -1 if sum(n[lo + 1:hi]) % 2 else 1
                    new = state ^ (1 << (nmodes - 1 - q)) ^ (1 << (nmodes - 1 - p))
                    H[new, state] += -t * sign
    return H


def merge_degenerate(eigenvalues, tol=1e-9):
    """Collapse eigenvalues closer than ``tol`` (relative to the spread) into one level."""
    lam = np.sort(np.asarray(eigenvalues, dtype=np.float64))
    scale = max(np.max(np.abs(lam)), 1e-300)
    members = [[lam[0]]]
    for x in lam[1:]:
        if x - members[-1][-1] <= tol * scale:
            members[-1].append(x)
        else:
            members.append([x])
    return np.array([np.mean(m) for m in members])


def model_from_hamiltonian(H, n_dominant=2, weights=(0.4, 0.4), seed=0, provenance=None):
    """Diagonalize, normalize, merge degeneracies and put weight on the lowest levels."""
    w, _ = sym_eig(H)
    lam = normalize_spectrum(merge_degenerate(w))
    return assign_overlaps(lam, range(n_dominant), weights, seed, provenance)


def tfim_model(L=8, g=4.0, seed=0):
    return model_from_hamiltonian(
        build_tfim(L, g), seed=seed, provenance={"builder": "tfim", "L": L, "g": g, "seed": seed}
    )


def hubbard_model(L=4, t=1.0, U=10.0, seed=0):
    return model_from_hamiltonian(
        build_hubbard(L, t, U), seed=seed,
        provenance={"builder": "hubbard", "L": L, "t": t, "U": U, "seed": seed},
    )


def build_toy(M=20, gap=1e-3, seed=0):
    """Random spectrum with an isolated near-degenerate dominant pair."""
    if M < 3 or not 0 < gap < 1:
        raise InvalidInputError(f"need M >= 3 and 0 < gap < 1 (got M={M}, gap={gap})")
    rng = np.random.default_rng(seed)
    hi = min(-0.1, math.pi / 4 - 0.1 - gap)
    if hi <= -math.pi / 4:
        raise InvalidInputError(f"gap {gap} leaves no room for the tail")
    lam1 = rng.uniform(-math.pi / 4, hi)
    lam2 = lam1 + gap
    rest = np.sort(rng.uniform(lam2 + 0.1, math.pi / 4, size=M - 2))
    lam = normalize_spectrum(np.concatenate([[lam1, lam2], rest]))
    return assign_overlaps(
        lam, (0, 1), (0.4, 0.4), int(rng.integers(2**63)),
        provenance={"builder": "toy", "M": M, "gap": gap, "seed": seed},
    )
