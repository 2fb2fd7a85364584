"""Error-versus-cost sweeps over T = base * factor^n, with CSV and SVG output."""

import csv
import json
import math
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache

import numpy as np

from . import baselines, estimator, spectrum
from .errors import InvalidInputError

CSV_HEADER = ("algorithm", "T", "trial", "error", "T_max", "T_total", "metric")
ALGORITHMS = ("qmegs", "qmegs-int", "esprit", "qpe", "mmqcels")
ESPRIT_N_MAX = 5

# fixed palette so plots are byte-stable
_COLORS = {
    "qmegs": "#1f77b4",
    "qmegs-int": "#17becf",
    "esprit": "#2ca02c",
    "qpe": "#d62728",
    "mmqcels": "#ff7f0e",
}


def maxmin_error(estimates, model, wrapped=False):
    """max over dominant lambda of the distance to the nearest estimate."""
    est = np.atleast_1d(np.asarray(estimates, dtype=np.float64))
    if est.size == 0:
        raise InvalidInputError("no estimates")
    lam = model.dominant_eigenvalues
    if wrapped:
        d = estimator.wrapped_distance(est[:, None], lam[None, :])
    else:
        d = np.abs(est[:, None] - lam[None, :])
    return float(np.max(np.min(d, axis=0)))


def single_error(estimate, model):
    """|estimate - lowest dominant eigenvalue|, the QPE metric."""
    return abs(float(np.atleast_1d(estimate)[0]) - float(model.dominant_eigenvalues.min()))


def build_model(spec):
    """Model from a builder spec such as {"builder": "tfim", "L": 8, "g": 4.0, "seed": 0}."""
    return _build_cached(json.dumps(spec, sort_keys=True))


@lru_cache(maxsize=16)
def _build_cached(key):
    # models are immutable, so one per process per spec is enough
    spec = json.loads(key)
    builder = spec.pop("builder", None)
    if builder == "toy":
        return spectrum.build_toy(**spec)
    if builder == "tfim":
        return spectrum.tfim_model(**spec)
    if builder == "hubbard":
        return spectrum.hubbard_model(**spec)
    if builder == "file":
        return spectrum.SpectralModel.load(spec["path"])
    raise InvalidInputError(f"unknown model builder {builder!r}")


def default_params(algo, T, model, depth_rule="round"):
    """Per-algorithm defaults of the reference experiments at depth T."""
    if algo in ("qmegs", "qmegs-int"):
        return estimator.QmegsConfig(N=500, T=T, sigma=1.0, alpha=5.0, q=0.05, K=2)
    if algo == "esprit":
        return baselines.EspritConfig(T=T, K=2)
    if algo == "qpe":
        return baselines.QpeConfig.for_model(model, T, depth_rule)
    if algo == "mmqcels":
        return baselines.QcelsConfig(T=T, K=2)
    raise InvalidInputError(f"unknown algorithm {algo!r}")


def make_config(algo, T, model, overrides=None):
    """Defaults at depth T with per-field overrides; qpe also takes ``depth_rule``."""
    overrides = dict(overrides or {})
    base = default_params(algo, T, model, overrides.pop("depth_rule", "round"))
    if not overrides:
        return base
    names = {f.name for f in fields(base)}
    unknown = set(overrides) - names
    if unknown:
        raise InvalidInputError(f"unknown {algo} parameters: {sorted(unknown)}")
    return type(base)(**{**asdict(base), **overrides})


def run_algorithm(algo, model, config, rng, **kw):
    """Dispatch one run; returns (EstimateResult, error, metric tag)."""
    if algo == "qmegs":
        res = estimator.qmegs_run(model, config, rng, **kw)
    elif algo == "qmegs-int":
        res = estimator.qmegs_int_run(model, config, rng, **kw)
        return res, maxmin_error(res.estimates, model, wrapped=True), "maxmin-wrapped"
    elif algo == "esprit":
        res = baselines.esprit_run(model, config, rng)
    elif algo == "qpe":
        res = baselines.qpe_run(model, config, rng)
        return res, single_error(res.estimates, model), "single"
    elif algo == "mmqcels":
        res = baselines.mmqcels_run(model, config, rng)
    else:
        raise InvalidInputError(f"unknown algorithm {algo!r}")
    return res, maxmin_error(res.estimates, model), "maxmin"


def algo_id(name):
    """Stable integer id; Python's hash() is salted per process."""
    return zlib.crc32(name.encode())


def trial_rng(master_seed, algo, n, trial):
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), algo_id(algo), int(n), int(trial)]))


@dataclass(frozen=True)
class SweepRecord:
    algorithm: str
    T: float
    trial: int
    error: float
    T_max: float
    T_total: float
    metric: str = "maxmin"

    def __post_init__(self):
        if self.error < 0:
            raise InvalidInputError("error must be nonnegative")


@dataclass(frozen=True)
class ExperimentConfig:
    model: dict
    algorithms: tuple = ("qmegs",)
    base: float = 100.0
    factor: float = 2.0
    count: int = 5
    trials: int = 20
    master_seed: int = 0
    out_dir: str = "."
    esprit_n_max: int = ESPRIT_N_MAX
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.count < 1 or self.trials < 1:
            raise InvalidInputError("schedule and trials must be nonempty")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad or not self.algorithms:
            raise InvalidInputError(f"unknown or missing algorithms: {bad}")
        object.__setattr__(self, "algorithms", tuple(self.algorithms))

    def schedule(self, algo=None):
        """(n, T) pairs, n = 1..count; ESPRIT stops at esprit_n_max."""
        top = self.count
        if algo == "esprit":
            top = min(top, self.esprit_n_max)
        return [(n, self.base * self.factor**n) for n in range(1, top + 1)]


def _run_task(task):
    model_spec, algo, n, T, trial, seed, overrides = task
    model = build_model(model_spec)
    try:
        cfg = make_config(algo, T, model, overrides)
        res, err, metric = run_algorithm(algo, model, cfg, trial_rng(seed, algo, n, trial))
        return SweepRecord(algo, float(T), trial, err, res.T_max, res.T_total, metric)
    except Exception as exc:  # recorded, never aborts the sweep
        return SweepRecord(algo, float(T), trial, math.nan, math.nan, math.nan, f"failed:{type(exc).__name__}")


def sweep_tasks(config):
    tasks = []
    for algo in config.algorithms:
        for n, T in config.schedule(algo):
            for trial in range(config.trials):
                tasks.append((dict(config.model), algo, n, T, trial, config.master_seed,
                              dict(config.params.get(algo, {}))))
    return tasks


def _sort_key(r):
    return (r.algorithm, r.T, r.trial)


def run_sweep(config, workers=1):
    """All (algorithm, T, trial) records, sorted; identical for any worker count."""
    tasks = sweep_tasks(config)
    if workers is None or workers <= 1:
        records = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    return sorted(records, key=_sort_key)


def emit_csv(records, path):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in records:
                w.writerow([r.algorithm, repr(float(r.T)), r.trial, repr(float(r.error)),
                            repr(float(r.T_max)), repr(float(r.T_total)), r.metric])
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise InvalidInputError(f"{path}: unexpected header")
    return [SweepRecord(a, float(T), int(k), float(e), float(tm), float(tt), m)
            for a, T, k, e, tm, tt, m in rows[1:]]


def summarize(records, axis="tmax"):
    """{algo: [(x, q25, median, q75)]} with x the median cost at each T."""
    key = {"tmax": "T_max", "ttotal": "T_total"}[axis]
    out = {}
    for algo in sorted({r.algorithm for r in records}):
        pts = []
        for T in sorted({r.T for r in records if r.algorithm == algo}):
            rs = [r for r in records if r.algorithm == algo and r.T == T and math.isfinite(r.error)]
            if not rs:
                continue
            e = np.array([r.error for r in rs])
            x = float(np.median([getattr(r, key) for r in rs]))
            q25, med, q75 = np.percentile(e, [25, 50, 75])
            pts.append((x, float(q25), float(med), float(q75)))
        out[algo] = pts
    return out


def _decades(lo, hi):
    a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    return a, b if b > a else a + 1


def emit_plot(records, axis, path, title=None):
    """Log-log median error vs median T_max (or T_total), interquartile band per algorithm."""
    if not records:
        raise InvalidInputError("no records to plot")
    series = summarize(records, axis)
    W, H, L, R, Tm, B = 640, 440, 80, 150, 40, 60
    pts = [p for s in series.values() for p in s]
    skipped = [a for a, s in series.items() if not s]
    # errors of exactly 0 cannot sit on a log axis; clamp to a floor
    floor = 1e-16
    xs = [p[0] for p in pts] or [1.0, 10.0]
    ys = [max(v, floor) for p in pts for v in (p[1], p[3])] or [1e-3, 1e-1]
    x0, x1 = _decades(min(xs), max(xs))
    y0, y1 = _decades(min(ys), max(ys))

    def X(v):
        return L + (math.log10(v) - x0) / (x1 - x0) * (W - L - R)

    def Y(v):
        return Tm + (y1 - math.log10(max(v, floor))) / (y1 - y0) * (H - Tm - B)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<rect x="{L}" y="{Tm}" width="{W - L - R}" height="{H - Tm - B}" fill="none" stroke="black"/>']
    for k in range(x0, x1 + 1):
        px = X(10.0**k)
        out.append(f'<line x1="{px:.2f}" y1="{H - B}" x2="{px:.2f}" y2="{H - B + 5}" stroke="black"/>')
        out.append(f'<text x="{px:.2f}" y="{H - B + 20}" font-size="12" text-anchor="middle">1e{k}</text>')
    for k in range(y0, y1 + 1):
        py = Y(10.0**k)
        out.append(f'<line x1="{L - 5}" y1="{py:.2f}" x2="{L}" y2="{py:.2f}" stroke="black"/>')
        out.append(f'<text x="{L - 8}" y="{py + 4:.2f}" font-size="12" text-anchor="end">1e{k}</text>')
    xlabel = {"tmax": "T_max", "ttotal": "T_total"}[axis]
    out.append(f'<text x="{(L + W - R) / 2:.2f}" y="{H - 15}" font-size="14" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="20" y="{(Tm + H - B) / 2:.2f}" font-size="14" text-anchor="middle" '
               f'transform="rotate(-90 20 {(Tm + H - B) / 2:.2f})">error</text>')
    if title:
        out.append(f'<text x="{W / 2:.2f}" y="25" font-size="14" text-anchor="middle">{title}</text>')
    row = 0
    for algo, s in series.items():
        if not s:
            continue
        color = _COLORS.get(algo, "#555555")
        upper = [f"{X(p[0]):.2f},{Y(p[3]):.2f}" for p in s]
        lower = [f"{X(p[0]):.2f},{Y(p[1]):.2f}" for p in reversed(s)]
        out.append(f'<polygon points="{" ".join(upper + lower)}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        line = " ".join(f"{X(p[0]):.2f},{Y(p[2]):.2f}" for p in s)
        out.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="2"/>')
        ly = Tm + 15 + 20 * row
        out.append(f'<line x1="{W - R + 10}" y1="{ly}" x2="{W - R + 35}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{W - R + 40}" y="{ly + 4}" font-size="12">{algo}</text>')
        row += 1
    for algo in skipped:
        ly = Tm + 15 + 20 * row
        out.append(f'<text x="{W - R + 10}" y="{ly + 4}" font-size="11" fill="#999999">{algo}: no finite errors</text>')
        row += 1
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def write_outputs(records, config, stem="sweep"):
    """CSV, the two SVGs and a JSON metadata file into config.out_dir; returns the paths."""
    os.makedirs(config.out_dir, exist_ok=True)
    csv_path = os.path.join(config.out_dir, f"{stem}.csv")
    emit_csv(records, csv_path)
    paths = [csv_path]
    for axis in ("tmax", "ttotal"):
        p = os.path.join(config.out_dir, f"{stem}_{axis}.svg")
        emit_plot(records, axis, p, title=f"{config.model.get('builder', 'model')}: error vs {axis}")
        paths.append(p)
    meta = asdict(config)
    meta["schedules"] = {a: [T for _, T in config.schedule(a)] for a in config.algorithms}
    meta["notes"] = [f"esprit capped at n <= {config.esprit_n_max}: its total time grows quadratically"]
    meta_path = os.path.join(config.out_dir, f"{stem}.json")
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths.append(meta_path)
    return paths
