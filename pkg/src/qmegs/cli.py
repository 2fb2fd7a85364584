"""Command-line entry point: ``qmegs {model,run,sweep,check}``.

Every flag can also come from a JSON file given with ``--config``; keys are
the flag names with dashes turned into underscores, and flags given on the
command line win over the file.
"""

import argparse
import json
import math
import sys

import numpy as np

from . import _backend, bench, spectrum
from .errors import InvalidInputError, ModelConditionError

MODEL_DEFAULTS = {
    "toy": {"M": 20, "gap": 1e-3},
    "tfim": {"L": 8, "g": 4.0},
    "hubbard": {"L": 4, "t": 1.0, "U": 10.0},
}

DEFAULTS = {
    "model": {"builder": "toy", "seed": 0, "out": None},
    "run": {"algo": "qmegs", "mode": "real", "model": None, "builder": "toy", "model_seed": 0,
            "grid_csv": None, "qpe_depth_rule": "round"},
    "sweep": {"model": "tfim", "model_seed": 0, "algos": "qmegs,esprit,qpe,mmqcels", "n_max": 5,
              "trials": 20, "workers": 1, "out": "sweep_out", "base": 100.0, "factor": 2.0,
              "esprit_n_max": bench.ESPRIT_N_MAX, "qpe_depth_rule": "round"},
    "check": {"only": None},
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _model_flags(p):
    p.add_argument("--M", type=int, help="toy: number of eigenvalues")
    p.add_argument("--gap", type=float, help="toy: dominant gap before normalization")
    p.add_argument("--L", type=int, help="tfim/hubbard: sites")
    p.add_argument("--g", type=float, help="tfim: transverse field")
    p.add_argument("--t", type=float, help="hubbard: hopping")
    p.add_argument("--U", type=float, help="hubbard: on-site repulsion")


def _algo_flags(p):
    g = p.add_argument_group("qmegs")
    g.add_argument("--N", type=int)
    g.add_argument("--sigma", type=float)
    g.add_argument("--alpha", type=float)
    g.add_argument("--q", type=float)
    g.add_argument("--K", type=int)
    g = p.add_argument_group("esprit")
    g.add_argument("--shots-per-node", type=int)
    g = p.add_argument_group("qpe")
    g.add_argument("--d", type=int, help="ancilla count (default: from --qpe-depth-rule)")
    g.add_argument("--n-samples", type=int, help="default ceil(6/p_1)")
    g.add_argument("--qpe-depth-rule", choices=("round", "floor", "ceil"),
                   help="d = rule(log2 T) when --d is not given")
    g = p.add_argument_group("mmqcels")
    g.add_argument("--T0", type=float)
    g.add_argument("--N0", type=int)
    g.add_argument("--Nj", type=int)


def build_parser():
    parser = _Parser(prog="qmegs", description="Multiple-eigenvalue phase estimation benchmarks.",
                     argument_default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("model", help="build and save a spectral model", argument_default=argparse.SUPPRESS)
    p.add_argument("--builder", choices=tuple(MODEL_DEFAULTS))
    _model_flags(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output JSON path (default: stdout)")
    p.add_argument("--config")

    p = sub.add_parser("run", help="run one algorithm once", argument_default=argparse.SUPPRESS)
    p.add_argument("--algo", choices=bench.ALGORITHMS)
    p.add_argument("--mode", choices=("real", "integer"), help="qmegs time law; integer selects qmegs-int")
    p.add_argument("--model", help="model JSON file (otherwise built from --builder flags)")
    p.add_argument("--builder", choices=tuple(MODEL_DEFAULTS))
    p.add_argument("--model-seed", type=int)
    _model_flags(p)
    p.add_argument("--T", type=float, required=False)
    _algo_flags(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--grid-csv", help="dump (theta_j, G_j) of the qmegs filter grid")
    p.add_argument("--config")

    p = sub.add_parser("sweep", help="error vs cost sweep to CSV + SVG", argument_default=argparse.SUPPRESS)
    p.add_argument("--model", choices=tuple(MODEL_DEFAULTS) + ("file",))
    p.add_argument("--model-file")
    p.add_argument("--model-seed", type=int)
    _model_flags(p)
    p.add_argument("--algos", help="comma-separated subset of " + ",".join(bench.ALGORITHMS))
    p.add_argument("--n-max", type=int, help="T = base * factor^n for n = 1..n_max")
    p.add_argument("--base", type=float)
    p.add_argument("--factor", type=float)
    p.add_argument("--esprit-n-max", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output directory")
    _algo_flags(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")

    p = sub.add_parser("check", help="run the acceptance suite", argument_default=argparse.SUPPRESS)
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.add_argument("--config")
    return parser


def _merge(parser, ns):
    given = vars(ns).copy()
    cmd = given.pop("command")
    opts = dict(DEFAULTS[cmd])
    path = given.pop("config", None)
    if path:
        try:
            with open(path) as fh:
                conf = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config {path}: {exc}")
        if not isinstance(conf, dict):
            parser.error(f"config {path} must hold a JSON object")
        known = {a.dest for a in parser._subparsers._group_actions[0].choices[cmd]._actions}
        unknown = sorted(set(conf) - known)
        if unknown:
            parser.error(f"unknown keys in {path}: {unknown}")
        opts.update(conf)
    opts.update(given)
    return cmd, opts


def _builder_spec(builder, opts, seed):
    spec = {"builder": builder, "seed": seed}
    for k, v in MODEL_DEFAULTS[builder].items():
        spec[k] = opts.get(k, v)
    return spec


def _algo_overrides(algo, opts, model, T):
    keys = {
        "qmegs": ("N", "sigma", "alpha", "q", "K"),
        "qmegs-int": ("N", "sigma", "alpha", "q", "K"),
        "esprit": ("K", "shots_per_node"),
        "mmqcels": ("K", "T0", "N0", "Nj", "sigma", "alpha", "q"),
        "qpe": (),
    }[algo]
    over = {k: opts[k] for k in keys if k in opts}
    if algo == "qpe":
        rule = opts.get("qpe_depth_rule", "round")
        base = bench.baselines.QpeConfig.for_model(model, T, rule=rule) if T is not None else None
        if "d" in opts:
            over["d"] = opts["d"]
        elif base is not None:
            over["d"] = base.d
        if "n_samples" in opts:
            over["n_samples"] = opts["n_samples"]
    return over


def _cmd_model(opts):
    spec = _builder_spec(opts["builder"], opts, opts["seed"])
    model = bench.build_model(spec)
    text = json.dumps(model.to_dict(), indent=2) + "\n"
    if opts.get("out"):
        with open(opts["out"], "w") as fh:
            fh.write(text)
        print(f"wrote {opts['out']} ({model.eigenvalues.size} levels)")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_run(parser, opts):
    if "seed" not in opts:
        parser.error("run requires --seed")
    if "T" not in opts:
        parser.error("run requires --T")
    algo = opts["algo"]
    if algo == "qmegs" and opts.get("mode") == "integer":
        algo = "qmegs-int"
    if opts.get("model"):
        model = spectrum.SpectralModel.load(opts["model"])
    else:
        model = bench.build_model(_builder_spec(opts["builder"], opts, opts["model_seed"]))
    T = float(opts["T"])
    cfg = bench.make_config(algo, T, model, _algo_overrides(algo, opts, model, T))
    rng = np.random.default_rng(opts["seed"])
    keep = bool(opts.get("grid_csv")) and algo in ("qmegs", "qmegs-int")
    extra = {"keep_grid": True} if keep else {}
    res, err, metric = bench.run_algorithm(algo, model, cfg, rng, **extra)
    print(f"algorithm: {res.algorithm}")
    print("estimates: " + " ".join(repr(float(v)) for v in res.estimates))
    print(f"T_max: {res.T_max!r}")
    print(f"T_total: {res.T_total!r}")
    print(f"error ({metric}): {err!r}")
    for f in res.flags:
        print(f"flag: {f}")
    if keep:
        res.grid.to_csv(opts["grid_csv"])
        print(f"grid: {opts['grid_csv']}")
    return 0


def _cmd_sweep(parser, opts):
    if "seed" not in opts:
        parser.error("sweep requires --seed")
    algos = tuple(a.strip() for a in str(opts["algos"]).split(",") if a.strip())
    if opts["model"] == "file":
        if "model_file" not in opts:
            parser.error("--model file needs --model-file")
        spec = {"builder": "file", "path": opts["model_file"]}
    else:
        spec = _builder_spec(opts["model"], opts, opts["model_seed"])
    model = bench.build_model(spec)
    params = {}
    for a in algos:
        if a not in bench.ALGORITHMS:
            parser.error(f"unknown algorithm {a!r}")
        over = _algo_overrides(a, opts, model, None)
        if over:
            params[a] = over
    if "qpe" in algos and opts.get("qpe_depth_rule", "round") != "round":
        params.setdefault("qpe", {})["depth_rule"] = opts["qpe_depth_rule"]
    cfg = bench.ExperimentConfig(model=spec, algorithms=algos, base=float(opts["base"]),
                                 factor=float(opts["factor"]), count=int(opts["n_max"]),
                                 trials=int(opts["trials"]), master_seed=int(opts["seed"]),
                                 out_dir=opts["out"], esprit_n_max=int(opts["esprit_n_max"]), params=params)
    records = bench.run_sweep(cfg, workers=int(opts["workers"]))
    for p in bench.write_outputs(records, cfg):
        print(f"wrote {p}")
    failed = sum(1 for r in records if not math.isfinite(r.error))
    if failed:
        print(f"{failed} of {len(records)} runs failed (NaN rows tagged in the CSV)")
    return 0


def _cmd_check(opts):
    from . import acceptance

    only = opts.get("only")
    numbers = sorted(acceptance.CRITERIA) if not only else [int(x) for x in str(only).split(",")]
    print(f"kernel backend: {_backend.name()}")
    ok = True
    for n in numbers:
        r = acceptance.run_criterion(n)
        print(r.line(), flush=True)
        ok &= r.passed
    return 0 if ok else 1


def cli_main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    cmd, opts = _merge(parser, ns)
    try:
        if cmd == "model":
            return _cmd_model(opts)
        if cmd == "run":
            return _cmd_run(parser, opts)
        if cmd == "sweep":
            return _cmd_sweep(parser, opts)
        return _cmd_check(opts)
    except (InvalidInputError, ModelConditionError, OSError) as exc:
        print(f"qmegs {cmd}: error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli_main())
