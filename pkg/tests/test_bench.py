import math
import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qmegs import bench
from qmegs.bench import (
    CSV_HEADER,
    ExperimentConfig,
    SweepRecord,
    emit_csv,
    emit_plot,
    make_config,
    maxmin_error,
    read_csv,
    run_sweep,
    trial_rng,
    write_outputs,
)
from qmegs.errors import InvalidInputError
from qmegs.spectrum import SpectralModel

TOY = {"builder": "toy", "M": 20, "gap": 1e-3, "seed": 0}


def two_level(a=0.1, b=0.2):
    return SpectralModel([a, b, 0.7], [0.4, 0.4, 0.2], (0, 1))


def test_maxmin_examples():
    assert maxmin_error([0.1, 0.2], two_level()) == 0.0
    assert maxmin_error([0.1], SpectralModel([0.1, 0.5, 0.7], [0.4, 0.4, 0.2], (0, 1))) == pytest.approx(0.4)
    assert maxmin_error([0.09, 0.21, 0.9], two_level()) == pytest.approx(0.01)
    with pytest.raises(InvalidInputError):
        maxmin_error([], two_level())


def test_maxmin_wrapped():
    m = SpectralModel([-math.pi + 1e-3, 0.0, 0.5], [0.4, 0.4, 0.2], (0, 1))
    assert maxmin_error([math.pi - 1e-3, 0.0], m, wrapped=True) == pytest.approx(2e-3)


ests = st.lists(st.floats(-math.pi, math.pi), min_size=1, max_size=8)


@given(e=ests, extra=st.floats(-math.pi, math.pi), seed=st.integers(0, 1000))
def test_maxmin_permutation_and_monotone(e, extra, seed):
    m = two_level()
    base = maxmin_error(e, m)
    perm = list(np.random.default_rng(seed).permutation(e))
    assert maxmin_error(perm, m) == base
    assert maxmin_error(e + [extra], m) <= base


def test_schedule_and_record_count():
    cfg = ExperimentConfig(model=TOY, algorithms=("qpe",), base=100, factor=2, count=3, trials=2)
    assert [T for _, T in cfg.schedule()] == [200.0, 400.0, 800.0]
    recs = run_sweep(cfg)
    assert len(recs) == 6
    assert all(r.metric == "single" for r in recs)
    assert [(r.T, r.trial) for r in recs] == sorted((r.T, r.trial) for r in recs)


def test_esprit_schedule_capped():
    cfg = ExperimentConfig(model=TOY, algorithms=("esprit", "qmegs"), count=7)
    assert len(cfg.schedule("esprit")) == 5 and len(cfg.schedule("qmegs")) == 7


def test_config_validation():
    with pytest.raises(InvalidInputError):
        ExperimentConfig(model=TOY, trials=0)
    with pytest.raises(InvalidInputError):
        ExperimentConfig(model=TOY, algorithms=("nope",))
    with pytest.raises(InvalidInputError):
        make_config("qmegs", 200.0, bench.build_model(TOY), {"bogus": 1})


def test_failed_runs_become_nan_rows():
    # K too large for the ESPRIT window at T = 10 -> invalid config, recorded not raised
    cfg = ExperimentConfig(model=TOY, algorithms=("esprit",), base=5, factor=2, count=1, trials=2,
                           params={"esprit": {"K": 9}})
    recs = run_sweep(cfg)
    assert len(recs) == 2
    assert all(math.isnan(r.error) and r.metric.startswith("failed:") for r in recs)


def test_trial_rng_independent_streams():
    a = trial_rng(7, "qmegs", 1, 0).random(4)
    assert np.array_equal(a, trial_rng(7, "qmegs", 1, 0).random(4))
    assert not np.array_equal(a, trial_rng(7, "qmegs", 1, 1).random(4))
    assert not np.array_equal(a, trial_rng(7, "esprit", 1, 0).random(4))


def test_cost_bookkeeping():
    cfg = ExperimentConfig(model=TOY, algorithms=("qmegs", "esprit"), count=2, trials=2)
    for r in run_sweep(cfg):
        assert r.T_max <= r.T_total
        if r.algorithm == "qmegs":
            assert r.T_max <= r.T and r.T_total <= 500 * r.T
        else:
            N = int(r.T) - 1 if int(r.T) % 2 == 0 else int(r.T)
            assert r.T_total == N * (N + 1) // 2


def test_sweep_csv_byte_identical(tmp_path):
    cfg = ExperimentConfig(model=TOY, algorithms=("qmegs", "qpe"), count=2, trials=2, master_seed=11)
    emit_csv(run_sweep(cfg), tmp_path / "a.csv")
    emit_csv(run_sweep(cfg), tmp_path / "b.csv")
    emit_csv(run_sweep(cfg, workers=2), tmp_path / "c.csv")
    a = (tmp_path / "a.csv").read_bytes()
    assert a == (tmp_path / "b.csv").read_bytes() == (tmp_path / "c.csv").read_bytes()


# -- CSV --------------------------------------------------------------------

def test_csv_empty_and_single(tmp_path):
    emit_csv([], tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == ",".join(CSV_HEADER) + "\n"
    emit_csv([SweepRecord("qmegs", 200.0, 0, 1e-3, 150.0, 3000.0)], tmp_path / "one.csv")
    assert len((tmp_path / "one.csv").read_text().splitlines()) == 2


floats = st.floats(0, 1e12, allow_nan=False)


@given(rows=st.lists(st.tuples(st.sampled_from(bench.ALGORITHMS), floats, st.integers(0, 99), floats,
                               floats, floats), max_size=10))
def test_csv_round_trip(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("csv") / "r.csv"
    recs = [SweepRecord(a, T, k, e, tm, tm + tt, "maxmin") for a, T, k, e, tm, tt in rows]
    emit_csv(recs, path)
    assert read_csv(path) == recs


def test_csv_unwritable_path(tmp_path):
    with pytest.raises(OSError, match="cannot write CSV"):
        emit_csv([], tmp_path / "missing" / "x.csv")


# -- SVG --------------------------------------------------------------------

def records_for(algo, errs, Ts=(200.0, 400.0, 800.0)):
    return [SweepRecord(algo, T, k, e, T, 10 * T) for T, e in zip(Ts, errs) for k in range(3)]


def test_svg_single_series(tmp_path):
    emit_plot(records_for("qmegs", [1e-2, 5e-3, 2e-3]), "tmax", tmp_path / "p.svg")
    root = ET.parse(tmp_path / "p.svg").getroot()
    ns = "{http://www.w3.org/2000/svg}"
    assert len(root.findall(f"{ns}polyline")) == 1


def test_svg_decade_ticks(tmp_path):
    emit_plot(records_for("qmegs", [1e-1, 1e-3, 1e-5]), "ttotal", tmp_path / "p.svg")
    text = (tmp_path / "p.svg").read_text()
    for k in range(-5, 0):
        assert f">1e{k}<" in text
    assert "T_total" in text


def test_svg_deterministic_and_nan_series(tmp_path):
    recs = records_for("qmegs", [1e-2, 5e-3, 2e-3]) + [
        SweepRecord("esprit", 200.0, 0, math.nan, math.nan, math.nan, "failed:X")]
    emit_plot(recs, "tmax", tmp_path / "a.svg")
    emit_plot(recs, "tmax", tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
    assert "esprit: no finite errors" in (tmp_path / "a.svg").read_text()
    with pytest.raises(InvalidInputError):
        emit_plot([], "tmax", tmp_path / "c.svg")


def test_write_outputs(tmp_path):
    cfg = ExperimentConfig(model=TOY, algorithms=("qpe",), count=2, trials=2, out_dir=str(tmp_path))
    paths = write_outputs(run_sweep(cfg), cfg)
    names = sorted(p.rsplit("/", 1)[-1] for p in paths)
    assert names == ["sweep.csv", "sweep.json", "sweep_tmax.svg", "sweep_ttotal.svg"]
    assert re.search("esprit capped", (tmp_path / "sweep.json").read_text())
