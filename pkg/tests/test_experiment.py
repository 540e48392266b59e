import csv
import io

import numpy as np
import pytest

from binlatent.config import ExperimentConfig
from binlatent.experiment import SWEEP_COLUMNS, method_seed, run_point, run_sweep, spectral_estimate, write_sweep_csv
from binlatent.datagen import InstanceSpec, make_instance
from binlatent.learn import aligned_error


def _small(**kw):
    base = dict(d=2, m=5, n=(4000,), sigma=(0.2,), seeds=(0, 1), methods=("spectral", "spectral+wls", "als", "oracle"),
                als_max_iter=50)
    base.update(kw)
    return ExperimentConfig(**base)


def test_run_point_rows_and_errors():
    rows = run_point(_small(), 4000, 0.2, 0)
    assert [r["method"] for r in rows] == ["spectral", "spectral+wls", "als", "oracle"]
    assert all(r["status"] == "ok" for r in rows)
    oracle = rows[-1]["error"]
    assert oracle < 0.05
    assert rows[0]["eigenpair_count"] >= 2 and rows[0]["candidate_count"] >= 2
    assert rows[2]["eigenpair_count"] is None


def test_noiseless_point_is_exact():
    rows = run_point(_small(methods=("spectral",), sigma=(0.0,)), 400, 0.0, 3)
    assert rows[0]["status"] == "ok" and rows[0]["error"] < 1e-8


def test_failures_are_recorded_not_raised():
    # the refinement step is undefined without noise
    rows = run_point(_small(methods=("spectral+wls",), sigma=(0.0,)), 400, 0.0, 3)
    assert rows[0]["status"] == "data:DataError"
    assert np.isnan(rows[0]["error"])


def test_sweep_grid_order_and_worker_independence():
    cfg = _small(n=(2000, 4000), methods=("spectral", "als"))
    serial = run_sweep(cfg, workers=1)
    parallel = run_sweep(cfg, workers=2)
    keys = [(r["n"], r["sigma"], r["seed"], r["method"]) for r in serial]
    assert keys == [(n, 0.2, s, m) for n in (2000, 4000) for s in (0, 1) for m in ("spectral", "als")]
    drop = lambda rows: [{k: v for k, v in r.items() if k != "wall_time"} for r in rows]
    assert drop(serial) == drop(parallel)


def test_sweep_csv_format():
    rows = run_sweep(_small(methods=("oracle",), seeds=(0,)))
    buf = io.StringIO()
    write_sweep_csv(buf, rows)
    parsed = list(csv.reader(io.StringIO(buf.getvalue())))
    assert tuple(parsed[0]) == SWEEP_COLUMNS
    assert parsed[1][3] == "oracle" and parsed[1][6] == "" and parsed[1][9] == "ok"
    assert float(parsed[1][4]) == rows[0]["error"]


def test_method_seed_distinct():
    a = method_seed(0, 100, 0.5).generate_state(2)
    assert not np.array_equal(a, method_seed(0, 100, 0.6).generate_state(2))
    assert np.array_equal(a, method_seed(0, 100, 0.5).generate_state(2))


def test_spectral_estimate_routes_binomial():
    inst = make_instance(InstanceSpec(d=2, m=8, n=20000, observation="binomial", w_law="dirichlet", seed=4))
    est = spectral_estimate(inst.X, 2, None, observation="binomial")
    assert est.info["method"] == "spectral-denoised"
    raw = spectral_estimate(inst.X, 2, None, observation="binomial", denoise=False)
    assert raw.info["method"] == "spectral-raw"
    assert aligned_error(est.W_hat, inst.W)[0] < 1.0
