import json
import math

import numpy as np
import pytest

from betagraph.graph_model import ModelParams, make_signal
from betagraph.simlab import (
    CSV_HEADER,
    SimConfig,
    arith_grid,
    calibrate,
    estimate_power,
    estimate_risk,
    load_grid,
    null_statistics,
    persist_grid,
    replicate_seeds,
    risk_components,
    run_grid,
)

P25 = ModelParams(100, 25)


def test_replicate_seeds_distinct_and_stable():
    a = replicate_seeds(7, 1, "total_degree", 0, 0, 50)
    assert a == replicate_seeds(7, 1, "total_degree", 0, 0, 50)
    assert len(set(a)) == 50
    assert a != replicate_seeds(7, 1, "max_degree", 0, 0, 50)
    assert a != replicate_seeds(7, 1, "total_degree", 0, 1, 50)
    assert a[:10] == replicate_seeds(7, 1, "total_degree", 0, 0, 10)


def test_calibrate_reproducible():
    t1 = calibrate("higher_criticism", P25, 0.05, 100, 11)
    t2 = calibrate("higher_criticism", P25, 0.05, 100, 11)
    assert t1 == t2


def test_calibrate_higher_quantile_rule():
    stats = np.sort(null_statistics("total_degree", P25, 100, 3))
    assert calibrate("total_degree", P25, 0.05, 100, 3) == stats[94]
    assert calibrate("total_degree", P25, 1e-9, 100, 3) == stats[-1]
    assert calibrate("total_degree", P25, 0.5, 100, 3) == stats[49]


def test_calibrate_degenerate_stub():
    def const(degrees, params):
        return np.full(degrees.shape[0], 3.5)

    assert calibrate(const, P25, 0.05, 40, 1) == 3.5


def test_calibrate_validation():
    with pytest.raises(ValueError):
        calibrate("total_degree", P25, 0.05, 10, 1)
    with pytest.raises(ValueError):
        calibrate("total_degree", P25, 0.0, 100, 1)
    with pytest.raises(ValueError):
        calibrate("nope", P25, 0.05, 100, 1)


def test_power_null_alternative_near_level():
    thr = calibrate("total_degree", P25, 0.05, 1000, 5)
    est = estimate_power("total_degree", P25, make_signal(P25, alpha=0.3, A=0.0), thr, 1000, 6)
    assert abs(est.power - 0.05) < 3 * math.sqrt(0.05 * 0.95 / 1000) + 0.02
    assert est.ci_halfwidth == pytest.approx(1.96 * math.sqrt(est.power * (1 - est.power) / 1000))


def test_power_saturated_signal():
    thr = calibrate("total_degree", P25, 0.05, 200, 5)
    est = estimate_power("total_degree", P25, make_signal(P25, alpha=0.2, A=30.0), thr, 100, 6)
    assert est.power == 1.0 and est.ci_halfwidth == 0.0


def test_power_infinite_threshold():
    est = estimate_power("max_degree", P25, make_signal(P25, alpha=0.6, A=2.0), math.inf, 50, 1)
    assert est.power == 0.0


def test_risk_examples():
    thr = calibrate("total_degree", P25, 0.05, 200, 8)
    r = risk_components("total_degree", P25, make_signal(P25, alpha=0.3, A=0.0), thr, 400, 9)
    assert r.risk == pytest.approx(1.0, abs=0.1)
    assert r.risk == r.type_one + r.type_two
    assert estimate_risk("total_degree", P25, make_signal(P25, alpha=0.3, A=0.0), thr, 400, 9) == r.risk

    def oracle(degrees, params):
        # with lambda = n the null degree is Bin(99, 1/2); a saturated
        # signal on 99 vertices makes vertex 0 adjacent to everyone
        return (degrees[:, 0] == 99).astype(float)

    dense = ModelParams(100, 100)
    strong = make_signal(dense, s=99, A=50.0)
    assert estimate_risk(oracle, dense, strong, 0.5, 100, 1) == 0.0


def _config(**kw):
    base = dict(
        params=P25,
        test="total_degree",
        level=0.05,
        calib_reps=100,
        power_reps=40,
        master_seed=99,
        alpha_grid=(0.2, 0.4),
        strength_grid=(0.05, 0.3),
        strength_mode="dense_r",
        scale="raw",
    )
    base.update(kw)
    return SimConfig(**base)


def test_single_cell_grid_equals_estimate_power():
    cfg = _config(alpha_grid=(0.3,), strength_grid=(0.1,))
    g = run_grid(cfg)
    from betagraph.theory import strength

    A = strength(P25, "dense_r", 0.1, "raw")
    est = estimate_power("total_degree", P25, make_signal(P25, alpha=0.3, A=A), g.threshold, 40, 99)
    assert g.cells[0].power == est.power and g.cells[0].ci == est.ci_halfwidth
    assert g.threshold == calibrate("total_degree", P25, 0.05, 100, 99)


def test_grid_structure_and_boundary():
    g = run_grid(_config())
    assert [(c.alpha, c.strength) for c in g.cells] == [(0.2, 0.05), (0.2, 0.3), (0.4, 0.05), (0.4, 0.3)]
    assert [c.s for c in g.cells] == [40, 40, 16, 16]
    assert g.boundary == ((0.2, pytest.approx(0.3)), (0.4, pytest.approx(0.1)))
    assert all(0 <= c.power <= 1 for c in g.cells)


def test_grid_saturation_cells_reported():
    cfg = _config(params=ModelParams(100, 5), test="max_degree", strength_mode="sparse_C", scale="tanh",
                  alpha_grid=(0.6,), strength_grid=(0.5, 4.0))
    g = run_grid(cfg)
    ok, sat = g.cells
    assert ok.power is not None and ok.A == pytest.approx(math.atanh(math.sqrt(0.5 * math.log(100) / 5)))
    assert sat.power is None and sat.A is None and sat.ci is None and sat.s == 6


def test_grid_identical_across_worker_counts(tmp_path):
    cfg = _config(alpha_grid=(0.1, 0.2, 0.3), strength_grid=(0.05, 0.2, 0.35))
    a = run_grid(cfg, workers=1)
    b = run_grid(cfg, workers=3)
    assert a == b
    persist_grid(a, tmp_path / "a.csv")
    persist_grid(b, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_persist_round_trip(tmp_path, fmt):
    cfg = _config(params=ModelParams(100, 5), strength_mode="sparse_C", scale="tanh", strength_grid=(0.5, 4.0))
    g = run_grid(cfg)
    path = tmp_path / f"grid.{fmt}"
    persist_grid(g, path, fmt)
    back = load_grid(path)
    assert back == g
    assert any(c.power is None for c in back.cells)


def test_csv_and_json_contracts(tmp_path):
    g = run_grid(_config())
    persist_grid(g, tmp_path / "g.csv", "csv")
    text = (tmp_path / "g.csv").read_bytes()
    assert text.splitlines()[0] == b"alpha,strength,s,A,power,ci"
    assert b"\r" not in text
    persist_grid(g, tmp_path / "g.json", "json")
    doc = json.loads((tmp_path / "g.json").read_text())
    assert set(doc) == {"config", "cells", "threshold", "boundary"}
    assert set(doc["cells"][0]) == set(CSV_HEADER)
    assert set(doc["boundary"][0]) == {"alpha", "c"}
    raw = (tmp_path / "g.json").read_text()
    assert "0.20000000000000001" in raw  # 17 significant digits


def test_persist_errors_name_the_path(tmp_path):
    g = run_grid(_config(alpha_grid=(0.3,), strength_grid=(0.1,)))
    bad = tmp_path / "missing" / "g.csv"
    with pytest.raises(OSError, match="missing"):
        persist_grid(g, bad)
    with pytest.raises(OSError, match="nothere"):
        load_grid(tmp_path / "nothere.csv")
    with pytest.raises(ValueError):
        persist_grid(g, tmp_path / "x", "xml")


def test_null_grid_consistency():
    cfg = _config(test="higher_criticism", calib_reps=1000, power_reps=200, strength_mode="sparse_C",
                  alpha_grid=(0.55, 0.65, 0.75), strength_grid=(0.0,))
    g = run_grid(cfg)
    mean = np.mean([c.power for c in g.cells])
    assert abs(mean - 0.05) <= 3 * math.sqrt(0.05 * 0.95 / 200)


def test_power_monotone_in_strength_within_error():
    cfg = _config(power_reps=200, alpha_grid=(0.2,), strength_grid=arith_grid(0.05, 0.05, 8))
    cells = run_grid(cfg).cells
    # larger r means weaker signal: power non-increasing in r
    for a, b in zip(cells, cells[1:]):
        assert b.power <= a.power + 2 * max(a.ci, b.ci) + 1e-12


def test_config_validation():
    with pytest.raises(ValueError):
        _config(level=1.0)
    with pytest.raises(ValueError):
        _config(alpha_grid=())
    with pytest.raises(ValueError):
        _config(strength_mode="weird")
    with pytest.raises(ValueError):
        _config(power_reps=0)
    assert SimConfig.from_dict(_config().to_dict()) == _config()


def test_arith_grid():
    assert arith_grid(0.025, 0.025, 3) == (0.025, 0.05, 0.075)
    with pytest.raises(ValueError):
        arith_grid(0, 1, 0)
