import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from betagraph.detectors import (
    MissingHintError,
    batch_stat,
    hc_calibration,
    hc_curve,
    hc_stat,
    max_degree_stat,
    standardized_degrees,
    t_grid,
    theoretical_threshold,
    total_degree_stat,
    HcCurve,
)
from betagraph.graph_model import GraphSample, ModelParams, make_signal, null_signal, sample_degrees_batch, sample_graph
from betagraph.theory import null_hc_moments


def _sample(degrees):
    return GraphSample(np.asarray(degrees, dtype=np.int64), 0)


def test_total_degree_examples():
    assert total_degree_stat(_sample([0] * 5), ModelParams(5, 2)) == -4.0
    assert total_degree_stat(_sample([3] * 4), ModelParams(4, 4)) == 6.0


def test_total_degree_null_mean_zero():
    p = ModelParams(100, 25)
    stat = batch_stat("total_degree", sample_degrees_batch(p, null_signal(), range(10_000)), p)
    sd = math.sqrt(99 * 25 * (1 - 0.125))
    assert abs(stat.mean()) < 4 * sd / math.sqrt(stat.size)


def test_max_degree_examples():
    assert max_degree_stat(_sample([0] * 6)) == 0
    assert max_degree_stat(_sample([5, 1, 1, 1, 1, 1])) == 5
    p = ModelParams(100, 25)
    g = sample_graph(p, null_signal(), 77, keep_edges=True)
    assert max_degree_stat(g) == int(np.bincount(g.edges.ravel(), minlength=100).max())


def test_standardized_degrees_examples():
    p = ModelParams(5, 2.5)
    assert standardized_degrees(_sample([4, 1, 1, 1, 1]), p)[0] == pytest.approx(3 / math.sqrt(0.75), rel=1e-14)
    assert standardized_degrees(_sample([4, 1, 1, 1, 1]), p)[0] == pytest.approx(3.4641, abs=1e-4)
    p = ModelParams(10, 5)  # mean degree 9 * 0.25 = 2.25
    mu = 9 * 0.25
    assert standardized_degrees(_sample([0] * 10), p)[0] == pytest.approx(-mu / math.sqrt(9 * 0.25 * 0.75))


def test_standardized_degrees_null_moments():
    p = ModelParams(100, 25)
    D = standardized_degrees(sample_degrees_batch(p, null_signal(), range(2000)), p)
    assert abs(D.mean()) < 0.01
    assert D.var() == pytest.approx(1.0, rel=0.02)


def test_t_grid_examples():
    assert t_grid(100).thresholds == (1, 2, 3, 4, 5, 6)
    assert t_grid(3).thresholds == (1, 2, 3)
    for n in (3, 10, 100, 10**6):
        g = t_grid(n).thresholds
        assert 0 not in g and max(g) <= math.floor(math.sqrt(10 * math.log(n)))
    with pytest.raises(ValueError):
        t_grid(2)


def test_hc_curve_at_null_mean():
    p = ModelParams(80, 20)  # (n-1) theta = 79/8; degrees at floor sit below every cut
    d = np.full(80, 9)
    c = hc_curve(d, p)
    for t, raw in zip(c.t, c.hc_raw):
        assert raw == pytest.approx(-80 * null_hc_moments(p, int(t)).a)
    assert np.allclose(c.ghc, c.hc_raw / c.null_sd)


def test_hc_curve_star():
    p = ModelParams(30, 2)
    d = np.array([29] + [1] * 29)
    c = hc_curve(d, p)
    Dmax = standardized_degrees(d, p)[0]
    for t, raw in zip(c.t, c.hc_raw):
        if t < Dmax:
            assert raw == pytest.approx(1 - 30 * null_hc_moments(p, int(t)).a)


def test_hc_indicator_matches_direct_standardization():
    p = ModelParams(100, 25)
    d = sample_degrees_batch(p, make_signal(p, s=10, A=1.5), range(200))
    D = standardized_degrees(d, p)
    cal = hc_calibration(p)
    for row, Drow in zip(d, D):
        c = hc_curve(row, p)
        direct = np.array([(Drow > t).sum() for t in cal.t]) - cal.null_mean
        assert np.allclose(c.hc_raw, direct)


def test_hc_stat_examples():
    one = HcCurve(np.array([1]), np.array([0.3]), np.array([1.0]), np.array([0.3]))
    assert hc_stat(one) == 0.3
    three = HcCurve(np.arange(3), np.zeros(3), np.ones(3), np.array([-1.0, 0.5, 2.0]))
    assert hc_stat(three) == 2.0


def test_hc_null_normalization_monte_carlo():
    p = ModelParams(100, 25)
    d = sample_degrees_batch(p, null_signal(), range(10_000))
    cal = hc_calibration(p)
    i = list(cal.t).index(2)
    ghc = ((d >= cal.cuts[i]).sum(axis=1) - cal.null_mean[i]) / cal.null_sd[i]
    assert abs(ghc.mean()) < 0.05
    assert ghc.var() == pytest.approx(1.0, rel=0.05)


def test_hc_calibration_drops_zero_variance_thresholds():
    p = ModelParams(10, 10)  # t = 3 already puts the cut at degree 10 > n - 1
    cal = hc_calibration(p)
    assert np.all(cal.null_sd > 0)
    assert list(cal.t) == [1, 2]
    assert t_grid(10).thresholds == (1, 2, 3, 4)


@given(seed=st.integers(0, 2**32), v=st.integers(0, 59))
def test_raising_one_degree_never_lowers_statistics(seed, v):
    p = ModelParams(60, 15)
    d = sample_graph(p, null_signal(), seed).degrees
    up = d.copy()
    up[v] += 1
    for test in ("total_degree", "max_degree", "higher_criticism"):
        assert batch_stat(test, up, p)[0] >= batch_stat(test, d, p)[0]


@pytest.mark.parametrize("seed", range(4))
def test_statistics_monotone_on_coupled_samples(seed):
    p = ModelParams(80, 20)
    prev = None
    for A in np.linspace(0, 3, 7):
        d = sample_graph(p, make_signal(p, s=9, A=float(A)), seed, coupled=True).degrees
        cur = [batch_stat(t, d, p)[0] for t in ("total_degree", "max_degree", "higher_criticism")]
        if prev is not None:
            assert all(c >= q for c, q in zip(cur, prev))
        prev = cur


def test_edges_and_degrees_give_same_statistics():
    p = ModelParams(50, 10)
    g = sample_graph(p, make_signal(p, s=5, A=1.0), 4, keep_edges=True)
    from_edges = np.bincount(g.edges.ravel(), minlength=50)
    for test in ("total_degree", "max_degree", "higher_criticism"):
        assert batch_stat(test, from_edges, p)[0] == batch_stat(test, g.degrees, p)[0]
    assert hc_stat(hc_curve(g, p)) == batch_stat("higher_criticism", g.degrees, p)[0]


def test_theoretical_thresholds():
    p = ModelParams(100, 25)
    assert theoretical_threshold("higher_criticism", p) == pytest.approx(math.sqrt(math.log(100)))
    assert theoretical_threshold("higher_criticism", p) == pytest.approx(2.146, abs=1e-3)
    sig = make_signal(p, s=10, A=1.0)
    assert theoretical_threshold("total_degree", p, sig) == pytest.approx(31.25 * math.tanh(0.5))
    assert theoretical_threshold("total_degree", p, sig) == pytest.approx(14.44, abs=0.01)
    assert theoretical_threshold("max_degree", p, delta=0.0) == pytest.approx(22.54, abs=0.01)
    assert theoretical_threshold("max_degree", p, delta=0.5) > theoretical_threshold("max_degree", p, delta=0.1)
    with pytest.raises(MissingHintError):
        theoretical_threshold("total_degree", p)
    with pytest.raises(ValueError):
        theoretical_threshold("max_degree", p, delta=-1)
    with pytest.raises(ValueError):
        theoretical_threshold("max_degree_gumbel", p, level=1.5)


def test_gumbel_threshold():
    p = ModelParams(10**5, 5000)  # lambda above log(n)^3
    a = 0.05
    logn = math.log(p.n)
    dstar = -math.log(-math.log(1 - a))
    q = p.theta
    expect = p.n * q + math.sqrt(2 * p.n * q * (1 - q) * logn) * (
        1 - (math.log(logn) + math.log(4 * math.pi)) / (4 * logn) + dstar / (2 * logn)
    )
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert theoretical_threshold("max_degree_gumbel", p, level=a) == pytest.approx(expect)
    with pytest.warns(RuntimeWarning):
        theoretical_threshold("max_degree_gumbel", ModelParams(100, 25), level=a)


def test_hc_theoretical_threshold_type_one_bound():
    p = ModelParams(100, 25)
    hc = batch_stat("higher_criticism", sample_degrees_batch(p, null_signal(), range(2000)), p)
    assert np.mean(hc > math.sqrt(math.log(100))) <= math.sqrt(10 * math.log(100)) / math.log(100)
