"""Total degree, maximum degree and higher criticism statistics.

Every statistic is a function of the degree sequence alone.  The batch
functions take a ``(reps, n)`` integer array and are what the simulation
engine calls; the single-sample functions wrap them.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .graph_model import GraphSample, ModelParams, SignalSpec
from .theory import DegenerateVarianceError, degree_scale, null_hc_moments

__all__ = [
    "TGrid",
    "HcCurve",
    "HcCalibration",
    "MissingHintError",
    "TESTS",
    "t_grid",
    "total_degree_stat",
    "max_degree_stat",
    "standardized_degrees",
    "hc_calibration",
    "hc_curve",
    "hc_stat",
    "theoretical_threshold",
    "batch_stat",
]

TESTS = ("total_degree", "max_degree", "higher_criticism")


class MissingHintError(ValueError):
    pass


@dataclass(frozen=True)
class TGrid:
    thresholds: tuple[int, ...]

    def __post_init__(self):
        if not self.thresholds:
            raise ValueError("threshold grid is empty")


def t_grid(n: int) -> TGrid:
    """Positive integers strictly below sqrt(10 log n)."""
    if n < 3:
        raise ValueError("t grid needs n >= 3")
    top = math.sqrt(10.0 * math.log(n))
    last = math.ceil(top) - 1 if top == math.floor(top) else math.floor(top)
    return TGrid(tuple(range(1, last + 1)))


def _degrees(sample) -> np.ndarray:
    d = sample.degrees if isinstance(sample, GraphSample) else sample
    return np.asarray(d, dtype=np.int64)


def total_degree_stat(sample, params: ModelParams) -> float:
    """Sum of degrees minus its null mean lambda (n-1) / 2."""
    return float(_degrees(sample).sum()) - params.lam * (params.n - 1) / 2.0


def max_degree_stat(sample) -> int:
    d = _degrees(sample)
    return int(d.max()) if d.size else 0


def standardized_degrees(sample, params: ModelParams) -> np.ndarray:
    m, sd = degree_scale(params)
    return (_degrees(sample) - m) / sd


@dataclass(frozen=True)
class HcCalibration:
    """Per-threshold integer cuts and exact null centering / scale.

    Thresholds whose null HC(t) variance is zero (cut above the support)
    are dropped.
    """

    t: np.ndarray
    cuts: np.ndarray
    null_mean: np.ndarray  # n * a(t)
    null_sd: np.ndarray


@lru_cache(maxsize=64)
def hc_calibration(params: ModelParams) -> HcCalibration:
    ts, cuts, means, sds = [], [], [], []
    for t in t_grid(params.n).thresholds:
        m = null_hc_moments(params, t)
        if m.var_hc > 0.0:
            ts.append(t)
            cuts.append(m.cut)
            means.append(params.n * m.a)
            sds.append(math.sqrt(m.var_hc))
    if not ts:
        raise DegenerateVarianceError("every HC threshold has zero null variance")
    return HcCalibration(
        np.array(ts, dtype=np.int64),
        np.array(cuts, dtype=np.int64),
        np.array(means),
        np.array(sds),
    )


@dataclass(frozen=True)
class HcCurve:
    t: np.ndarray
    hc_raw: np.ndarray
    null_sd: np.ndarray
    ghc: np.ndarray


def _exceed_counts(degrees: np.ndarray, cuts: np.ndarray) -> np.ndarray:
    """#{i: d_i >= cut} for every row and every cut, shape (reps, len(cuts))."""
    degrees = np.atleast_2d(degrees)
    n = degrees.shape[1]
    width = max(int(degrees.max(initial=0)), int(cuts.max())) + 2
    rows = np.arange(degrees.shape[0])[:, None] * width
    hist = np.bincount((degrees + rows).ravel(), minlength=degrees.shape[0] * width)
    hist = hist.reshape(degrees.shape[0], width)
    # survival counts: number of entries >= k
    surv = n - np.cumsum(hist, axis=1) + hist
    return surv[:, cuts]


def hc_curve(sample, params: ModelParams) -> HcCurve:
    cal = hc_calibration(params)
    counts = _exceed_counts(_degrees(sample)[None, :], cal.cuts)[0]
    raw = counts - cal.null_mean
    return HcCurve(cal.t.copy(), raw, cal.null_sd.copy(), raw / cal.null_sd)


def hc_stat(curve: HcCurve) -> float:
    if curve.ghc.size == 0:
        raise ValueError("empty HC curve")
    return float(np.max(curve.ghc))


def batch_stat(test: str, degrees: np.ndarray, params: ModelParams) -> np.ndarray:
    """Statistic of every row of a (reps, n) degree array."""
    degrees = np.atleast_2d(np.asarray(degrees, dtype=np.int64))
    if test == "total_degree":
        return degrees.sum(axis=1) - params.lam * (params.n - 1) / 2.0
    if test == "max_degree":
        return degrees.max(axis=1).astype(np.float64)
    if test == "higher_criticism":
        cal = hc_calibration(params)
        ghc = (_exceed_counts(degrees, cal.cuts) - cal.null_mean) / cal.null_sd
        return ghc.max(axis=1)
    raise ValueError(f"unknown test {test!r}; expected one of {TESTS}")


def theoretical_threshold(
    test: str,
    params: ModelParams,
    signal_hint: Optional[SignalSpec] = None,
    *,
    delta: Optional[float] = None,
    level: Optional[float] = None,
) -> float:
    """Asymptotic rejection cut for ``test``.

    ``higher_criticism``: sqrt(log n).  ``total_degree``: (lambda s / 8) tanh(A/2),
    needs ``signal_hint``.  ``max_degree``: lambda/2 + sqrt((1+delta) lambda
    (1 - lambda/2n) log n).  ``max_degree_gumbel``: extreme-value cut at
    ``level``.
    """
    n, lam = params.n, params.lam
    logn = math.log(n)
    if test == "higher_criticism":
        return math.sqrt(logn)
    if test == "total_degree":
        if signal_hint is None:
            raise MissingHintError("total_degree threshold depends on the signal (s, A)")
        return lam * signal_hint.s / 8.0 * math.tanh(signal_hint.A / 2.0)
    if test == "max_degree":
        if delta is None or delta < 0:
            raise ValueError("max_degree threshold needs delta >= 0")
        return lam / 2.0 + math.sqrt((1.0 + delta) * lam * (1.0 - params.theta) * logn)
    if test == "max_degree_gumbel":
        if level is None or not 0.0 < level < 1.0:
            raise ValueError("max_degree_gumbel needs level in (0, 1)")
        if lam < logn**3:
            warnings.warn(
                f"lambda={lam} is below log(n)^3={logn ** 3:.3g}; the extreme-value limit is unreliable",
                RuntimeWarning,
                stacklevel=2,
            )
        p = params.theta
        dstar = -math.log(-math.log(1.0 - level))
        corr = 1.0 - (math.log(logn) + math.log(4.0 * math.pi)) / (4.0 * logn) + dstar / (2.0 * logn)
        return n * p + math.sqrt(2.0 * n * p * (1.0 - p) * logn) * corr
    raise ValueError(f"unknown test {test!r}")
