"""Boundary constants, strength parametrizations and exact HC moments.

The HC indicator ``D_i > t`` is evaluated on the integer degree scale:
``D_i > t  <=>  d_i >= degree_cut(params, t)`` with
``degree_cut = floor(m + t * sigma) + 1``, ``m = (n-1) theta`` and
``sigma = sqrt((n-1) theta (1-theta))``.  Every exact moment below and the
detector itself use this one function, so they cannot disagree at lattice
points.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .binomial import BinomialLaw, BinomialSumLaw, log_upper_tail, sum_log_pmf, sum_upper_tail
from .graph_model import ModelParams, SignalSpec, edge_prob

__all__ = [
    "DegenerateVarianceError",
    "SaturationError",
    "RegimeConstants",
    "regime_constants",
    "strength",
    "degree_scale",
    "degree_cut",
    "NullHcMoments",
    "null_hc_moments",
    "AltHcMoments",
    "alt_hc_moments",
    "total_degree_variance",
    "total_degree_variance_bound",
    "boundary_rows",
    "write_boundary_csv",
    "r_of_t",
    "hc_rate_point",
    "HcRatePoint",
]


class DegenerateVarianceError(ValueError):
    pass


class SaturationError(ValueError):
    """tanh-scale strength target >= 1: the boundary point is unreachable."""


# ---------------------------------------------------------------------------
# detection boundaries


@dataclass(frozen=True)
class RegimeConstants:
    alpha: float
    theta: float
    c_dense: float
    c_sparse: float
    c_max: float


def regime_constants(alpha: float, theta: float) -> RegimeConstants:
    """Dense, sparse (HC) and max-degree boundary constants.

    ``c_sparse`` is clamped at 0 for ``alpha <= 1/2`` where the linear branch
    would go negative; the sparse boundary is only meaningful above 1/2.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    if not 0.0 <= theta <= 0.5:
        raise ValueError(f"theta must lie in [0, 1/2], got {theta!r}")
    c_max = 16.0 * (1.0 - theta) * (1.0 - math.sqrt(1.0 - alpha)) ** 2
    if alpha < 0.75:
        c_sparse = max(0.0, 16.0 * (1.0 - theta) * (alpha - 0.5))
    else:
        c_sparse = c_max
    return RegimeConstants(alpha, theta, 0.5 - alpha, c_sparse, c_max)


def strength(params: ModelParams, mode: str, value: float, scale: str = "raw") -> float:
    """Signal strength A for a boundary coordinate.

    ``mode='dense_r'`` targets n^-r / sqrt(lambda); ``mode='sparse_C'`` targets
    sqrt(C log n / lambda).  On the tanh scale A = atanh(target).
    """
    n, lam = params.n, params.lam
    if mode == "dense_r":
        target = n ** (-value) / math.sqrt(lam)
    elif mode == "sparse_C":
        if value < 0:
            raise ValueError("C must be >= 0")
        target = math.sqrt(value * math.log(n) / lam)
    else:
        raise ValueError(f"unknown strength mode {mode!r}")
    if scale == "raw":
        return target
    if scale == "tanh":
        if target >= 1.0:
            raise SaturationError(
                f"tanh(A) target {target:.6g} >= 1 is unreachable at n={n}, lambda={lam}"
            )
        return math.atanh(target)
    raise ValueError(f"unknown scale {scale!r}")


def boundary_rows(theta: float, alpha_step: float) -> list[RegimeConstants]:
    """Constants on the grid alpha_step, 2*alpha_step, ... strictly inside (0, 1)."""
    if not 0.0 < alpha_step < 1.0:
        raise ValueError("alpha_step must lie in (0, 1)")
    count = int(math.floor(1.0 / alpha_step + 1e-9))
    alphas = [round(k * alpha_step, 12) for k in range(1, count + 1)]
    return [regime_constants(a, theta) for a in alphas if a < 1.0]


def write_boundary_csv(rows: Sequence[RegimeConstants], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["alpha", "c_dense", "c_sparse", "c_max"])
    for r in rows:
        w.writerow([repr(r.alpha), repr(r.c_dense), repr(r.c_sparse), repr(r.c_max)])


# ---------------------------------------------------------------------------
# HC moments


def degree_scale(params: ModelParams) -> tuple[float, float]:
    """Null mean and standard deviation of a single degree."""
    theta = params.theta
    var = (params.n - 1) * theta * (1.0 - theta)
    if var <= 0.0:
        raise DegenerateVarianceError("null degree variance is zero (theta = 1)")
    return (params.n - 1) * theta, math.sqrt(var)


def degree_cut(params: ModelParams, t: float) -> int:
    """Smallest integer degree with standardized value strictly above t."""
    m, sd = degree_scale(params)
    return int(math.floor(m + t * sd)) + 1


def _tail(law: BinomialLaw, k: int) -> float:
    return math.exp(log_upper_tail(law, k, strict=False))


def _point(law: BinomialLaw, k: int) -> float:
    return math.exp(sum_log_pmf(BinomialSumLaw([law]), k))


@dataclass(frozen=True)
class NullHcMoments:
    t: int
    cut: int
    a: float
    a_prime: float
    a_dprime: float
    gap: float
    b: float
    var_hc: float


def null_hc_moments(params: ModelParams, t: int) -> NullHcMoments:
    """Exact null survival, pair survival and Var HC(t) by conditioning on one edge.

    With R ~ Bin(n-2, theta) the degree of vertex 1 without edge {1,2}:
    a' = P(R >= k-1), a'' = P(R >= k), and a' - a'' = P(R = k-1).
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    n, theta = params.n, params.theta
    k = degree_cut(params, t)
    a = _tail(BinomialLaw(n - 1, theta), k)
    rest = BinomialLaw(n - 2, theta)
    a1 = _tail(rest, k - 1)
    a2 = _tail(rest, k)
    gap = _point(rest, k - 1)
    b = theta * a1 * a1 + (1.0 - theta) * a2 * a2
    var = n * a * (1.0 - a) + n * (n - 1) * theta * (1.0 - theta) * gap * gap
    return NullHcMoments(int(t), k, a, a1, a2, gap, b, var)


@dataclass(frozen=True)
class AltHcMoments:
    t: int
    cut: int
    a_null: float
    a_s: float
    a_c: float
    mean_hc: float
    t1: float
    t2: float
    t3: float
    t4: float
    t5: float
    var_hc: float


def _sum_law(parts) -> BinomialSumLaw:
    comps = [BinomialLaw(m, p) for m, p in parts if m > 0]
    return BinomialSumLaw(comps or [BinomialLaw(0, 0.0)])


def _sum_point(parts, k: int) -> float:
    return math.exp(sum_log_pmf(_sum_law(parts), k))


def alt_hc_moments(params: ModelParams, signal: SignalSpec, t: int) -> AltHcMoments:
    """Exact mean and five-term variance decomposition of HC(t) under a constant-A signal.

    t1, t2: diagonal terms over S and S^c.  t3, t4, t5: covariances over
    S x S, S^c x S^c and S x S^c pairs, each p(1-p) times the product of the
    two conditional pmf points at k-1.
    """
    n, s, theta = params.n, signal.s, params.theta
    if t < 1:
        raise ValueError("t must be >= 1")
    q2 = edge_prob(signal.A, signal.A, params)
    q1 = edge_prob(signal.A, 0.0, params)
    k = degree_cut(params, t)
    a0 = _tail(BinomialLaw(n - 1, theta), k)
    c = n - s
    a_s = sum_upper_tail(_sum_law([(s - 1, q2), (c, q1)]), k) if s > 0 else 0.0
    a_c = sum_upper_tail(_sum_law([(s, q1), (c - 1, theta)]), k) if c > 0 else 0.0
    mean = s * (a_s - a0) + c * (a_c - a0)
    t1 = s * a_s * (1.0 - a_s)
    t2 = c * a_c * (1.0 - a_c)
    t3 = t4 = t5 = 0.0
    if s >= 2:
        g = _sum_point([(s - 2, q2), (c, q1)], k - 1)
        t3 = s * (s - 1) * q2 * (1.0 - q2) * g * g
    if c >= 2:
        g = _sum_point([(s, q1), (c - 2, theta)], k - 1)
        t4 = c * (c - 1) * theta * (1.0 - theta) * g * g
    if s >= 1 and c >= 1:
        gs = _sum_point([(s - 1, q2), (c - 1, q1)], k - 1)
        gc = _sum_point([(s - 1, q1), (c - 1, theta)], k - 1)
        t5 = 2.0 * s * c * q1 * (1.0 - q1) * gs * gc
    return AltHcMoments(int(t), k, a0, a_s, a_c, mean, t1, t2, t3, t4, t5, t1 + t2 + t3 + t4 + t5)


# ---------------------------------------------------------------------------
# total degree


def total_degree_variance(params: ModelParams, signal: Optional[SignalSpec] = None) -> float:
    """Exact Var(sum of degrees) = 4 * sum_{i<j} p_ij (1 - p_ij)."""
    n = params.n
    s = 0 if signal is None else signal.s
    A = 0.0 if signal is None else signal.A
    c = n - s
    acc = 0.0
    for pairs, p in (
        (s * (s - 1) // 2, edge_prob(A, A, params)),
        (s * c, edge_prob(A, 0.0, params)),
        (c * (c - 1) // 2, params.theta),
    ):
        acc += pairs * p * (1.0 - p)
    return 4.0 * acc


def total_degree_variance_bound(params: ModelParams) -> float:
    return 2.0 * params.n * params.lam


# ---------------------------------------------------------------------------
# finite-n rate diagnostics


def r_of_t(t: float, n: int) -> float:
    """Invert t = sqrt(2 r log n)."""
    return t * t / (2.0 * math.log(n))


@dataclass(frozen=True)
class HcRatePoint:
    n: int
    t: int
    r: float
    log_var_ratio: float
    predicted_var: float
    log_mean_ratio: Optional[float]
    predicted_mean: Optional[float]
    snr: Optional[float]


def hc_rate_point(
    params: ModelParams, t: int, alpha: Optional[float] = None, C: Optional[float] = None
) -> HcRatePoint:
    """Observed log-rates of Var0 HC(t) and, with a signal, of the HC mean.

    Predictions: log Var0 / log n -> 1 - r and
    log mean / log n -> 1 - alpha - (sqrt(2r) - sqrt(C / (8 (1 - theta))))^2 / 2.
    """
    n = params.n
    logn = math.log(n)
    r = r_of_t(t, n)
    null = null_hc_moments(params, t)
    lv = math.log(null.var_hc) / logn if null.var_hc > 0 else -math.inf
    lm = pm = snr = None
    if alpha is not None and C is not None:
        from .graph_model import make_signal

        A = strength(params, "sparse_C", C, "raw")
        alt = alt_hc_moments(params, make_signal(params, alpha=alpha, A=A), t)
        lm = math.log(alt.mean_hc) / logn if alt.mean_hc > 0 else -math.inf
        theta = params.theta
        pm = 1.0 - alpha - (math.sqrt(2.0 * r) - math.sqrt(C / (8.0 * (1.0 - theta)))) ** 2 / 2.0
        snr = alt.mean_hc / math.sqrt(alt.var_hc) if alt.var_hc > 0 else math.inf
    return HcRatePoint(n, int(t), r, lv, 1.0 - r, lm, pm, snr)
