"""Exact binomial and binomial-convolution probabilities in log space.

Point probabilities use the saddle-point expansion of Loader (2000), which keeps
relative accuracy near machine precision for millions of trials where the
naive log-gamma difference loses ~8 digits to cancellation.  Tail sums are
accumulated from log terms with a rescaled ``math.fsum``.

Real-valued thresholds resolve to the integer support as
``P(X > t) = P(X >= floor(t) + 1)`` and ``P(X >= t) = P(X >= ceil(t))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "BinomialLaw",
    "BinomialSumLaw",
    "CapacityError",
    "log_pmf",
    "log_pmf_array",
    "upper_tail",
    "log_upper_tail",
    "sum_log_pmf",
    "sum_upper_tail",
    "log_sum_upper_tail",
    "tilted_restricted_mean",
    "tilted_restricted_mean_direct",
    "tail_rate_exponent",
    "threshold_cut",
    "SUM_TRIALS_BUDGET",
]

SUM_TRIALS_BUDGET = 10**6
# terms more than exp(-60) below the running maximum do not move a double
_NEGLIGIBLE = 60.0
_LN_2PI = math.log(2.0 * math.pi)


class CapacityError(ValueError):
    """Raised when an exact computation would exceed its size budget."""


@dataclass(frozen=True)
class BinomialLaw:
    trials: int
    success_prob: float

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 0:
            raise ValueError(f"trials must be a non-negative integer, got {self.trials!r}")
        if not 0.0 <= self.success_prob <= 1.0:
            raise ValueError(f"success_prob must lie in [0, 1], got {self.success_prob!r}")
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "success_prob", float(self.success_prob))

    @property
    def mean(self) -> float:
        return self.trials * self.success_prob

    @property
    def variance(self) -> float:
        return self.trials * self.success_prob * (1.0 - self.success_prob)


@dataclass(frozen=True)
class BinomialSumLaw:
    """Law of a sum of mutually independent binomials."""

    components: tuple[BinomialLaw, ...]

    def __init__(self, components: Iterable[BinomialLaw | tuple[int, float]]):
        comps = tuple(c if isinstance(c, BinomialLaw) else BinomialLaw(*c) for c in components)
        if not comps:
            raise ValueError("BinomialSumLaw needs at least one component")
        object.__setattr__(self, "components", comps)

    @property
    def trials(self) -> int:
        return sum(c.trials for c in self.components)

    @property
    def mean(self) -> float:
        return sum(c.mean for c in self.components)

    @property
    def variance(self) -> float:
        return sum(c.variance for c in self.components)


# ---------------------------------------------------------------------------
# saddle-point pieces


def _stirlerr_small(k: int) -> float:
    return math.lgamma(k + 1.0) - (k + 0.5) * math.log(k) + k - 0.5 * _LN_2PI


_STIRLERR_TABLE = [0.0] + [_stirlerr_small(k) for k in range(1, 16)]

_S0 = 1.0 / 12.0
_S1 = 1.0 / 360.0
_S2 = 1.0 / 1260.0
_S3 = 1.0 / 1680.0
_S4 = 1.0 / 1188.0


def _stirlerr(k: np.ndarray) -> np.ndarray:
    """log(k!) - log(sqrt(2 pi k) (k/e)^k) for integer k >= 0."""
    k = np.asarray(k, dtype=np.float64)
    out = np.empty_like(k)
    small = k <= 15
    if small.any():
        out[small] = np.take(_STIRLERR_TABLE, k[small].astype(np.int64))
    big = ~small
    if big.any():
        kb = k[big]
        kk = kb * kb
        r = np.where(
            kb > 500,
            (_S0 - _S1 / kk) / kb,
            np.where(
                kb > 80,
                (_S0 - (_S1 - _S2 / kk) / kk) / kb,
                np.where(
                    kb > 35,
                    (_S0 - (_S1 - (_S2 - _S3 / kk) / kk) / kk) / kb,
                    (_S0 - (_S1 - (_S2 - (_S3 - _S4 / kk) / kk) / kk) / kk) / kb,
                ),
            ),
        )
        out[big] = r
    return out


def _bd0(x: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Deviance term x log(x/m) + m - x, evaluated without cancellation."""
    x = np.asarray(x, dtype=np.float64)
    m = np.broadcast_to(np.asarray(m, dtype=np.float64), x.shape)
    out = np.empty_like(x)
    near = np.abs(x - m) < 0.1 * (x + m)
    far = ~near
    if far.any():
        xf, mf = x[far], m[far]
        with np.errstate(divide="ignore", invalid="ignore"):
            out[far] = np.where(xf > 0, xf * np.log(xf / mf), 0.0) + mf - xf
    if near.any():
        xn, mn = x[near], m[near]
        v = (xn - mn) / (xn + mn)
        s = (xn - mn) * v
        ej = 2.0 * xn * v
        v2 = v * v
        for j in range(1, 60):
            ej = ej * v2
            s_new = s + ej / (2 * j + 1)
            if np.array_equal(s_new, s):
                break
            s = s_new
        out[near] = s
    return out


def _two_prod(a: float, b: float) -> tuple[float, float]:
    """Error-free product: a*b == hi + lo exactly (Dekker)."""
    hi = a * b
    c = 134217729.0 * a
    ah = c - (c - a)
    al = a - ah
    c = 134217729.0 * b
    bh = c - (c - b)
    bl = b - bh
    lo = ((ah * bh - hi) + ah * bl + al * bh) + al * bl
    return hi, lo


def log_pmf_array(trials: int, p: float, ks) -> np.ndarray:
    """Vectorised natural-log pmf of Bin(trials, p) at integer points ``ks``."""
    n = int(trials)
    k = np.atleast_1d(np.asarray(ks, dtype=np.float64))
    out = np.full(k.shape, -np.inf)
    inside = (k >= 0) & (k <= n) & (k == np.floor(k))
    if not inside.any():
        return out
    q = 1.0 - p
    if p == 0.0:
        out[inside & (k == 0)] = 0.0
        return out
    if q == 0.0:
        out[inside & (k == n)] = 0.0
        return out
    lo = inside & (k == 0)
    hi = inside & (k == n) & ~lo
    mid = inside & ~lo & ~hi
    if lo.any():
        out[lo] = (-_bd0(np.array([n]), n * q)[0] - n * p) if p < 0.1 else n * math.log1p(-p)
    if hi.any():
        out[hi] = (-_bd0(np.array([n]), n * p)[0] - n * q) if q < 0.1 else n * math.log(p)
    if mid.any() and min(n * p, n * q) < 1e-200:
        # bd0 and the two-product split underflow; lgamma is exact enough here
        km = k[mid]
        out[mid] = (
            math.lgamma(n + 1)
            - np.array([math.lgamma(x + 1) + math.lgamma(n - x + 1) for x in km])
            + km * math.log(p)
            + (n - km) * math.log1p(-p)
        )
    elif mid.any():
        km = k[mid]
        nk = n - km
        # n*p and n*q carry rounding error that bd0 amplifies at large n
        np_hi, np_lo = _two_prod(float(n), p)
        nq_hi, nq_lo = _two_prod(float(n), q)
        nq_lo += n * ((1.0 - q) - p)
        lc = (
            _stirlerr(np.array([n], dtype=np.float64))[0]
            - _stirlerr(km)
            - _stirlerr(nk)
            - _bd0(km, np_hi)
            - _bd0(nk, nq_hi)
            - (1.0 - km / np_hi) * np_lo
            - (1.0 - nk / nq_hi) * nq_lo
        )
        lf = _LN_2PI + np.log(km) + np.log1p(-km / n)
        out[mid] = lc - 0.5 * lf
    return out


def log_pmf(law: BinomialLaw, k: int) -> float:
    """ln P(X = k); ``-inf`` outside the support."""
    if k != math.floor(k):
        return -math.inf
    return float(log_pmf_array(law.trials, law.success_prob, [k])[0])


def _log_sum(logs: np.ndarray) -> float:
    logs = np.asarray(logs, dtype=np.float64)
    if logs.size == 0:
        return -math.inf
    top = float(np.max(logs))
    if top == -math.inf:
        return -math.inf
    return top + math.log(math.fsum(np.exp(logs - top)))


def threshold_cut(threshold: float, strict: bool) -> float:
    """Smallest integer k counted by ``X > t`` (strict) or ``X >= t``."""
    if math.isinf(threshold):
        return threshold
    return math.floor(threshold) + 1 if strict else math.ceil(threshold)


def _log_tail_from(n: int, p: float, k0: int, direction: int) -> float:
    """log of sum_{k >= k0} (direction=+1) or sum_{k <= k0} (direction=-1).

    Terms must be monotone decreasing in the walking direction past ``k0``.
    """
    sd = math.sqrt(max(n * p * (1.0 - p), 1.0))
    block = int(8 * sd) + 64
    parts: list[float] = []
    start = k0
    first = None
    while True:
        if direction > 0:
            stop = min(n, start + block)
            ks = np.arange(start, stop + 1)
        else:
            stop = max(0, start - block)
            ks = np.arange(start, stop - 1, -1)
        logs = log_pmf_array(n, p, ks)
        parts.append(_log_sum(logs))
        if first is None:
            first = float(logs[0])
        last = float(logs[-1])
        done = (direction > 0 and stop == n) or (direction < 0 and stop == 0)
        if done or last < first - _NEGLIGIBLE or last == -math.inf:
            break
        start = stop + direction
    return _log_sum(np.array(parts))


def log_upper_tail(law: BinomialLaw, threshold: float, strict: bool = False) -> float:
    """ln P(X > t) (strict) or ln P(X >= t)."""
    n, p = law.trials, law.success_prob
    k0 = threshold_cut(threshold, strict)
    if k0 <= 0:
        return 0.0
    if k0 > n:
        return -math.inf
    k0 = int(k0)
    if p == 0.0:
        return -math.inf
    if p == 1.0:
        return 0.0
    if k0 > n * p:
        return _log_tail_from(n, p, k0, +1)
    lower = math.exp(_log_tail_from(n, p, k0 - 1, -1))
    return math.log1p(-lower) if lower < 1.0 else -math.inf


def upper_tail(law: BinomialLaw, threshold: float, strict: bool = False) -> float:
    """P(X > t) (strict) or P(X >= t), exact to ~1e-13 relative."""
    return math.exp(log_upper_tail(law, threshold, strict))


# ---------------------------------------------------------------------------
# independent sums


def _split_components(law: BinomialSumLaw):
    shift = 0
    random = []
    for c in law.components:
        if c.trials == 0 or c.success_prob == 0.0:
            continue
        if c.success_prob == 1.0:
            shift += c.trials
        else:
            random.append(c)
    return shift, random


def _check_budget(law: BinomialSumLaw) -> None:
    if law.trials > SUM_TRIALS_BUDGET:
        raise CapacityError(
            f"exact convolution over {law.trials} trials exceeds the budget of {SUM_TRIALS_BUDGET}"
        )


def _log_pmf_convolution(comps: Sequence[BinomialLaw]) -> np.ndarray:
    """Full log pmf of a sum of binomials by direct (non-FFT) convolution."""
    logp = np.zeros(1)
    for c in comps:
        lc = log_pmf_array(c.trials, c.success_prob, np.arange(c.trials + 1))
        ma, mb = float(np.max(logp)), float(np.max(lc))
        with np.errstate(under="ignore"):
            conv = np.convolve(np.exp(logp - ma), np.exp(lc - mb))
        with np.errstate(divide="ignore"):
            logp = np.log(conv) + ma + mb
    return logp


def _log_survival_range(law: BinomialLaw, klo: int, khi: int) -> np.ndarray:
    """ln P(Y >= k) for k = klo..khi."""
    n, p = law.trials, law.success_prob
    ks = np.arange(klo, khi + 1)
    out = np.empty(ks.size)
    out[ks <= 0] = 0.0
    out[ks > n] = -math.inf
    body = (ks > 0) & (ks <= n)
    if not body.any():
        return out
    a = int(ks[body][0])
    b = int(ks[body][-1])
    # extend past b until terms are negligible
    end = b
    sd = math.sqrt(max(n * p * (1.0 - p), 1.0))
    top_ref = float(log_pmf_array(n, p, [max(b, min(n, int(n * p)))])[0])
    while end < n:
        end = min(n, end + int(8 * sd) + 64)
        if float(log_pmf_array(n, p, [end])[0]) < top_ref - _NEGLIGIBLE and end > n * p:
            break
    logs = log_pmf_array(n, p, np.arange(a, end + 1))
    surv = np.logaddexp.accumulate(logs[::-1])[::-1]
    out[body] = surv[: b - a + 1]
    # survivals near one: recompute through the complement for relative accuracy
    low = out[body] > -0.7
    if low.any():
        idx = np.flatnonzero(body)[low]
        for i in idx:
            out[i] = log_upper_tail(law, float(ks[i]), strict=False)
    return out


def sum_log_pmf(law: BinomialSumLaw, k: int) -> float:
    """ln P(sum = k)."""
    _check_budget(law)
    shift, comps = _split_components(law)
    k = k - shift
    if not comps:
        return 0.0 if k == 0 else -math.inf
    if k < 0 or k > sum(c.trials for c in comps) or k != math.floor(k):
        return -math.inf
    comps = sorted(comps, key=lambda c: c.trials)
    big, rest = comps[-1], comps[:-1]
    lx = _log_pmf_convolution(rest)
    xs = np.arange(lx.size)
    ly = log_pmf_array(big.trials, big.success_prob, k - xs)
    return _log_sum(lx + ly)


def log_sum_upper_tail(law: BinomialSumLaw, threshold: float, strict: bool = False) -> float:
    _check_budget(law)
    k0 = threshold_cut(threshold, strict)
    shift, comps = _split_components(law)
    if k0 == -math.inf:
        return 0.0
    if k0 == math.inf:
        return -math.inf
    k = int(k0) - shift
    if k <= 0:
        return 0.0
    if not comps or k > sum(c.trials for c in comps):
        return -math.inf
    if len(comps) == 1:
        return log_upper_tail(comps[0], k, strict=False)
    comps = sorted(comps, key=lambda c: c.trials)
    big, rest = comps[-1], comps[:-1]
    lx = _log_pmf_convolution(rest)
    nx = lx.size - 1
    # P(X + Y >= k) = sum_x P(X = x) P(Y >= k - x)
    ls = _log_survival_range(big, k - nx, k)[::-1]
    return _log_sum(lx + ls)


def sum_upper_tail(law: BinomialSumLaw, threshold: float, strict: bool = False) -> float:
    """Exact tail of an independent binomial sum; raises CapacityError past the budget."""
    return math.exp(log_sum_upper_tail(law, threshold, strict))


# ---------------------------------------------------------------------------
# change of measure and tail rates


def _as_int_set(B) -> list[int]:
    return sorted({int(b) for b in B})


def tilted_restricted_mean(law: BinomialLaw, a: float, B) -> float:
    """E[a^X 1{X in B}] through the tilted law Bin(n, ap/(ap + 1 - p))."""
    if a <= 0:
        raise ValueError("a must be positive")
    n, p = law.trials, law.success_prob
    ks = [k for k in _as_int_set(B) if 0 <= k <= n]
    if not ks:
        return 0.0
    norm = a * p + (1.0 - p)
    tilted = a * p / norm
    logs = log_pmf_array(n, tilted, ks)
    return math.exp(n * math.log(norm) + _log_sum(logs))


def tilted_restricted_mean_direct(law: BinomialLaw, a: float, B) -> float:
    """Same expectation by direct summation of a^k P(X = k)."""
    if a <= 0:
        raise ValueError("a must be positive")
    n, p = law.trials, law.success_prob
    ks = np.array([k for k in _as_int_set(B) if 0 <= k <= n], dtype=np.float64)
    if ks.size == 0:
        return 0.0
    logs = log_pmf_array(n, p, ks) + ks * math.log(a)
    return math.exp(_log_sum(logs))


def tail_rate_exponent(trials: int, p: float, C: float) -> float:
    """-log P(X >= np + C sqrt(np(1-p) log n)) / log n with n = trials."""
    n = int(trials)
    logn = math.log(n)
    thr = n * p + C * math.sqrt(n * p * (1.0 - p) * logn)
    return -log_upper_tail(BinomialLaw(n, p), thr, strict=False) / logn
