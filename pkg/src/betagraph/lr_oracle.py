"""Exact likelihood ratios and their second moments on tiny graphs.

``L_S`` is the density of the signal-on-S model against the null.  ``L_pi``
averages ``L_S`` over all s-subsets.  ``E_0 L_pi^2`` is computed two ways:
a sum over the overlap Z = |S1 & S2| with per-pair factors

    T = p1 p2 / p0 + (1 - p1)(1 - p2) / (1 - p0),

and brute-force enumeration of every graph on n <= 6 vertices.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .binomial import CapacityError
from .graph_model import ModelParams, edge_prob

__all__ = [
    "SecondMomentResult",
    "likelihood_ratio",
    "second_moment_formula",
    "moment_enum",
    "ENUM_MAX_N",
]

ENUM_MAX_N = 6
LR_MAX_N = 20


@dataclass(frozen=True)
class SecondMomentResult:
    value: float
    path: str
    n: int
    s: int
    A: float
    lam: float


def _check(n: int, s: int, A: float) -> None:
    if not 1 <= s < n:
        raise ValueError(f"need 1 <= s < n, got s={s}, n={n}")
    if A < 0:
        raise ValueError("A must be >= 0")


def _log_factors(params: ModelParams, A: float) -> dict[str, float]:
    """ln of the per-pair likelihood-ratio factors for an edge and a non-edge."""
    theta = params.theta
    q2 = edge_prob(A, A, params)
    q1 = edge_prob(A, 0.0, params)
    return {
        "in2": math.log(q2 / theta),
        "out2": math.log1p(-q2) - math.log1p(-theta),
        "in1": math.log(q1 / theta),
        "out1": math.log1p(-q1) - math.log1p(-theta),
    }


def _log_lr_counts(f, s, n, e_ss, e_sc):
    pairs_ss = s * (s - 1) // 2
    pairs_sc = s * (n - s)
    return (
        e_ss * f["in2"]
        + (pairs_ss - e_ss) * f["out2"]
        + e_sc * f["in1"]
        + (pairs_sc - e_sc) * f["out1"]
    )


def likelihood_ratio(edges: Iterable, support: Iterable[int], A: float, params: ModelParams) -> float:
    """dP_signal / dP_null at one graph, from edge counts inside S and across S, S^c."""
    n = params.n
    if n > LR_MAX_N:
        raise CapacityError(f"likelihood_ratio is a small-graph oracle (n <= {LR_MAX_N})")
    S = set(int(v) for v in support)
    _check(n, len(S), A)
    e_ss = e_sc = 0
    seen = set()
    for i, j in edges:
        i, j = int(i), int(j)
        if i == j or not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"invalid edge ({i}, {j})")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ValueError(f"duplicate edge {key}")
        seen.add(key)
        inside = (i in S) + (j in S)
        if inside == 2:
            e_ss += 1
        elif inside == 1:
            e_sc += 1
    return math.exp(_log_lr_counts(_log_factors(params, A), len(S), n, e_ss, e_sc))


def _log_T(pa: float, pb: float, p0: float) -> float:
    return math.log(pa * pb / p0 + (1.0 - pa) * (1.0 - pb) / (1.0 - p0))


def _log_comb(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def second_moment_formula(n: int, s: int, A: float, lam: float) -> SecondMomentResult:
    """E_0 L_pi^2 as a hypergeometric average over the overlap Z.

    Z ranges over max(0, 2s - n)..s, so every pair count below is
    non-negative, including Z (n - 2s + Z) when 2s > n.
    """
    params = ModelParams(n, lam)
    _check(n, s, A)
    p0 = params.theta
    q2 = edge_prob(A, A, params)
    q1 = edge_prob(A, 0.0, params)
    lt_22 = _log_T(q2, q2, p0)
    lt_21 = _log_T(q2, q1, p0)
    lt_11 = _log_T(q1, q1, p0)
    logs = []
    for z in range(max(0, 2 * s - n), s + 1):
        lw = _log_comb(s, z) + _log_comb(n - s, s - z) - _log_comb(n, s)
        body = (
            z * (z - 1) // 2 * lt_22
            + 2 * z * (s - z) * lt_21
            + (s - z) ** 2 * lt_11
            + z * (n - 2 * s + z) * lt_11
        )
        logs.append(lw + body)
    top = max(logs)
    value = math.exp(top) * math.fsum(math.exp(v - top) for v in logs)
    return SecondMomentResult(value, "formula", n, s, float(A), float(lam))


def moment_enum(n: int, s: int, A: float, lam: float, order: int = 2) -> SecondMomentResult:
    """E_0 L_pi^order by summing over all 2^(n(n-1)/2) graphs."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if n > ENUM_MAX_N:
        raise CapacityError(f"enumeration is limited to n <= {ENUM_MAX_N}, got n={n}")
    params = ModelParams(n, lam)
    _check(n, s, A)
    pairs = list(itertools.combinations(range(n), 2))
    m = len(pairs)
    codes = np.arange(1 << m, dtype=np.int64)
    Y = ((codes[:, None] >> np.arange(m)) & 1).astype(np.int64)
    n_edges = Y.sum(axis=1)
    theta = params.theta
    log_p0 = n_edges * math.log(theta) + (m - n_edges) * math.log1p(-theta)
    f = _log_factors(params, A)
    supports = list(itertools.combinations(range(n), s))
    lr = np.zeros(Y.shape[0])
    for S in supports:
        S = set(S)
        kind = np.array([(i in S) + (j in S) for i, j in pairs])
        e_ss = Y[:, kind == 2].sum(axis=1)
        e_sc = Y[:, kind == 1].sum(axis=1)
        lr += np.exp(_log_lr_counts(f, s, n, e_ss, e_sc))
    lr /= len(supports)
    terms = np.exp(log_p0) * lr**order
    return SecondMomentResult(math.fsum(terms.tolist()), "enumeration", n, s, float(A), float(lam))
