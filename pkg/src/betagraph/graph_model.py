"""Sparse beta-model: edge probabilities, signals, sampling and degree laws.

Vertices are 0-based.  Unordered pairs ``(i, j)``, ``i < j``, are ranked
row-major: ``(0,1), (0,2), ..., (0,n-1), (1,2), ...``.  A sample is a pure
function of ``(params, signal, seed)``; the seed initialises a PCG64 stream.

Two samplers exist:

* coupled: one uniform per pair, drawn in pair-rank order, edge iff
  ``u < p_ij``.  Every degree is then pathwise non-decreasing in ``A`` for a
  fixed seed.  Needed for edge lists.
* skip: geometric skipping over the three homogeneous blocks S x S,
  S x S^c, S^c x S^c in that order.  Expected cost O(n + #edges).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .binomial import BinomialLaw, BinomialSumLaw

__all__ = [
    "ModelParams",
    "SignalSpec",
    "GraphSample",
    "InvalidSparsityError",
    "expit",
    "edge_prob",
    "make_signal",
    "null_signal",
    "sample_graph",
    "sample_degrees_batch",
    "sample_graph_generic",
    "degree_law",
    "pair_index",
    "write_degrees_csv",
    "write_edges_csv",
    "read_degrees_csv",
    "read_edges_csv",
]


class InvalidSparsityError(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    n: int
    lam: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")
        if not 1.0 <= self.lam <= self.n:
            raise ValueError(f"lambda must lie in [1, n], got {self.lam!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def theta(self) -> float:
        """Null edge probability lambda / 2n."""
        return self.lam / (2.0 * self.n)

    @property
    def n_pairs(self) -> int:
        return self.n * (self.n - 1) // 2


@dataclass(frozen=True)
class SignalSpec:
    """beta_i = A on ``support`` and 0 elsewhere."""

    s: int
    A: float
    support: tuple[int, ...]
    alpha: Optional[float] = None

    def __post_init__(self):
        support = tuple(sorted(int(v) for v in self.support))
        if len(set(support)) != len(support) or len(support) != self.s:
            raise ValueError(f"support must hold {self.s} distinct vertices")
        if self.A < 0 or math.isnan(self.A):
            raise ValueError(f"A must be >= 0, got {self.A!r}")
        object.__setattr__(self, "support", support)

    def check(self, params: ModelParams) -> None:
        if not 0 <= self.s < params.n:
            raise InvalidSparsityError(f"s={self.s} outside [0, {params.n})")
        if self.support and not 0 <= self.support[0] <= self.support[-1] < params.n:
            raise ValueError("support vertices outside [0, n)")

    def beta(self, n: int) -> np.ndarray:
        b = np.zeros(n)
        b[list(self.support)] = self.A
        return b

    def labels(self, n: int) -> np.ndarray:
        lab = np.zeros(n, dtype=np.int64)
        lab[list(self.support)] = 1
        return lab


@dataclass
class GraphSample:
    degrees: np.ndarray
    seed: int
    edges: Optional[np.ndarray] = None

    def __eq__(self, other):
        if not isinstance(other, GraphSample):
            return NotImplemented
        if self.seed != other.seed or not np.array_equal(self.degrees, other.degrees):
            return False
        if (self.edges is None) != (other.edges is None):
            return False
        return self.edges is None or np.array_equal(self.edges, other.edges)

    @property
    def n(self) -> int:
        return int(self.degrees.shape[0])


def expit(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def edge_prob(beta_i: float, beta_j: float, params: ModelParams) -> float:
    """(lambda/n) * expit(beta_i + beta_j)."""
    x = beta_i + beta_j
    if x == math.inf:
        return params.lam / params.n
    return (params.lam / params.n) * expit(x)


def null_signal() -> SignalSpec:
    return SignalSpec(0, 0.0, ())


def make_signal(
    params: ModelParams,
    *,
    alpha: Optional[float] = None,
    s: Optional[int] = None,
    A: float,
    placement: str = "first_s",
    seed: Optional[int] = None,
) -> SignalSpec:
    """Constant-strength signal with s = round_half_up(n^(1-alpha)) or given s."""
    if (alpha is None) == (s is None):
        raise ValueError("give exactly one of alpha or s")
    if alpha is not None:
        if not 0.0 < alpha < 1.0:
            raise InvalidSparsityError(f"alpha must lie in (0, 1), got {alpha!r}")
        x = params.n ** (1.0 - alpha)
        # tolerance so an exact half that pow rounds down still rounds up
        s = int(math.floor(x + 0.5 + 1e-9 * x))
        if not 1 <= s <= params.n - 1:
            raise InvalidSparsityError(f"alpha={alpha} gives s={s} outside [1, {params.n - 1}]")
    s = int(s)
    if not 0 <= s < params.n:
        raise InvalidSparsityError(f"s={s} outside [0, {params.n})")
    if placement == "first_s":
        support = tuple(range(s))
    elif placement == "seeded_random":
        if seed is None:
            raise ValueError("seeded_random placement needs a seed")
        rng = np.random.Generator(np.random.PCG64(seed))
        support = tuple(int(v) for v in np.sort(rng.choice(params.n, size=s, replace=False)))
    else:
        raise ValueError(f"unknown placement {placement!r}")
    return SignalSpec(s, float(A), support, alpha)


@lru_cache(maxsize=32)
def _pair_arrays(n: int) -> tuple[np.ndarray, np.ndarray]:
    i, j = np.triu_indices(n, 1)
    return i.astype(np.int64), j.astype(np.int64)


def pair_index(i: int, j: int, n: int) -> int:
    """Row-major rank of the pair {i, j}."""
    if i > j:
        i, j = j, i
    return i * (n - 1) - i * (i - 1) // 2 + (j - i - 1)


def _class_table(params: ModelParams, A: float) -> np.ndarray:
    return np.array(
        [
            [edge_prob(0.0, 0.0, params), edge_prob(0.0, A, params)],
            [edge_prob(A, 0.0, params), edge_prob(A, A, params)],
        ]
    )


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def _coupled(n, labels, table, rng, keep_edges):
    u = rng.random(n * (n - 1) // 2)
    degrees, mask = kernels.coupled_degrees(u, labels, table, keep_edges)
    edges = None
    if keep_edges:
        i, j = _pair_arrays(n)
        edges = np.column_stack((i[mask], j[mask]))
    return degrees, edges


def _skip_block(rng, p, total, walk, degrees) -> None:
    if total == 0 or p <= 0.0:
        return
    chunk = int(total * p + 5.0 * math.sqrt(total * p) + 16)
    cursor = 0
    while cursor < total:
        gaps = rng.geometric(p, size=chunk).astype(np.int64)
        cursor = walk(gaps, cursor, degrees)


def sample_graph(
    params: ModelParams,
    signal: SignalSpec,
    seed: int,
    keep_edges: bool = False,
    coupled: bool = False,
) -> GraphSample:
    """Draw one graph from P_{beta, lambda} with beta constant on the support."""
    signal.check(params)
    n = params.n
    if keep_edges or coupled:
        table = _class_table(params, signal.A)
        degrees, edges = _coupled(n, signal.labels(n), table, _rng(seed), keep_edges)
        return GraphSample(degrees, int(seed), edges)
    degrees = sample_degrees_batch(params, signal, [seed])[0]
    return GraphSample(degrees, int(seed), None)


def sample_degrees_batch(params: ModelParams, signal: SignalSpec, seeds: Sequence[int]) -> np.ndarray:
    """Degree sequences for many seeds, row r equal to ``sample_graph(..., seeds[r]).degrees``."""
    signal.check(params)
    n = params.n
    table = _class_table(params, signal.A)
    inside = np.asarray(signal.support, dtype=np.int64)
    outside = np.setdiff1d(np.arange(n, dtype=np.int64), inside)
    s, m = inside.size, outside.size
    blocks = (
        (table[1, 1], s * (s - 1) // 2, lambda g, c, d: kernels.walk_triangle(g, c, inside, d)),
        (table[1, 0], s * m, lambda g, c, d: kernels.walk_rectangle(g, c, inside, outside, d)),
        (table[0, 0], m * (m - 1) // 2, lambda g, c, d: kernels.walk_triangle(g, c, outside, d)),
    )
    out = np.zeros((len(seeds), n), dtype=np.int64)
    for r, seed in enumerate(seeds):
        rng = _rng(seed)
        row = out[r]
        for p, total, walk in blocks:
            _skip_block(rng, p, total, walk, row)
    return out


def sample_graph_generic(
    params: ModelParams, beta: Sequence[float], seed: int, keep_edges: bool = False
) -> GraphSample:
    """Coupled O(n^2) sampler for arbitrary beta vectors (correctness path)."""
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (params.n,):
        raise ValueError("beta must have length n")
    values, labels = np.unique(beta, return_inverse=True)
    table = np.array([[edge_prob(a, b, params) for b in values] for a in values])
    degrees, edges = _coupled(params.n, labels.astype(np.int64), table, _rng(seed), keep_edges)
    return GraphSample(degrees, int(seed), edges)


def _law(parts) -> BinomialSumLaw:
    merged: dict[float, int] = {}
    for trials, p in parts:
        if trials > 0:
            merged[p] = merged.get(p, 0) + trials
    if not merged:
        return BinomialSumLaw([BinomialLaw(0, 0.0)])
    return BinomialSumLaw([BinomialLaw(t, p) for p, t in merged.items()])


def degree_law(vertex_class: str, params: ModelParams, signal: SignalSpec) -> BinomialSumLaw:
    """Exact marginal law of one vertex degree; ``in_support`` or ``off_support``."""
    n, s = params.n, signal.s
    q_ss = edge_prob(signal.A, signal.A, params)
    q_sc = edge_prob(signal.A, 0.0, params)
    theta = params.theta
    if vertex_class == "in_support":
        if s < 1:
            raise ValueError("empty support has no in-support vertex")
        return _law([(s - 1, q_ss), (n - s, q_sc)])
    if vertex_class == "off_support":
        return _law([(s, q_sc), (n - s - 1, theta)])
    raise ValueError(f"unknown vertex class {vertex_class!r}")


# ---------------------------------------------------------------------------
# CSV


def write_degrees_csv(sample: GraphSample, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["vertex", "degree"])
    for v, d in enumerate(sample.degrees.tolist()):
        w.writerow([v, d])


def write_edges_csv(sample: GraphSample, fh) -> None:
    if sample.edges is None:
        raise ValueError("sample carries no edge list; draw it with keep_edges=True")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["i", "j"])
    for i, j in sample.edges.tolist():
        w.writerow([i, j])


def read_degrees_csv(fh) -> np.ndarray:
    rows = list(csv.reader(fh))
    if not rows or rows[0] != ["vertex", "degree"]:
        raise ValueError("expected header 'vertex,degree'")
    body = sorted((int(v), int(d)) for v, d in rows[1:])
    if [v for v, _ in body] != list(range(len(body))):
        raise ValueError("vertex column must list 0..n-1")
    return np.array([d for _, d in body], dtype=np.int64)


def read_edges_csv(fh) -> np.ndarray:
    rows = list(csv.reader(fh))
    if not rows or rows[0] != ["i", "j"]:
        raise ValueError("expected header 'i,j'")
    edges = np.array([[int(a), int(b)] for a, b in rows[1:]], dtype=np.int64).reshape(-1, 2)
    if edges.size and np.any(edges[:, 0] >= edges[:, 1]):
        raise ValueError("edges must satisfy i < j")
    return edges
