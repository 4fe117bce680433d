"""Monte Carlo engine: null calibration, power, risk and power grids.

Seeding: replicate ``rep`` of cell ``(ai, si)`` for a test is drawn from
``SeedSequence(master_seed, spawn_key=(phase, test_code, ai, si, rep))``.
Phase 0 is null calibration, 1 is the alternative, 2 is the null half of a
risk estimate.  A cell therefore never depends on which worker computed it
or on how many cells came before it.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .detectors import TESTS, batch_stat
from .graph_model import ModelParams, SignalSpec, make_signal, null_signal, sample_degrees_batch
from .theory import SaturationError, regime_constants, strength

__all__ = [
    "SimConfig",
    "GridCell",
    "PowerGrid",
    "PowerEstimate",
    "RiskEstimate",
    "arith_grid",
    "replicate_seeds",
    "null_statistics",
    "calibrate",
    "estimate_power",
    "estimate_risk",
    "risk_components",
    "run_grid",
    "persist_grid",
    "load_grid",
]

TestLike = Union[str, Callable[[np.ndarray, ModelParams], np.ndarray]]

PHASE_CALIBRATE, PHASE_POWER, PHASE_RISK_NULL = 0, 1, 2
_TEST_CODES = {name: i for i, name in enumerate(TESTS)}
_STUB_CODE = 1000


def arith_grid(lo: float, step: float, count: int) -> tuple[float, ...]:
    """lo, lo + step, ..., rounded to 10 decimals so grid values print cleanly."""
    if count < 1:
        raise ValueError("grid count must be >= 1")
    return tuple(round(lo + step * i, 10) for i in range(count))


def _test_code(test: TestLike) -> int:
    if callable(test):
        return _STUB_CODE
    if test not in _TEST_CODES:
        raise ValueError(f"unknown test {test!r}; expected one of {TESTS}")
    return _TEST_CODES[test]


def _test_name(test: TestLike) -> str:
    return test if isinstance(test, str) else getattr(test, "__name__", "stub")


def replicate_seeds(master_seed: int, phase: int, test: TestLike, ai: int, si: int, reps: int) -> list[int]:
    code = _test_code(test)
    return [
        int(
            np.random.SeedSequence(int(master_seed), spawn_key=(phase, code, ai, si, r)).generate_state(
                1, np.uint64
            )[0]
        )
        for r in range(reps)
    ]


def _statistics(test: TestLike, params: ModelParams, signal: SignalSpec, seeds) -> np.ndarray:
    degrees = sample_degrees_batch(params, signal, seeds)
    if callable(test):
        return np.asarray(test(degrees, params), dtype=np.float64)
    return batch_stat(test, degrees, params)


def null_statistics(test: TestLike, params: ModelParams, reps: int, seed: int) -> np.ndarray:
    seeds = replicate_seeds(seed, PHASE_CALIBRATE, test, 0, 0, reps)
    return _statistics(test, params, null_signal(), seeds)


def _higher_quantile(values: np.ndarray, level: float) -> float:
    """Smallest order statistic with at least (1 - level) of the mass at or below it."""
    v = np.sort(values)
    k = max(1, math.ceil((1.0 - level) * v.size - 1e-9))
    return float(v[k - 1])


def calibrate(test: TestLike, params: ModelParams, level: float, reps: int, seed: int) -> float:
    """Empirical (1 - level) null quantile of the statistic."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    if reps < 20:
        raise ValueError("calibration needs reps >= 20")
    return _higher_quantile(null_statistics(test, params, reps, seed), level)


@dataclass(frozen=True)
class PowerEstimate:
    power: float
    ci_halfwidth: float


def _ci(p: float, reps: int) -> float:
    return 1.96 * math.sqrt(p * (1.0 - p) / reps)


def _power_cell(test, params, signal, threshold, reps, seed, ai=0, si=0) -> PowerEstimate:
    if reps < 1:
        raise ValueError("reps must be >= 1")
    seeds = replicate_seeds(seed, PHASE_POWER, test, ai, si, reps)
    hits = int(np.count_nonzero(_statistics(test, params, signal, seeds) > threshold))
    p = hits / reps
    return PowerEstimate(p, _ci(p, reps))


def estimate_power(
    test: TestLike, params: ModelParams, signal: SignalSpec, threshold: float, reps: int, seed: int
) -> PowerEstimate:
    """Fraction of alternative samples whose statistic exceeds ``threshold``."""
    return _power_cell(test, params, signal, threshold, reps, seed)


@dataclass(frozen=True)
class RiskEstimate:
    type_one: float
    power: float

    @property
    def type_two(self) -> float:
        return 1.0 - self.power

    @property
    def risk(self) -> float:
        return self.type_one + self.type_two


def risk_components(
    test: TestLike, params: ModelParams, signal: SignalSpec, threshold: float, reps: int, seed: int
) -> RiskEstimate:
    seeds = replicate_seeds(seed, PHASE_RISK_NULL, test, 0, 0, reps)
    null = _statistics(test, params, null_signal(), seeds)
    type_one = int(np.count_nonzero(null > threshold)) / reps
    power = estimate_power(test, params, signal, threshold, reps, seed).power
    return RiskEstimate(type_one, power)


def estimate_risk(
    test: TestLike, params: ModelParams, signal: SignalSpec, threshold: float, reps: int, seed: int
) -> float:
    """Type-I plus type-II error at the signal point."""
    return risk_components(test, params, signal, threshold, reps, seed).risk


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams
    test: TestLike
    level: float
    calib_reps: int
    power_reps: int
    master_seed: int
    alpha_grid: tuple[float, ...]
    strength_grid: tuple[float, ...]
    strength_mode: str = "sparse_C"
    scale: str = "raw"

    def __post_init__(self):
        object.__setattr__(self, "alpha_grid", tuple(float(a) for a in self.alpha_grid))
        object.__setattr__(self, "strength_grid", tuple(float(v) for v in self.strength_grid))
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must lie in (0, 1)")
        if self.calib_reps < 1 or self.power_reps < 1:
            raise ValueError("reps must be >= 1")
        if not self.alpha_grid or not self.strength_grid:
            raise ValueError("grids must be non-empty")
        if self.strength_mode not in ("dense_r", "sparse_C"):
            raise ValueError(f"unknown strength mode {self.strength_mode!r}")
        if self.scale not in ("raw", "tanh"):
            raise ValueError(f"unknown scale {self.scale!r}")
        _test_code(self.test)

    def to_dict(self) -> dict:
        return {
            "n": self.params.n,
            "lambda": self.params.lam,
            "test": _test_name(self.test),
            "level": self.level,
            "calib_reps": self.calib_reps,
            "power_reps": self.power_reps,
            "master_seed": self.master_seed,
            "alpha_grid": list(self.alpha_grid),
            "strength_grid": list(self.strength_grid),
            "strength_mode": self.strength_mode,
            "scale": self.scale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        return cls(
            ModelParams(int(d["n"]), float(d["lambda"])),
            d["test"],
            float(d["level"]),
            int(d["calib_reps"]),
            int(d["power_reps"]),
            int(d["master_seed"]),
            tuple(d["alpha_grid"]),
            tuple(d["strength_grid"]),
            d["strength_mode"],
            d["scale"],
        )


@dataclass(frozen=True)
class GridCell:
    alpha: float
    strength: float
    s: int
    A: Optional[float]
    power: Optional[float]
    ci: Optional[float]


@dataclass(frozen=True)
class PowerGrid:
    config: Optional[SimConfig]
    cells: tuple[GridCell, ...]
    threshold: Optional[float]
    boundary: tuple[tuple[float, float], ...] = field(default=())

    def power_matrix(self) -> np.ndarray:
        """Power as an (alpha, strength) array with NaN for saturated cells."""
        alphas = sorted({c.alpha for c in self.cells})
        values = sorted({c.strength for c in self.cells})
        out = np.full((len(alphas), len(values)), np.nan)
        for c in self.cells:
            if c.power is not None:
                out[alphas.index(c.alpha), values.index(c.strength)] = c.power
        return out


def _boundary_value(config: SimConfig, alpha: float) -> float:
    rc = regime_constants(alpha, config.params.theta)
    if config.strength_mode == "dense_r":
        return rc.c_dense
    return rc.c_max if config.test == "max_degree" else rc.c_sparse


def _cell_task(args) -> GridCell:
    config, threshold, ai, si = args
    alpha = config.alpha_grid[ai]
    value = config.strength_grid[si]
    params = config.params
    try:
        A = strength(params, config.strength_mode, value, config.scale)
    except SaturationError:
        s = make_signal(params, alpha=alpha, A=0.0).s
        return GridCell(alpha, value, s, None, None, None)
    signal = make_signal(params, alpha=alpha, A=A)
    est = _power_cell(config.test, params, signal, threshold, config.power_reps, config.master_seed, ai, si)
    return GridCell(alpha, value, signal.s, A, est.power, est.ci_halfwidth)


def run_grid(config: SimConfig, workers: int = 1, threshold: Optional[float] = None) -> PowerGrid:
    """Calibrate once, then fill every (alpha, strength) cell.

    Results are independent of ``workers``: cells are seeded by index and
    merged in grid order.
    """
    if threshold is None:
        threshold = calibrate(config.test, config.params, config.level, config.calib_reps, config.master_seed)
    tasks = [
        (config, threshold, ai, si)
        for ai in range(len(config.alpha_grid))
        for si in range(len(config.strength_grid))
    ]
    workers = max(1, int(workers))
    if workers == 1 or len(tasks) == 1 or callable(config.test):
        cells = [_cell_task(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_cell_task, tasks, chunksize=chunk))
    boundary = tuple((a, _boundary_value(config, a)) for a in config.alpha_grid)
    return PowerGrid(config, tuple(cells), float(threshold), boundary)


# ---------------------------------------------------------------------------
# persistence

CSV_HEADER = ["alpha", "strength", "s", "A", "power", "ci"]


def _num(x) -> str:
    """17 significant digits; null for missing or non-finite values."""
    if x is None:
        return "null"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return "%.17g" % x


def _dump(obj) -> str:
    if isinstance(obj, dict):
        return "{" + ",".join(json.dumps(str(k)) + ":" + _dump(v) for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_dump(v) for v in obj) + "]"
    if isinstance(obj, str):
        return json.dumps(obj)
    return _num(obj)


def _cell_dict(c: GridCell) -> dict:
    return {"alpha": c.alpha, "strength": c.strength, "s": c.s, "A": c.A, "power": c.power, "ci": c.ci}


def _meta(grid: PowerGrid) -> dict:
    return {
        "config": grid.config.to_dict() if grid.config is not None else None,
        "threshold": grid.threshold,
        "boundary": [{"alpha": a, "c": c} for a, c in grid.boundary],
    }


def _csv_field(x) -> str:
    out = _num(x)
    return "" if out == "null" else out


def grid_to_csv(grid: PowerGrid) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for c in grid.cells:
        w.writerow([_csv_field(v) for v in _cell_dict(c).values()])
    return buf.getvalue()


def grid_to_json(grid: PowerGrid) -> str:
    meta = _meta(grid)
    doc = {
        "config": meta["config"],
        "threshold": meta["threshold"],
        "cells": [_cell_dict(c) for c in grid.cells],
        "boundary": meta["boundary"],
    }
    return _dump(doc) + "\n"


def persist_grid(grid: PowerGrid, path, format: str = "csv") -> None:
    """Write ``grid`` as CSV (plus ``<path>.meta.json``) or as one JSON document."""
    path = os.fspath(path)
    try:
        if format == "csv":
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(grid_to_csv(grid))
            with open(path + ".meta.json", "w", encoding="utf-8", newline="") as fh:
                fh.write(_dump(_meta(grid)) + "\n")
        elif format == "json":
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(grid_to_json(grid))
        else:
            raise ValueError(f"unknown format {format!r}; expected csv or json")
    except OSError as exc:
        raise OSError(f"cannot write grid to {path}: {exc}") from exc


def _opt_float(x):
    return None if x is None or x == "" else float(x)


def _grid_from(meta: Optional[dict], cells: list[GridCell]) -> PowerGrid:
    if meta is None:
        return PowerGrid(None, tuple(cells), None, ())
    config = SimConfig.from_dict(meta["config"]) if meta.get("config") else None
    boundary = tuple((float(b["alpha"]), float(b["c"])) for b in meta.get("boundary", []))
    return PowerGrid(config, tuple(cells), _opt_float(meta.get("threshold")), boundary)


def _cell_from(d: dict) -> GridCell:
    return GridCell(
        float(d["alpha"]),
        float(d["strength"]),
        int(d["s"]),
        _opt_float(d["A"]),
        _opt_float(d["power"]),
        _opt_float(d["ci"]),
    )


def load_grid(path) -> PowerGrid:
    """Inverse of ``persist_grid``; the format is detected from the content."""
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read grid from {path}: {exc}") from exc
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        return _grid_from(doc, [_cell_from(c) for c in doc["cells"]])
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != CSV_HEADER:
        raise ValueError(f"{path}: expected CSV header {','.join(CSV_HEADER)}")
    cells = [_cell_from(dict(zip(CSV_HEADER, r))) for r in rows[1:]]
    meta = None
    if os.path.exists(path + ".meta.json"):
        with open(path + ".meta.json", encoding="utf-8") as fh:
            meta = json.load(fh)
    return _grid_from(meta, cells)
