"""Experiment harness: phase transitions, robustness sweeps, error decay.

Every result is a pure function of (grid, seed). Per-trial randomness derives
from the base seed through documented keys:

    data stream   RandomSource(seed).derive(r_index, trial, 0)
    start vector  RandomSource(seed).derive(r_index, trial, 1)
    random init   RandomSource(seed).derive(r_index, trial, 2)   (AM only)

so any cell or trial can be reproduced in isolation, sweeps share masks and
coupled noise across parameter values (common random numbers), and thread
count cannot change any output. CSV layout: UTF-8, LF line endings, header
``r,init,param,success_prob,median_err,mean_iters,wall_ms``, floats with 6
significant digits. Wall-clock values are informational; the writer emits 0
unless timing output is explicitly requested, keeping reruns byte-identical.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import RandomSource, normalize, sample_complex_gaussian
from .measurement import (
    ExpNoise,
    LowPass,
    MeasurementSet,
    ObservationModel,
    TanhDistortion,
    build_measurement_set,
)
from .operators import OneBitOperator, SubExpOperator
from .solvers import AMConfig, PowerConfig, alt_min, alt_min_iterates, err, power_method

__all__ = [
    "TrialGrid",
    "ResultRow",
    "ResultTable",
    "phase_transition",
    "robustness_sweep",
    "am_error_decay",
    "write_csv",
    "read_csv",
]

CSV_HEADER = "r,init,param,success_prob,median_err,mean_iters,wall_ms"

SPECTRAL_KINDS = ("onebit", "subexp")
AM_KINDS = ("onebit", "subexp", "random")


@dataclass
class TrialGrid:
    """One benchmark grid: which r values to try, which model, how many
    seeded trials per cell, and the success threshold tau on the recovery
    error. With am_refine, init_kinds selects the initializer of the
    alternating-minimization refinement (t0 iterations); otherwise it selects
    the bare spectral method and "random" is not allowed."""

    n: int
    r_values: list
    model: ObservationModel
    trials: int
    tau: float
    seed: int
    init_kinds: tuple = SPECTRAL_KINDS
    am_refine: bool = False
    t0: int = 50
    power: PowerConfig = field(default_factory=PowerConfig)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must lie in (0, 1)")
        allowed = AM_KINDS if self.am_refine else SPECTRAL_KINDS
        for kind in self.init_kinds:
            if kind not in allowed:
                raise ValueError(f"init kind {kind!r} not in {allowed}")


@dataclass
class ResultRow:
    r: int
    init: str
    param: float
    success_prob: float
    median_err: float
    mean_iters: float
    wall_ms: float


@dataclass
class ResultTable:
    rows: list

    def cell(self, r: int, init: str, param: float | None = None) -> ResultRow:
        for row in self.rows:
            if row.r == r and row.init == init and (param is None or row.param == param):
                return row
        raise KeyError(f"no row for r={r}, init={init}, param={param}")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def write_csv(table: ResultTable, path, timing: bool = False) -> None:
    """Write the table; wall_ms is zeroed unless timing=True (reruns stay
    byte-identical by default)."""
    lines = [CSV_HEADER]
    for row in table.rows:
        wall = row.wall_ms if timing else 0.0
        lines.append(",".join([
            str(row.r), row.init, _fmt(row.param), _fmt(row.success_prob),
            _fmt(row.median_err), _fmt(row.mean_iters), _fmt(wall),
        ]))
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("utf-8"))


def read_csv(path) -> ResultTable:
    with open(path, "rb") as fh:
        text = fh.read().decode("utf-8")
    lines = [ln for ln in text.split("\n") if ln]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {lines[:1]}")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 7:
            raise ValueError(f"malformed CSV row {ln!r}")
        rows.append(ResultRow(int(parts[0]), parts[1], *[float(p) for p in parts[2:]]))
    return ResultTable(rows)


def _map_trials(fn, tasks, threads: int):
    """Run fn over tasks, preserving task order in the returned list."""
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def _spectral_recover(ms: MeasurementSet, kind: str, power: PowerConfig,
                      init_rng: RandomSource):
    op = OneBitOperator(ms) if kind == "onebit" else SubExpOperator(ms)
    return power_method(op, power, rng=init_rng)


def _trial_recoveries(grid: TrialGrid, r: int, r_index: int, trial: int):
    """One seeded trial: fresh signal and measurement set, then every
    requested method on the shared data. Returns {kind: (err, iterations)}."""
    base = RandomSource(grid.seed)
    data_rng = base.derive(r_index, trial, 0)
    x0 = normalize(sample_complex_gaussian(grid.n, data_rng))
    need_intens = grid.am_refine or "subexp" in grid.init_kinds
    ms = build_measurement_set(x0, r, grid.model, data_rng,
                               keep_intensities=need_intens)
    out = {}
    for kind in grid.init_kinds:
        if grid.am_refine:
            if kind == "random":
                x_init = normalize(sample_complex_gaussian(grid.n, base.derive(r_index, trial, 2)))
                init_iters = 0
            else:
                res = _spectral_recover(ms, kind, grid.power, base.derive(r_index, trial, 1))
                x_init, init_iters = res.x_hat, res.iterations
            refined = alt_min(ms, x_init, AMConfig(t0=grid.t0))
            out[kind] = (err(refined.x_hat, x0), init_iters + grid.t0)
        else:
            res = _spectral_recover(ms, kind, grid.power, base.derive(r_index, trial, 1))
            out[kind] = (err(res.x_hat, x0), res.iterations)
    return out


def _aggregate(r: int, init: str, param: float, errs, iters, tau: float,
               wall_ms: float) -> ResultRow:
    errs = np.asarray(errs, dtype=np.float64)
    return ResultRow(
        r=r, init=init, param=param,
        success_prob=float(np.mean(errs < tau)),
        median_err=float(np.median(errs)),
        mean_iters=float(np.mean(iters)),
        wall_ms=wall_ms,
    )


def phase_transition(grid: TrialGrid, threads: int = 1) -> ResultTable:
    """Success probability and median error per (r, init kind).

    Every trial is an independent end-to-end recovery; methods within a cell
    share the trial's measurement set. Rows come out sorted by (r, init).
    """
    rows = []
    for r_index, r in enumerate(grid.r_values):
        t_start = time.perf_counter()
        results = _map_trials(
            lambda trial: _trial_recoveries(grid, r, r_index, trial),
            list(range(grid.trials)), threads)
        wall_ms = (time.perf_counter() - t_start) * 1000.0  # joint over the cell's kinds
        for kind in grid.init_kinds:
            errs = [res[kind][0] for res in results]
            iters = [res[kind][1] for res in results]
            rows.append(_aggregate(int(r), kind, 0.0, errs, iters, grid.tau, wall_ms))
    rows.sort(key=lambda row: (row.r, row.init))
    return ResultTable(rows)


def _model_for(parameter: str, value: float, n: int) -> ObservationModel:
    if parameter == "sigma":
        return ExpNoise(sigma=float(value))
    if parameter == "alpha":
        return TanhDistortion(alpha=float(value))
    if parameter == "f_c":
        return LowPass(f_c=int(value), shape=(n,))
    raise ValueError(f"parameter must be sigma, alpha, or f_c, got {parameter!r}")


def robustness_sweep(parameter: str, values, n: int, r_values, trials: int,
                     seed: int, tau: float = 0.07,
                     power: PowerConfig | None = None,
                     threads: int = 1) -> ResultTable:
    """Median one-bit recovery error over a grid of model parameters.

    Within a trial index the signal, the masks, and the underlying noise
    draws are shared across parameter values (the derivation key does not
    involve the value), so error curves are directly comparable. Rows come
    out sorted by (param, r).
    """
    power = power or PowerConfig()

    def one(task):
        r_index, r, value, trial = task
        base = RandomSource(seed)
        data_rng = base.derive(r_index, trial, 0)
        x0 = normalize(sample_complex_gaussian(n, data_rng))
        model = _model_for(parameter, value, n)
        ms = build_measurement_set(x0, r, model, data_rng)
        res = power_method(OneBitOperator(ms), power, rng=base.derive(r_index, trial, 1))
        return err(res.x_hat, x0), res.iterations

    rows = []
    for value in values:
        for r_index, r in enumerate(r_values):
            t_start = time.perf_counter()
            tasks = [(r_index, int(r), value, t) for t in range(trials)]
            results = _map_trials(one, tasks, threads)
            wall_ms = (time.perf_counter() - t_start) * 1000.0
            errs = [e for e, _ in results]
            iters = [it for _, it in results]
            rows.append(_aggregate(int(r), "onebit", float(value), errs, iters, tau, wall_ms))
    rows.sort(key=lambda row: (row.param, row.r))
    return ResultTable(rows)


def am_error_decay(n: int, r: int, model: ObservationModel, inits, t0: int,
                   trials: int, seed: int,
                   power: PowerConfig | None = None,
                   threads: int = 1) -> dict:
    """Recovery error along the alternating-minimization iterations.

    Returns {init_kind: array of shape (trials, t0 + 1)}; column t holds the
    error after t iterations (column 0 is the initializer itself). Init kinds
    are "onebit", "subexp", "random", and "truth" (start from the signal).
    """
    power = power or PowerConfig()
    for kind in inits:
        if kind not in ("onebit", "subexp", "random", "truth"):
            raise ValueError(f"unknown init kind {kind!r}")

    def one(trial):
        base = RandomSource(seed)
        data_rng = base.derive(0, trial, 0)
        x0 = normalize(sample_complex_gaussian(n, data_rng))
        ms = build_measurement_set(x0, r, model, data_rng, keep_intensities=True)
        traces = {}
        for kind in inits:
            if kind == "truth":
                x_init = x0
            elif kind == "random":
                x_init = normalize(sample_complex_gaussian(n, base.derive(0, trial, 2)))
            else:
                res = _spectral_recover(ms, kind, power, base.derive(0, trial, 1))
                x_init = res.x_hat
            trace = np.empty(t0 + 1)
            trace[0] = err(x_init, x0)
            for t, (x_t, _) in enumerate(alt_min_iterates(ms, x_init, t0), start=1):
                nrm = np.linalg.norm(x_t.ravel())
                trace[t] = 1.0 if nrm == 0 else err(x_t / nrm, x0)
            traces[kind] = trace
        return traces

    per_trial = _map_trials(one, list(range(trials)), threads)
    return {kind: np.stack([tr[kind] for tr in per_trial]) for kind in inits}
