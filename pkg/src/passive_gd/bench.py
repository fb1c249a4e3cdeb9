"""Monte Carlo benchmark over uniformly sampled scalar initial conditions.

Every method sees the same seeded x0 sequence, so the per-method
statistics form a paired comparison. Iteration counts are 1-based: the
convergence check that passes is counted, so a sample that starts at the
minimizer records 1. Samples that exhaust the iteration budget are
recorded at the cap and flagged rather than dropped; non-finite iterates
are treated the same way.

The engine is vectorized across samples for one-dimensional functions
that expose elementwise callables, and falls back to per-sample runs
otherwise. A sample's arithmetic never depends on its neighbors, and the
chunk layout is fixed, so results are bit-identical for any worker count.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DivergenceError, InvalidParameterError, LineSearchError
from .functions import SectorFunction, builtin_function
from .optim import (
    ArmijoAlpha,
    ArmijoParams,
    ArmijoS,
    FixedAlpha,
    FixedS,
    GradNorm,
    MaxIter,
    Termination,
    default_s_cap,
    gd_run,
    gsgd_run,
)

__all__ = [
    "MethodSpec",
    "MonteCarloSpec",
    "SummaryStats",
    "run_monte_carlo",
    "mode_of",
    "export_histogram",
    "write_summary_csv",
    "default_methods",
    "default_config",
    "spec_from_config",
    "THREADS_ENV_VAR",
]

THREADS_ENV_VAR = "PASSIVE_GD_THREADS"
_CHUNK = 16384
_MAX_BACKTRACKS = 100


@dataclass(frozen=True)
class MethodSpec:
    label: str
    kind: str  # "gd" or "gsgd"
    schedule: object

    def __post_init__(self):
        if self.kind == "gd":
            if not isinstance(self.schedule, (FixedAlpha, ArmijoAlpha)):
                raise InvalidParameterError(
                    f"method {self.label!r}: gd needs a step-size schedule"
                )
        elif self.kind == "gsgd":
            if not isinstance(self.schedule, (FixedS, ArmijoS)):
                raise InvalidParameterError(
                    f"method {self.label!r}: gsgd needs a scheduling schedule"
                )
        else:
            raise InvalidParameterError(
                f"method {self.label!r}: kind must be 'gd' or 'gsgd', got {self.kind!r}"
            )


@dataclass(frozen=True)
class MonteCarloSpec:
    n_samples: int
    x0_low: float
    x0_high: float
    seed: int
    tol: float
    methods: tuple[MethodSpec, ...]
    max_iter: int = 10**6

    def __post_init__(self):
        if self.n_samples < 1:
            raise InvalidParameterError(f"n_samples must be >= 1, got {self.n_samples}")
        if not self.x0_low < self.x0_high:
            raise InvalidParameterError(
                f"empty initial-condition range [{self.x0_low}, {self.x0_high}]"
            )
        if self.tol <= 0.0:
            raise InvalidParameterError(f"tolerance must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise InvalidParameterError(f"max_iter must be >= 1, got {self.max_iter}")
        object.__setattr__(self, "methods", tuple(self.methods))


@dataclass(frozen=True)
class SummaryStats:
    label: str
    mean: float
    median: int
    mode: int
    count_histogram: dict[int, int] = field(repr=False)
    n: int = 0
    flagged: int = 0


def mode_of(counts: Sequence[int]) -> int:
    """Most frequent value; ties break toward the smallest."""
    if len(counts) == 0:
        raise InvalidParameterError("mode of an empty sample is undefined")
    vals, freq = np.unique(np.asarray(counts, dtype=np.int64), return_counts=True)
    return int(vals[np.argmax(freq)])


def _summarize(label: str, counts: np.ndarray, flagged: np.ndarray) -> SummaryStats:
    vals, freq = np.unique(counts, return_counts=True)
    hist = {int(v): int(c) for v, c in zip(vals, freq)}
    # Median of an even-length sample is the lower middle order statistic,
    # so it is always an observed count.
    median = int(np.sort(counts)[(counts.size - 1) // 2])
    return SummaryStats(
        label=label,
        mean=float(counts.mean()),
        median=median,
        mode=int(vals[np.argmax(freq)]),
        count_histogram=hist,
        n=int(counts.size),
        flagged=int(flagged.sum()),
    )


def _deactivate(counts, flagged, idx, bad, cap):
    counts[idx[bad]] = cap
    flagged[idx[bad]] = True


def _fixed_gd_chunk(gv, x0, alpha, tol, max_iter):
    x = x0.copy()
    counts = np.ones(x.shape, dtype=np.int64)
    flagged = np.zeros(x.shape, dtype=bool)
    g = gv(x)
    idx = np.nonzero(~(np.abs(g) < tol))[0]
    gi = g[idx]
    k = 0
    while idx.size and k < max_iter:
        k += 1
        xi = x[idx] - alpha * gi
        bad = ~np.isfinite(xi)
        if bad.any():
            _deactivate(counts, flagged, idx, bad, max_iter)
            idx, xi = idx[~bad], xi[~bad]
        x[idx] = xi
        gi = gv(xi)
        conv = np.abs(gi) < tol
        counts[idx[conv]] = k + 1
        idx, gi = idx[~conv], gi[~conv]
    if idx.size:
        counts[idx] = max_iter
        flagged[idx] = True
    return counts, flagged


def _fixed_gs_chunk(gv, x0, s, tol, max_iter):
    x = x0.copy()
    counts = np.ones(x.shape, dtype=np.int64)
    flagged = np.zeros(x.shape, dtype=bool)
    g = gv(x)
    idx = np.nonzero(~(np.abs(g) < tol))[0]
    k = 0
    while idx.size and k < max_iter:
        k += 1
        xi = x[idx] - s * gv(s * x[idx])
        bad = ~np.isfinite(xi)
        if bad.any():
            _deactivate(counts, flagged, idx, bad, max_iter)
            idx, xi = idx[~bad], xi[~bad]
        x[idx] = xi
        conv = np.abs(gv(xi)) < tol
        counts[idx[conv]] = k + 1
        idx = idx[~conv]
    if idx.size:
        counts[idx] = max_iter
        flagged[idx] = True
    return counts, flagged


def _armijo_gd_chunk(fv, gv, x0, trial, shrink, c, tol, max_iter):
    x = x0.copy()
    counts = np.ones(x.shape, dtype=np.int64)
    flagged = np.zeros(x.shape, dtype=bool)
    g = gv(x)
    idx = np.nonzero(~(np.abs(g) < tol))[0]
    gi = g[idx]
    k = 0
    while idx.size and k < max_iter:
        k += 1
        xi = x[idx]
        fx = fv(xi)
        gg = gi * gi
        a = np.full(xi.shape, trial)
        pending = np.ones(xi.shape, dtype=bool)
        for _ in range(_MAX_BACKTRACKS + 1):
            p = np.nonzero(pending)[0]
            if p.size == 0:
                break
            ok = fv(xi[p] - a[p] * gi[p]) <= fx[p] - c * a[p] * gg[p]
            pending[p[ok]] = False
            a[p[~ok]] *= shrink
        if pending.any():
            raise LineSearchError(
                f"no acceptable step within {_MAX_BACKTRACKS} backtracks"
            )
        xi = xi - a * gi
        bad = ~np.isfinite(xi)
        if bad.any():
            _deactivate(counts, flagged, idx, bad, max_iter)
            idx, xi = idx[~bad], xi[~bad]
        x[idx] = xi
        gi = gv(xi)
        conv = np.abs(gi) < tol
        counts[idx[conv]] = k + 1
        idx, gi = idx[~conv], gi[~conv]
    if idx.size:
        counts[idx] = max_iter
        flagged[idx] = True
    return counts, flagged


def _armijo_gs_chunk(fv, gv, x0, trial, cap, shrink, c, tol, max_iter):
    x = x0.copy()
    counts = np.ones(x.shape, dtype=np.int64)
    flagged = np.zeros(x.shape, dtype=bool)
    g = gv(x)
    idx = np.nonzero(~(np.abs(g) < tol))[0]
    gi = g[idx]
    k = 0
    start = min(trial, cap)
    while idx.size and k < max_iter:
        k += 1
        xi = x[idx]
        fx = fv(xi)
        s = np.full(xi.shape, start)
        pending = np.ones(xi.shape, dtype=bool)
        for _ in range(_MAX_BACKTRACKS + 1):
            p = np.nonzero(pending)[0]
            if p.size == 0:
                break
            gs = gv(s[p] * xi[p])
            ok = fv(xi[p] - s[p] * gs) <= fx[p] - c * s[p] * (gi[p] * gs)
            pending[p[ok]] = False
            s[p[~ok]] *= shrink
        if pending.any():
            raise LineSearchError(
                f"no acceptable scheduling value within {_MAX_BACKTRACKS} backtracks"
            )
        xi = xi - s * gv(s * xi)
        bad = ~np.isfinite(xi)
        if bad.any():
            _deactivate(counts, flagged, idx, bad, max_iter)
            idx, xi = idx[~bad], xi[~bad]
        x[idx] = xi
        gi = gv(xi)
        conv = np.abs(gi) < tol
        counts[idx[conv]] = k + 1
        idx, gi = idx[~conv], gi[~conv]
    if idx.size:
        counts[idx] = max_iter
        flagged[idx] = True
    return counts, flagged


def _chunk_runner(f: SectorFunction, method: MethodSpec, tol: float, max_iter: int):
    fv = f.elementwise_value
    gv = f.elementwise_gradient
    sched = method.schedule
    if isinstance(sched, FixedAlpha):
        return lambda x0: _fixed_gd_chunk(gv, x0, sched.alpha, tol, max_iter)
    if isinstance(sched, FixedS):
        return lambda x0: _fixed_gs_chunk(gv, x0, sched.s, tol, max_iter)
    if isinstance(sched, ArmijoAlpha):
        p = sched.params
        trial = p.trial if p.trial is not None else 2.0 / f.L
        return lambda x0: _armijo_gd_chunk(
            fv, gv, x0, trial, p.shrink, p.decrease, tol, max_iter
        )
    p = sched.params
    cap = sched.cap if sched.cap is not None else default_s_cap(f)
    trial = p.trial if p.trial is not None else cap
    return lambda x0: _armijo_gs_chunk(
        fv, gv, x0, trial, cap, p.shrink, p.decrease, tol, max_iter
    )


def _run_fallback(f: SectorFunction, method: MethodSpec, x0s, tol, max_iter):
    counts = np.empty(x0s.shape[0], dtype=np.int64)
    flagged = np.zeros(x0s.shape[0], dtype=bool)
    stops = [GradNorm(tol), MaxIter(max_iter)]
    runner = gd_run if method.kind == "gd" else gsgd_run
    for i, x0 in enumerate(x0s):
        try:
            trace = runner(f, np.atleast_1d(x0), method.schedule, stops)
        except DivergenceError:
            counts[i] = max_iter
            flagged[i] = True
            continue
        if trace.termination is Termination.GRAD_NORM_MET:
            counts[i] = trace.iterations + 1
        else:
            counts[i] = max_iter
            flagged[i] = True
    return counts, flagged


def _resolve_threads(threads: Optional[int]) -> int:
    if threads is not None:
        return max(1, threads)
    env = os.environ.get(THREADS_ENV_VAR, "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def run_monte_carlo(
    f: SectorFunction,
    spec: MonteCarloSpec,
    threads: Optional[int] = None,
) -> list[SummaryStats]:
    """Run every configured method on the same x0 sequence and summarize.

    ``threads`` overrides the PASSIVE_GD_THREADS environment variable;
    results do not depend on the worker count.
    """
    rng = np.random.default_rng(spec.seed)
    x0 = rng.uniform(spec.x0_low, spec.x0_high, spec.n_samples)
    n_threads = _resolve_threads(threads)
    vectorizable = (
        f.dim == 1
        and f.elementwise_value is not None
        and f.elementwise_gradient is not None
    )
    results = []
    for method in spec.methods:
        if not vectorizable:
            counts, flagged = _run_fallback(f, method, x0, spec.tol, spec.max_iter)
            results.append(_summarize(method.label, counts, flagged))
            continue
        runner = _chunk_runner(f, method, spec.tol, spec.max_iter)
        chunks = [x0[i : i + _CHUNK] for i in range(0, spec.n_samples, _CHUNK)]
        if n_threads == 1 or len(chunks) == 1:
            parts = [runner(c) for c in chunks]
        else:
            with ThreadPoolExecutor(max_workers=n_threads) as pool:
                parts = list(pool.map(runner, chunks))
        counts = np.concatenate([p[0] for p in parts])
        flagged = np.concatenate([p[1] for p in parts])
        results.append(_summarize(method.label, counts, flagged))
    return results


def export_histogram(stats: SummaryStats, path) -> None:
    """Write ``iterations,count`` rows sorted by iteration count."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iterations", "count"])
        for iterations in sorted(stats.count_histogram):
            writer.writerow([iterations, stats.count_histogram[iterations]])


def write_summary_csv(stats_list: Sequence[SummaryStats], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "mean", "median", "mode", "n", "flagged"])
        for s in stats_list:
            writer.writerow(
                [s.label, f"{s.mean:.17g}", s.median, s.mode, s.n, s.flagged]
            )


def default_methods(m: float, L: float) -> tuple[MethodSpec, ...]:
    """The six benchmark configurations for sector bounds (m, L)."""
    return (
        MethodSpec("alpha=2/(m+L)", "gd", FixedAlpha(2.0 / (m + L))),
        MethodSpec("s=sqrt(2/(m+L))", "gsgd", FixedS(float(np.sqrt(2.0 / (m + L))))),
        MethodSpec("alpha=2/L", "gd", FixedAlpha(2.0 / L)),
        MethodSpec("s=sqrt(2/L)", "gsgd", FixedS(float(np.sqrt(2.0 / L)))),
        MethodSpec("alpha-armijo", "gd", ArmijoAlpha(ArmijoParams())),
        MethodSpec("s-armijo", "gsgd", ArmijoS(ArmijoParams())),
    )


def default_config(m: float = 1.0, L: float = 100.0) -> dict:
    return {
        "function": {"name": "oscillatory", "m": m, "L": L},
        "n_samples": 100_000,
        "x0_low": -1e5,
        "x0_high": 1e5,
        "seed": 0,
        "tol": 1e-12,
        "max_iter": 10**6,
        "methods": [
            {"label": "alpha=2/(m+L)", "kind": "gd",
             "schedule": {"type": "fixed-alpha", "alpha": 2.0 / (m + L)}},
            {"label": "s=sqrt(2/(m+L))", "kind": "gsgd",
             "schedule": {"type": "fixed-s", "s": float(np.sqrt(2.0 / (m + L)))}},
            {"label": "alpha=2/L", "kind": "gd",
             "schedule": {"type": "fixed-alpha", "alpha": 2.0 / L}},
            {"label": "s=sqrt(2/L)", "kind": "gsgd",
             "schedule": {"type": "fixed-s", "s": float(np.sqrt(2.0 / L))}},
            {"label": "alpha-armijo", "kind": "gd",
             "schedule": {"type": "armijo-alpha"}},
            {"label": "s-armijo", "kind": "gsgd",
             "schedule": {"type": "armijo-s"}},
        ],
    }


def _schedule_from_config(doc: dict):
    kind = doc.get("type")
    if kind == "fixed-alpha":
        return FixedAlpha(float(doc["alpha"]))
    if kind == "fixed-s":
        return FixedS(float(doc["s"]))
    params = ArmijoParams(
        trial=doc.get("trial"),
        shrink=float(doc.get("shrink", 0.5)),
        decrease=float(doc.get("decrease", 1e-4)),
    )
    if kind == "armijo-alpha":
        return ArmijoAlpha(params)
    if kind == "armijo-s":
        cap = doc.get("cap")
        return ArmijoS(params, cap=float(cap) if cap is not None else None)
    raise InvalidParameterError(f"unknown schedule type {kind!r}")


def spec_from_config(doc: dict) -> tuple[SectorFunction, MonteCarloSpec]:
    """Build the target function and Monte Carlo spec from a config document."""
    fn = doc["function"]
    f = builtin_function(fn["name"], float(fn.get("m", 1.0)), float(fn["L"]))
    methods = tuple(
        MethodSpec(m["label"], m["kind"], _schedule_from_config(m["schedule"]))
        for m in doc["methods"]
    )
    spec = MonteCarloSpec(
        n_samples=int(doc["n_samples"]),
        x0_low=float(doc["x0_low"]),
        x0_high=float(doc["x0_high"]),
        seed=int(doc["seed"]),
        tol=float(doc["tol"]),
        methods=methods,
        max_iter=int(doc.get("max_iter", 10**6)),
    )
    return f, spec
