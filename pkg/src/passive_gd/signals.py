"""Finite-horizon discrete-time signals and truncated inner products."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import HorizonError, ShapeError

__all__ = [
    "Signal",
    "truncate",
    "inner_product_truncated",
    "norm_sq_truncated",
    "random_unit_energy",
    "write_signal_csv",
    "read_signal_csv",
]


@dataclass(frozen=True)
class Signal:
    """A finite sequence of real vectors indexed by discrete time.

    ``samples`` has shape ``(horizon, dim)``; row ``k`` is the value at
    time step ``k``. Instances are immutable value types.
    """

    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise ShapeError(f"signal samples must be 2-D, got shape {arr.shape}")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def horizon(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def at(self, k: int) -> np.ndarray:
        return self.samples[k]

    @staticmethod
    def zeros(dim: int, horizon: int) -> "Signal":
        return Signal(np.zeros((horizon, dim)))


def truncate(u: Signal, T: int) -> Signal:
    """Return the first ``T`` samples of ``u`` as a new signal."""
    if T < 0:
        raise HorizonError(f"truncation horizon must be non-negative, got {T}")
    if T > u.horizon:
        raise HorizonError(f"truncation horizon {T} exceeds stored horizon {u.horizon}")
    return Signal(u.samples[:T].copy())


def _check_pair(u: Signal, y: Signal, T: int):
    if u.dim != y.dim:
        raise ShapeError(f"signal dimensions differ: {u.dim} vs {y.dim}")
    if T < 1:
        raise HorizonError(f"inner-product horizon must be positive, got {T}")
    if T > u.horizon or T > y.horizon:
        raise HorizonError(
            f"horizon {T} exceeds stored horizons ({u.horizon}, {y.horizon})"
        )


def inner_product_truncated(u: Signal, y: Signal, T: int) -> float:
    """Sum of sample-wise inner products over time steps 0 .. T-1."""
    _check_pair(u, y, T)
    return float(np.sum(u.samples[:T] * y.samples[:T]))


def norm_sq_truncated(u: Signal, T: int) -> float:
    """Truncated energy of ``u``, i.e. the inner product of ``u`` with itself."""
    return inner_product_truncated(u, u, T)


def random_unit_energy(dim: int, horizon: int, count: int, seed: int) -> list[Signal]:
    """Seeded Gaussian signals, each scaled to unit truncated energy."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        raw = rng.standard_normal((horizon, dim))
        energy = np.sqrt(np.sum(raw * raw))
        if energy == 0.0:
            raw[0, 0] = 1.0
            energy = 1.0
        out.append(Signal(raw / energy))
    return out


def write_signal_csv(u: Signal, path) -> None:
    """Write one row per time step with columns ``k, x_0, ..., x_{n-1}``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k"] + [f"x_{i}" for i in range(u.dim)])
        for k in range(u.horizon):
            writer.writerow([k] + [f"{v:.17g}" for v in u.samples[k]])


def read_signal_csv(path) -> Signal:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        dim = len(header) - 1
        rows = [[float(v) for v in row[1:]] for row in reader]
    if not rows:
        return Signal.zeros(dim, 0)
    return Signal(np.array(rows))
