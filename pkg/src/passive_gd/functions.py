"""Objective functions with sector-bounded gradients.

Each built-in carries its sector bounds ``(m, L)`` and minimizer, an
analytic gradient, and (for the quadratic family) a constant Hessian.
One-dimensional built-ins also expose elementwise callables so that
batches of scalar initial conditions can be evaluated in one vectorized
pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParameterError, ShapeError

__all__ = [
    "SectorFunction",
    "oscillatory",
    "quadratic",
    "diag_quadratic",
    "builtin_function",
    "BUILTIN_NAMES",
    "shifted_gradient",
    "cocoercivity_residual",
    "sector_membership_scan",
    "central_difference_gradient",
]

_STATIONARITY_TOL = 1e-12


@dataclass(frozen=True)
class SectorFunction:
    """A differentiable objective whose gradient lies in the sector [m, L].

    Parameters
    ----------
    dim : int
        Input dimension.
    m, L : float
        Lower and upper sector bounds, 0 < m <= L.
    minimizer : np.ndarray
        The unique global minimizer; the gradient must vanish there.
    value : callable
        Maps a shape ``(dim,)`` vector to a float.
    gradient : callable
        Maps a shape ``(dim,)`` vector to a shape ``(dim,)`` vector.
    hessian : np.ndarray, optional
        Constant Hessian, present only for the quadratic family.
    elementwise_value, elementwise_gradient : callable, optional
        For ``dim == 1`` only: ufunc-style callables mapping an array of
        scalar points to an array of the same shape. Used by the
        vectorized Monte Carlo engine.
    """

    dim: int
    m: float
    L: float
    minimizer: np.ndarray = field(repr=False)
    value: Callable[[np.ndarray], float] = field(repr=False)
    gradient: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    hessian: Optional[np.ndarray] = field(default=None, repr=False)
    elementwise_value: Optional[Callable] = field(default=None, repr=False)
    elementwise_gradient: Optional[Callable] = field(default=None, repr=False)
    name: str = ""

    def __post_init__(self):
        if not (0.0 < self.m <= self.L):
            raise InvalidParameterError(
                f"sector bounds must satisfy 0 < m <= L, got m={self.m}, L={self.L}"
            )
        x_star = np.asarray(self.minimizer, dtype=float).reshape(-1)
        if x_star.shape != (self.dim,):
            raise ShapeError(
                f"minimizer has shape {x_star.shape}, expected ({self.dim},)"
            )
        x_star.setflags(write=False)
        object.__setattr__(self, "minimizer", x_star)
        g_star = np.linalg.norm(np.asarray(self.gradient(x_star), dtype=float))
        if g_star > _STATIONARITY_TOL:
            raise InvalidParameterError(
                f"gradient norm at the minimizer is {g_star:.3e}, "
                f"expected <= {_STATIONARITY_TOL:.0e}"
            )

    def check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape != (self.dim,):
            raise ShapeError(f"point has shape {x.shape}, expected ({self.dim},)")
        return x


def oscillatory(m: float, L: float) -> SectorFunction:
    """Scalar non-convex test function with gradient in the sector [m, L].

    f(x) = (L - m)/4 * ((L + m)/(L - m) * x^2 + 2 sin x - 2 x cos x),
    minimized at 0. Its derivative collapses to
    f'(x) = (L + m)/2 * x + (L - m)/2 * x sin x, so f'(x)/x stays inside
    [m, L] for all x.
    """
    if not (0.0 < m < L):
        raise InvalidParameterError(
            f"oscillatory requires 0 < m < L, got m={m}, L={L}"
        )

    def f_elem(x):
        x = np.asarray(x, dtype=float)
        return (L - m) / 4.0 * (
            (L + m) / (L - m) * x * x + 2.0 * np.sin(x) - 2.0 * x * np.cos(x)
        )

    def g_elem(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * (L + m) * x + 0.5 * (L - m) * x * np.sin(x)

    return SectorFunction(
        dim=1,
        m=m,
        L=L,
        minimizer=np.zeros(1),
        value=lambda x: float(f_elem(x)[0]),
        gradient=lambda x: np.atleast_1d(g_elem(x)),
        elementwise_value=f_elem,
        elementwise_gradient=g_elem,
        name="oscillatory",
    )


def quadratic(l: float) -> SectorFunction:
    """Scalar quadratic l*x^2/2 with m = L = l."""
    if l <= 0.0:
        raise InvalidParameterError(f"curvature must be positive, got {l}")

    def f_elem(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * l * x * x

    def g_elem(x):
        return l * np.asarray(x, dtype=float)

    return SectorFunction(
        dim=1,
        m=l,
        L=l,
        minimizer=np.zeros(1),
        value=lambda x: float(f_elem(x)[0]),
        gradient=lambda x: np.atleast_1d(g_elem(x)),
        hessian=np.array([[l]]),
        elementwise_value=f_elem,
        elementwise_gradient=g_elem,
        name="quadratic",
    )


def diag_quadratic(m: float, l: float) -> SectorFunction:
    """Two-dimensional quadratic with Hessian diag(m, l) and 0 < m < l."""
    if not (0.0 < m < l):
        raise InvalidParameterError(
            f"diag_quadratic requires 0 < m < l, got m={m}, l={l}"
        )
    diag = np.array([m, l])
    return SectorFunction(
        dim=2,
        m=m,
        L=l,
        minimizer=np.zeros(2),
        value=lambda x: float(0.5 * np.dot(diag * x, x)),
        gradient=lambda x: diag * np.asarray(x, dtype=float),
        hessian=np.diag(diag),
        name="diag-quadratic",
    )


BUILTIN_NAMES = ("oscillatory", "quadratic", "diag-quadratic")


def builtin_function(name: str, m: float, L: float) -> SectorFunction:
    """Look up a built-in by CLI name."""
    if name == "oscillatory":
        return oscillatory(m, L)
    if name == "quadratic":
        return quadratic(L)
    if name == "diag-quadratic":
        return diag_quadratic(m, L)
    raise InvalidParameterError(
        f"unknown function {name!r}; choose from {', '.join(BUILTIN_NAMES)}"
    )


def shifted_gradient(f: SectorFunction, u) -> np.ndarray:
    """Gradient evaluated at ``u + minimizer``; maps zero to zero."""
    u = f.check_point(u)
    return np.asarray(f.gradient(u + f.minimizer), dtype=float)


def cocoercivity_residual(f: SectorFunction, x) -> float:
    """Slack of the sector inequality at ``x``; non-negative on members.

    residual = <x - x*, grad f(x)> - mL/(m+L) ||x - x*||^2
               - 1/(m+L) ||grad f(x)||^2
    """
    x = f.check_point(x)
    dx = x - f.minimizer
    g = np.asarray(f.gradient(x), dtype=float)
    s = f.m + f.L
    return float(np.dot(dx, g) - (f.m * f.L / s) * np.dot(dx, dx) - np.dot(g, g) / s)


def sector_membership_scan(
    f: SectorFunction, lo: float, hi: float, n_samples: int, seed: int
) -> tuple[float, np.ndarray]:
    """Minimum co-coercivity residual over seeded uniform samples in [lo, hi]^dim."""
    if not lo < hi:
        raise InvalidParameterError(f"empty sample range [{lo}, {hi}]")
    if n_samples < 1:
        raise InvalidParameterError(f"n_samples must be >= 1, got {n_samples}")
    rng = np.random.default_rng(seed)
    points = rng.uniform(lo, hi, (n_samples, f.dim))
    if f.dim == 1 and f.elementwise_gradient is not None:
        x = points[:, 0]
        dx = x - f.minimizer[0]
        g = f.elementwise_gradient(x)
        s = f.m + f.L
        r = dx * g - (f.m * f.L / s) * dx * dx - g * g / s
        i = int(np.argmin(r))
        return float(r[i]), points[i]
    best = np.inf
    argmin = f.minimizer.copy()
    for x in points:
        r = cocoercivity_residual(f, x)
        if r < best:
            best = r
            argmin = x
    return best, argmin


def central_difference_gradient(f: SectorFunction, x, rel_step: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient with per-coordinate step h = rel_step*(1+|x_i|)."""
    x = f.check_point(x)
    g = np.empty_like(x)
    for i in range(f.dim):
        h = rel_step * (1.0 + abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f.value(xp) - f.value(xm)) / (2.0 * h)
    return g
