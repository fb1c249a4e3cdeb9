"""Passivity indices of the shifted gradient and step-size certification.

For a gradient in the sector [m, L], the shifted-gradient operator is
very strictly passive with input index delta = mL/(m+L) and output index
epsilon = 1/(m+L). Closing positive feedback D*I around it rescales the
indices; the classification of the resulting operator as a function of D
drives the step-size verdict: a feedthrough of alpha/2 makes the
controller passive, and alpha/2 < 1/L (strict) keeps the transformed
nonlinearity VSP.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

from .errors import (
    ContractionError,
    DegenerateSectorError,
    InvalidParameterError,
    ShapeError,
)
from .lti import CertificateResult, gd_passivity_certificate
from .signals import Signal, inner_product_truncated, norm_sq_truncated

__all__ = [
    "Classification",
    "Verdict",
    "PassivityIndices",
    "StepSizeVerdict",
    "nabla_indices",
    "transformed_indices",
    "certify_step_size",
    "empirical_passivity_margin",
]

_REL_TOL = 1e-12


class Classification(enum.Enum):
    PASSIVE = "passive"
    ISP = "isp"
    VSP = "vsp"
    NONE = "none"


class Verdict(enum.Enum):
    STRONG = "strong"
    WEAK = "weak"
    NONE = "none"


@dataclass(frozen=True)
class PassivityIndices:
    """Bias beta <= 0 plus input/output indices (delta, epsilon)."""

    beta: float
    delta: float
    epsilon: float
    classification: Classification


@dataclass(frozen=True)
class StepSizeVerdict:
    alpha: float
    d: float
    verdict: Verdict
    transformed_indices: Optional[PassivityIndices]
    certificate: Optional[CertificateResult]


def _check_sector(m: float, l: float):
    if not (0.0 < m <= l):
        raise InvalidParameterError(
            f"sector bounds must satisfy 0 < m <= L, got m={m}, L={l}"
        )


def _close(a: float, b: float, rel: float = _REL_TOL) -> bool:
    return abs(a - b) <= rel * max(abs(a), abs(b))


def nabla_indices(m: float, l: float) -> PassivityIndices:
    """Indices of the shifted gradient: VSP with beta = 0."""
    _check_sector(m, l)
    return PassivityIndices(
        beta=0.0,
        delta=m * l / (m + l),
        epsilon=1.0 / (m + l),
        classification=Classification.VSP,
    )


def transformed_indices(m: float, l: float, d: float) -> PassivityIndices:
    """Indices after closing positive feedback d*I around the shifted gradient.

    delta_bar = delta / (1 - 2*delta*d)
    epsilon_bar = (epsilon - d + delta*d^2) / (1 - 2*delta*d)

    Classified VSP for d < 1/L, ISP exactly at d = 1/L (m < L required),
    NONE past the VSP root.
    """
    _check_sector(m, l)
    if d <= 0.0:
        raise InvalidParameterError(f"feedthrough must be positive, got {d}")
    base = nabla_indices(m, l)
    delta, epsilon = base.delta, base.epsilon
    contraction = 1.0 - 2.0 * delta * d
    at_isp_root = _close(d, 1.0 / l)
    if at_isp_root and m == l:
        raise DegenerateSectorError(
            f"d = 1/L = {d} with m == L leaves no ISP margin"
        )
    if contraction <= 0.0:
        raise ContractionError(
            f"d={d} violates d < (m+L)/(2mL) = {(m + l) / (2 * m * l)}"
        )
    delta_bar = delta / contraction
    epsilon_bar = (epsilon - d + delta * d * d) / contraction
    if at_isp_root:
        classification = Classification.ISP
    elif d < 1.0 / l:
        classification = Classification.VSP
    else:
        classification = Classification.NONE
    return PassivityIndices(
        beta=0.0,
        delta=delta_bar,
        epsilon=epsilon_bar,
        classification=classification,
    )


def certify_step_size(m: float, l: float, alpha: float) -> StepSizeVerdict:
    """Classify a step size with feedthrough d = alpha/2.

    STRONG for alpha in (0, 2/L): the controller certificate is feasible
    and the transformed nonlinearity is VSP. WEAK exactly at alpha = 2/L
    for m < L, where the transformed nonlinearity is only ISP. NONE
    otherwise. Equality is detected with relative tolerance 1e-12.
    """
    _check_sector(m, l)
    if alpha <= 0.0:
        raise InvalidParameterError(f"step size must be positive, got {alpha}")
    d = alpha / 2.0
    boundary = 2.0 / l
    at_boundary = _close(alpha, boundary)

    indices: Optional[PassivityIndices] = None
    try:
        indices = transformed_indices(m, l, d)
    except (ContractionError, DegenerateSectorError):
        indices = None

    if at_boundary:
        verdict = Verdict.WEAK if m < l else Verdict.NONE
    elif alpha < boundary:
        verdict = Verdict.STRONG
    else:
        verdict = Verdict.NONE

    certificate = gd_passivity_certificate(alpha, d)
    if verdict is Verdict.STRONG and (
        not certificate.feasible
        or indices is None
        or indices.classification is not Classification.VSP
    ):
        verdict = Verdict.NONE
    if verdict is Verdict.WEAK and (
        not certificate.feasible
        or indices is None
        or indices.classification is not Classification.ISP
    ):
        verdict = Verdict.NONE
    return StepSizeVerdict(
        alpha=alpha,
        d=d,
        verdict=verdict,
        transformed_indices=indices,
        certificate=certificate,
    )


def empirical_passivity_margin(
    op: Callable[[Signal], Signal],
    indices: PassivityIndices,
    inputs: list[Signal],
    T: int,
) -> float:
    """Worst slack of the passivity inequality over the given inputs.

    margin = min_u [ <u, op(u)>_T - beta - delta*||u||^2_2T
                     - epsilon*||op(u)||^2_2T ]

    A non-negative result is consistent with the claimed classification.
    """
    if not inputs:
        raise InvalidParameterError("need at least one input signal")
    worst = float("inf")
    for u in inputs:
        if u.horizon < T:
            raise ShapeError(f"input horizon {u.horizon} is shorter than T={T}")
        y = op(u)
        if y.dim != u.dim:
            raise ShapeError(f"operator changed dimension: {u.dim} -> {y.dim}")
        margin = (
            inner_product_truncated(u, y, T)
            - indices.beta
            - indices.delta * norm_sq_truncated(u, T)
            - indices.epsilon * norm_sq_truncated(y, T)
        )
        worst = min(worst, margin)
    return worst
