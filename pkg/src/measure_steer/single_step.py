"""One intermediate measurement followed by the target measurement.

Closed-form success probabilities, the optimal intermediate basis and the
Haar average of the optimum for pure initial states.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .qubit import (
    STRUCT_TOL,
    BasisAngles,
    DensityMatrix,
    FrameCoefficients,
    MeasurementBasis,
    TargetFrame,
    expectation,
    frame_coefficients,
    gamma_of,
    overlap,
)

DEGENERATE_R = 1e-9


class TargetReachedError(ValueError):
    """The initial state already coincides with the target."""


@dataclass(frozen=True)
class SingleStepReport:
    p_direct: float
    p_one_step: float
    p_max: float
    optimal: BasisAngles
    gamma: Optional[float]
    r_coeff: float


def p_direct(rho: DensityMatrix, frame: TargetFrame) -> float:
    return expectation(rho, frame.zeta)


def p_one_step(rho: DensityMatrix, frame: TargetFrame, basis: MeasurementBasis) -> float:
    """Success probability of measuring ``basis`` and then the target observable."""
    total = sum(
        expectation(rho, s) * abs(overlap(s, frame.zeta)) ** 2 for s in basis
    )
    return min(max(total, 0.0), 1.0)


def p_one_step_expanded(coeffs: FrameCoefficients, angles: BasisAngles) -> float:
    """Same probability written as direct term, population-gap term and coherence term.

    The amplitudes are taken in frame coordinates, where
    ``<zeta|0> = cos(alpha/2)`` and ``<zeta_perp|0> = exp(i beta) sin(alpha/2)``.
    """
    c = math.cos(angles.alpha / 2)
    zp0 = complex(math.cos(angles.beta), math.sin(angles.beta)) * math.sin(angles.alpha / 2)
    z0 = complex(c)  # <zeta|0>
    ov0 = z0.conjugate()  # <0|zeta>
    ov1 = -zp0  # <1|zeta>
    x = abs(ov0) ** 2
    gap = coeffs.p_target - coeffs.p_perp
    cross = ov0 * zp0 * coeffs.coherence
    return (
        coeffs.p_target
        - 2 * abs(ov1 * z0) ** 2 * gap
        + (2 * x - 1) * 2 * cross.real
    )


def p_one_step_grid(coeffs: FrameCoefficients, alpha, beta) -> np.ndarray:
    """Vectorized three-term form over an ``alpha`` x ``beta`` grid."""
    alpha = np.asarray(alpha, dtype=float)[:, None]
    beta = np.asarray(beta, dtype=float)[None, :]
    c, s = np.cos(alpha / 2), np.sin(alpha / 2)
    x = c**2
    gap = coeffs.p_target - coeffs.p_perp
    cross = (c * s) * (np.exp(1j * beta) * coeffs.coherence).real
    return coeffs.p_target - 2 * x * (1 - x) * gap + (2 * x - 1) * 2 * cross


def r_coefficient(p_target, gamma):
    """``sqrt((1 - gamma^2)(2 p - 1)^2 + gamma^2)``; accepts scalars or arrays."""
    p = np.asarray(p_target, dtype=float)
    g = np.asarray(gamma, dtype=float)
    r = np.sqrt(np.clip((1 - g**2) * (2 * p - 1) ** 2 + g**2, 0.0, 1.0))
    return float(r) if r.ndim == 0 else r


def p_max_closed(p_target, gamma):
    """Largest one-step success probability for population ``p_target`` and ratio ``gamma``."""
    p = np.asarray(p_target, dtype=float)
    val = np.clip(p / 2 + (1 + r_coefficient(p, gamma)) / 4, 0.0, 1.0)
    return float(val) if val.ndim == 0 else val


def optimal_overlap_closed(p_target, gamma):
    """``|<0|zeta>|^2`` of the optimal basis on the branch below one half.

    Where the R coefficient vanishes (``rho = I/2``) every basis is optimal
    and the unbiased value ``1/2`` is returned.
    """
    p = np.asarray(p_target, dtype=float)
    r = np.asarray(r_coefficient(p, gamma))
    safe = np.where(r < DEGENERATE_R, 1.0, r)
    inner = np.clip(1 + (2 * p - 1) / safe, 0.0, 2.0)
    x = 0.5 * (1 - np.sqrt(inner) / math.sqrt(2))
    x = np.where(r < DEGENERATE_R, 0.5, x)
    return float(x) if x.ndim == 0 else x


def optimal_basis(rho: DensityMatrix, frame: TargetFrame) -> BasisAngles:
    """Intermediate basis maximizing :func:`p_one_step`.

    Raises
    ------
    TargetReachedError
        If ``<zeta|rho|zeta>`` is already within ``1e-12`` of one.
    """
    coeffs = frame_coefficients(rho, frame)
    if coeffs.p_target >= 1 - STRUCT_TOL:
        raise TargetReachedError("initial state already equals the target")
    if coeffs.p_target <= STRUCT_TOL:
        return BasisAngles(math.pi / 2, 0.0)
    mag = abs(coeffs.coherence)
    # equals the gamma-based R but needs no division by the populations
    r = math.sqrt((2 * coeffs.p_target - 1) ** 2 + 4 * mag**2)
    if r < DEGENERATE_R:
        return BasisAngles(math.pi / 2, 0.0)
    inner = min(max(1 + (2 * coeffs.p_target - 1) / r, 0.0), 2.0)
    x = 0.5 * (1 - math.sqrt(inner / 2))
    beta = 0.0 if mag <= STRUCT_TOL else math.pi - math.atan2(coeffs.coherence.imag, coeffs.coherence.real)
    return BasisAngles.from_overlap(x, beta)


def pure_optimal_overlap(m: float) -> float:
    """Optimal ``|<0|zeta>|^2`` for a pure state with ``|<psi|zeta>| = m``."""
    return (1 - m) / 2


def single_step_report(rho: DensityMatrix, frame: TargetFrame) -> SingleStepReport:
    coeffs = frame_coefficients(rho, frame)
    gamma = gamma_of(rho, frame)
    g = 0.0 if gamma is None else gamma
    best = optimal_basis(rho, frame)
    return SingleStepReport(
        p_direct=coeffs.p_target,
        p_one_step=p_one_step(rho, frame, best.realize(frame)),
        p_max=p_max_closed(coeffs.p_target, g),
        optimal=best,
        gamma=gamma,
        r_coeff=r_coefficient(coeffs.p_target, g),
    )


def haar_average_pmax(
    samples: int, rng: np.random.Generator, frame: Optional[TargetFrame] = None
) -> Tuple[float, float]:
    """Monte Carlo mean and standard error of the optimum over Haar-random pure states."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    frame = frame or TargetFrame.computational()
    z = rng.standard_normal((samples, 2)) + 1j * rng.standard_normal((samples, 2))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    p = np.abs(z @ frame.zeta.vector.conj()) ** 2
    values = np.atleast_1d(p_max_closed(p, 1.0))
    err = float(values.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return float(values.mean()), err
