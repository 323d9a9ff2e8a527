"""Two-level states, target frames and projective dephasing.

Every object here is an immutable value. Density matrices are stored by
their three independent entries in the computational basis; all physics
is read out relative to a :class:`TargetFrame`.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

STRUCT_TOL = 1e-12
INPUT_TOL = 1e-9


class InvalidStateError(ValueError):
    """Raised when a state violates a trace, positivity or normalization invariant."""


@dataclass(frozen=True)
class PureState:
    """Normalized qubit ket with canonical global phase.

    The first amplitude whose magnitude exceeds ``1e-12`` is made real and
    non-negative, so kets describing the same ray share amplitudes up to
    rounding.
    """

    a0: complex
    a1: complex

    def __post_init__(self):
        a0, a1 = complex(self.a0), complex(self.a1)
        norm = math.sqrt(abs(a0) ** 2 + abs(a1) ** 2)
        if not math.isfinite(norm) or norm < STRUCT_TOL:
            raise InvalidStateError("state vector has zero or non-finite norm")
        a0, a1 = a0 / norm, a1 / norm
        phase = cmath.exp(-1j * cmath.phase(a0 if abs(a0) > STRUCT_TOL else a1))
        if abs(a0) > STRUCT_TOL:
            a0, a1 = complex(abs(a0)), a1 * phase
        else:
            a0, a1 = 0j, complex(abs(a1))
        object.__setattr__(self, "a0", a0)
        object.__setattr__(self, "a1", a1)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.a0, self.a1], dtype=complex)

    def projector(self) -> "DensityMatrix":
        return DensityMatrix(
            abs(self.a0) ** 2, abs(self.a1) ** 2, self.a0 * self.a1.conjugate()
        )

    @classmethod
    def from_bloch(cls, theta: float, phi: float) -> "PureState":
        """Ket with Bloch polar angle ``theta`` and azimuth ``phi``."""
        return cls(math.cos(theta / 2), cmath.exp(1j * phi) * math.sin(theta / 2))


@dataclass(frozen=True)
class DensityMatrix:
    """Qubit density operator ``[[r00, r01], [conj(r01), r11]]``.

    Construction validates unit trace and positivity at ``1e-9``, which is
    the tolerance granted to user-supplied data.
    """

    r00: float
    r11: float
    r01: complex

    def __post_init__(self):
        r00, r11, r01 = float(self.r00), float(self.r11), complex(self.r01)
        if not all(map(math.isfinite, (r00, r11, r01.real, r01.imag))):
            raise InvalidStateError("density matrix has non-finite entries")
        if abs(r00 + r11 - 1.0) > INPUT_TOL:
            raise InvalidStateError(f"trace must be 1, got {r00 + r11!r}")
        if min(r00, r11) < -INPUT_TOL:
            raise InvalidStateError("populations must be non-negative")
        if r00 * r11 - abs(r01) ** 2 < -INPUT_TOL:
            raise InvalidStateError("matrix is not positive semidefinite")
        object.__setattr__(self, "r00", r00)
        object.__setattr__(self, "r11", r11)
        object.__setattr__(self, "r01", r01)

    @property
    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.r00, self.r01], [self.r01.conjugate(), self.r11]], dtype=complex
        )

    @property
    def bloch(self) -> np.ndarray:
        return np.array([2 * self.r01.real, -2 * self.r01.imag, self.r00 - self.r11])

    @classmethod
    def from_matrix(cls, m) -> "DensityMatrix":
        m = np.asarray(m, dtype=complex)
        if m.shape != (2, 2):
            raise InvalidStateError(f"expected a 2x2 matrix, got shape {m.shape}")
        if abs(m[0, 1] - m[1, 0].conjugate()) > INPUT_TOL:
            raise InvalidStateError("matrix is not Hermitian")
        if max(abs(m[0, 0].imag), abs(m[1, 1].imag)) > INPUT_TOL:
            raise InvalidStateError("matrix is not Hermitian")
        return cls(m[0, 0].real, m[1, 1].real, 0.5 * (m[0, 1] + m[1, 0].conjugate()))

    @classmethod
    def from_bloch(cls, r) -> "DensityMatrix":
        x, y, z = (float(v) for v in r)
        return cls((1 + z) / 2, (1 - z) / 2, complex(x, -y) / 2)

    @classmethod
    def maximally_mixed(cls) -> "DensityMatrix":
        return cls(0.5, 0.5, 0j)

    @classmethod
    def from_frame(
        cls, p_target: float, coherence: complex, frame: "TargetFrame"
    ) -> "DensityMatrix":
        """Build ``rho`` from its components in ``frame``.

        ``p_target`` is ``<z|rho|z>`` and ``coherence`` is ``<z|rho|z_perp>``.
        """
        z, zp = frame.zeta.vector, frame.zeta_perp.vector
        m = (
            p_target * np.outer(z, z.conj())
            + (1 - p_target) * np.outer(zp, zp.conj())
            + coherence * np.outer(z, zp.conj())
            + np.conj(coherence) * np.outer(zp, z.conj())
        )
        return cls.from_matrix(m)

    @classmethod
    def from_parameters(
        cls,
        p_target: float,
        gamma: float,
        phase: float = 0.0,
        frame: Optional["TargetFrame"] = None,
    ) -> "DensityMatrix":
        """State with target population ``p_target`` and coherence ratio ``gamma``."""
        if not 0 <= p_target <= 1:
            raise InvalidStateError(f"p_target must lie in [0, 1], got {p_target}")
        if not 0 <= gamma <= 1:
            raise InvalidStateError(f"gamma must lie in [0, 1], got {gamma}")
        frame = frame or TargetFrame.computational()
        coh = gamma * math.sqrt(p_target * (1 - p_target)) * cmath.exp(1j * phase)
        return cls.from_frame(p_target, coh, frame)


@dataclass(frozen=True)
class TargetFrame:
    """Target ket and its orthogonal complement."""

    zeta: PureState
    zeta_perp: PureState

    @classmethod
    def from_target(cls, zeta: PureState) -> "TargetFrame":
        # complement fixed as (-b*, a*) before canonicalization
        return cls(zeta, PureState(-zeta.a1.conjugate(), zeta.a0.conjugate()))

    @classmethod
    def computational(cls) -> "TargetFrame":
        return cls.from_target(PureState(1, 0))

    def projector(self) -> DensityMatrix:
        return self.zeta.projector()


@dataclass(frozen=True)
class FrameCoefficients:
    p_target: float
    p_perp: float
    coherence: complex


@dataclass(frozen=True)
class MeasurementBasis:
    s0: PureState
    s1: PureState

    def __post_init__(self):
        if abs(overlap(self.s0, self.s1)) > 1e-9:
            raise InvalidStateError("basis states are not orthogonal")

    def __iter__(self):
        yield self.s0
        yield self.s1


@dataclass(frozen=True)
class BasisAngles:
    """Orientation of one intermediate observable relative to the target frame.

    ``alpha`` in ``[0, pi]`` sets ``|<0|zeta>|^2 = cos^2(alpha/2)`` and
    ``beta`` in ``[0, 2 pi)`` is the relative phase of the ``zeta_perp``
    component. Out-of-range input is folded back onto the chart.
    """

    alpha: float
    beta: float

    def __post_init__(self):
        alpha, beta = float(self.alpha), float(self.beta)
        if not (math.isfinite(alpha) and math.isfinite(beta)):
            raise ValueError("basis angles must be finite")
        # alpha -> -alpha is beta -> beta + pi; alpha -> 2pi - alpha likewise
        alpha = math.remainder(alpha, 2 * math.pi)
        if alpha < 0:
            alpha, beta = -alpha, beta + math.pi
        beta = beta % (2 * math.pi)
        if beta >= 2 * math.pi:
            beta = 0.0
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def overlap_sq(self) -> float:
        return math.cos(self.alpha / 2) ** 2

    def axis(self) -> np.ndarray:
        """Bloch axis of the ``|0>`` outcome in frame coordinates."""
        sa = math.sin(self.alpha)
        return np.array([sa * math.cos(self.beta), sa * math.sin(self.beta), math.cos(self.alpha)])

    def realize(self, frame: TargetFrame) -> MeasurementBasis:
        c, s = math.cos(self.alpha / 2), math.sin(self.alpha / 2)
        e = cmath.exp(1j * self.beta)
        z, zp = frame.zeta.vector, frame.zeta_perp.vector
        v0 = c * z + e * s * zp
        v1 = -e.conjugate() * s * z + c * zp
        return MeasurementBasis(PureState(*v0), PureState(*v1))

    @classmethod
    def from_overlap(cls, overlap_sq: float, beta: float = 0.0) -> "BasisAngles":
        x = min(max(overlap_sq, 0.0), 1.0)
        return cls(2 * math.acos(math.sqrt(x)), beta)

    @classmethod
    def from_state(cls, frame: TargetFrame, psi: PureState) -> "BasisAngles":
        """Angles of the basis whose ``|0>`` outcome is ``psi``."""
        a, b = overlap(frame.zeta, psi), overlap(frame.zeta_perp, psi)
        beta = cmath.phase(b) - cmath.phase(a) if abs(b) > STRUCT_TOL else 0.0
        return cls(2 * math.atan2(abs(b), abs(a)), beta)


def overlap(a: PureState, b: PureState) -> complex:
    """Inner product ``<a|b>``."""
    return a.a0.conjugate() * b.a0 + a.a1.conjugate() * b.a1


def expectation(rho: DensityMatrix, psi: PureState) -> float:
    """``<psi|rho|psi>`` clamped to ``[0, 1]``."""
    a0, a1 = psi.a0, psi.a1
    val = (
        rho.r00 * abs(a0) ** 2
        + rho.r11 * abs(a1) ** 2
        + 2 * (a0.conjugate() * rho.r01 * a1).real
    )
    return min(max(val, 0.0), 1.0)


def _sandwich(a: PureState, rho: DensityMatrix, b: PureState) -> complex:
    return complex(a.vector.conj() @ rho.matrix @ b.vector)


def frame_coefficients(rho: DensityMatrix, frame: TargetFrame) -> FrameCoefficients:
    return FrameCoefficients(
        expectation(rho, frame.zeta),
        expectation(rho, frame.zeta_perp),
        _sandwich(frame.zeta, rho, frame.zeta_perp),
    )


def gamma_of(rho: DensityMatrix, frame: TargetFrame) -> Optional[float]:
    """Coherence ratio ``|<z|rho|z_perp>| / sqrt(p_target p_perp)``.

    Returns ``None`` when either frame population vanishes, in which case
    the ratio is undefined.
    """
    c = frame_coefficients(rho, frame)
    denom = c.p_target * c.p_perp
    if denom <= STRUCT_TOL:
        return None
    return min(max(abs(c.coherence) / math.sqrt(denom), 0.0), 1.0)


def dephase(rho: DensityMatrix, basis: MeasurementBasis) -> DensityMatrix:
    """Non-selective measurement of ``rho`` in ``basis``."""
    p0 = expectation(rho, basis.s0)
    v0, v1 = basis.s0.vector, basis.s1.vector
    m = p0 * np.outer(v0, v0.conj()) + (1 - p0) * np.outer(v1, v1.conj())
    return DensityMatrix(m[0, 0].real, m[1, 1].real, m[0, 1])


def hs_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """Hilbert-Schmidt distance ``sqrt(tr[(a - b)^2])``."""
    d00, d11, d01 = a.r00 - b.r00, a.r11 - b.r11, a.r01 - b.r01
    return math.sqrt(max(d00 * d00 + d11 * d11 + 2 * abs(d01) ** 2, 0.0))


def random_pure(rng: np.random.Generator) -> PureState:
    """Haar-random ket from a normalized complex Gaussian vector."""
    z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    return PureState(*z)


def random_density(rng: np.random.Generator) -> DensityMatrix:
    """State drawn uniformly from the Bloch ball."""
    direction = rng.standard_normal(3)
    direction /= np.linalg.norm(direction)
    radius = rng.random() ** (1 / 3)
    return DensityMatrix.from_bloch(radius * direction)
