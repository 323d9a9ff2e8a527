"""Single-shot trajectory sampling and the polarizer-cascade flux model."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .chain import MeasurementChain
from .qubit import BasisAngles, DensityMatrix, PureState, TargetFrame

SHOTS_PER_STREAM = 1 << 14


@dataclass(frozen=True)
class TrajectoryEstimate:
    p_hat: float
    std_err: float
    shots: int
    seed: int


@dataclass(frozen=True)
class PolarizerCascade:
    """Ideal linear polarizers between an input and an analyzing polarizer.

    Angles are in radians from the horizontal axis.
    """

    angles: Tuple[float, ...] = ()
    input_angle: float = math.pi / 2
    target_angle: float = 0.0

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles)
        if not all(map(math.isfinite, angles + (self.input_angle, self.target_angle))):
            raise ValueError("polarizer angles must be finite")
        object.__setattr__(self, "angles", angles)


def _stream_successes(rho0, frame, bases, shots, seed_seq) -> int:
    rng = np.random.default_rng(seed_seq)
    evals, evecs = np.linalg.eigh(rho0.matrix)
    evals = np.clip(evals, 0.0, None)
    pick = rng.random(shots) < evals[1] / evals.sum()
    psi = np.where(pick[:, None], evecs[:, 1], evecs[:, 0])
    for s0, s1 in bases:
        p0 = np.abs(psi @ s0.conj()) ** 2
        hit = rng.random(shots) < p0
        psi = np.where(hit[:, None], s0, s1)
    p_zeta = np.abs(psi @ frame.zeta.vector.conj()) ** 2
    return int(np.count_nonzero(rng.random(shots) < p_zeta))


def simulate_trajectories(
    rho0: DensityMatrix,
    frame: TargetFrame,
    chain: MeasurementChain,
    shots: int,
    seed: int,
    threads: int = 1,
) -> TrajectoryEstimate:
    """Estimate the chain success probability from sampled measurement records.

    Each shot starts in an eigenvector of ``rho0`` drawn with its eigenvalue
    weight and collapses at every measurement according to the Born rule.
    Shots are split into fixed-size streams seeded from ``seed``, so the
    estimate does not depend on ``threads``.
    """
    if shots < 1:
        raise ValueError("shots must be at least 1")
    bases = [tuple(s.vector for s in step.realize(frame)) for step in chain]
    sizes = [SHOTS_PER_STREAM] * (shots // SHOTS_PER_STREAM)
    if shots % SHOTS_PER_STREAM:
        sizes.append(shots % SHOTS_PER_STREAM)
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(sizes, seqs))

    def work(job):
        return _stream_successes(rho0, frame, bases, *job)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            tallies = list(pool.map(work, jobs))
    else:
        tallies = [work(j) for j in jobs]
    p_hat = sum(tallies) / shots
    return TrajectoryEstimate(p_hat, math.sqrt(p_hat * (1 - p_hat) / shots), shots, seed)


def cascade_flux(cascade: PolarizerCascade) -> float:
    """Transmitted fraction of the input flux (Malus's law at every element)."""
    path = (cascade.input_angle,) + cascade.angles + (cascade.target_angle,)
    flux = 1.0
    for prev, cur in zip(path, path[1:]):
        flux *= math.cos(cur - prev) ** 2
    return min(max(flux, 0.0), 1.0)


def equal_spacing_cascade(n: int) -> PolarizerCascade:
    """``n`` polarizers evenly stepping from vertical to horizontal."""
    if n < 0:
        raise ValueError("n must be non-negative")
    step = (math.pi / 2) / (n + 1)
    return PolarizerCascade(tuple(math.pi / 2 - k * step for k in range(1, n + 1)))


def polarization_state(angle: float) -> PureState:
    """Linear polarization ket with horizontal as ``|0>`` and vertical as ``|1>``."""
    return PureState(math.cos(angle), math.sin(angle))


def cascade_as_chain(
    cascade: PolarizerCascade,
) -> Tuple[DensityMatrix, TargetFrame, MeasurementChain]:
    """Same geometry as a measurement chain that keeps both outcomes at every element."""
    frame = TargetFrame.from_target(polarization_state(cascade.target_angle))
    rho0 = polarization_state(cascade.input_angle).projector()
    chain = MeasurementChain(
        tuple(BasisAngles.from_state(frame, polarization_state(a)) for a in cascade.angles)
    )
    return rho0, frame, chain
