"""Chains of intermediate projective measurements.

A chain is fixed in advance: every outcome of every intermediate
measurement is kept, so the state after step ``k`` is the dephased
operator ``rho_k`` and the success probability is ``<zeta|rho_N|zeta>``.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from .qubit import (
    STRUCT_TOL,
    BasisAngles,
    DensityMatrix,
    MeasurementBasis,
    PureState,
    TargetFrame,
    dephase,
    expectation,
    frame_coefficients,
    hs_distance,
    overlap,
)
from .single_step import TargetReachedError, optimal_basis

MAX_BRUTEFORCE_STEPS = 20
MAX_OPTIMIZE_STEPS = 8


@dataclass(frozen=True)
class MeasurementChain:
    steps: Tuple[BasisAngles, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def extended(self, step: BasisAngles) -> "MeasurementChain":
        return MeasurementChain(self.steps + (step,))

    def to_params(self) -> np.ndarray:
        return np.array([v for s in self.steps for v in (s.alpha, s.beta)], dtype=float)

    @classmethod
    def from_params(cls, params) -> "MeasurementChain":
        params = np.asarray(params, dtype=float).reshape(-1, 2)
        return cls(tuple(BasisAngles(a, b) for a, b in params))


@dataclass(frozen=True)
class ChainResult:
    p_success: float
    intermediate_states: Tuple[DensityMatrix, ...]
    step_probs: Tuple[float, ...]
    hs_distances: Tuple[float, ...]


@dataclass(frozen=True)
class GainCheck:
    """Sufficient conditions for one more observable to raise the success probability.

    ``populations`` are ``<i_N|rho_{N-1}|i_N>`` and ``transfer_gains`` the
    per-branch improvement of reaching the target through the next basis.
    ``transfer_improves`` refers to the more populated branch.
    """

    branch_0_dominant: bool
    transfer_improves: bool
    guaranteed_positive: bool
    populations: Tuple[float, float] = (0.0, 0.0)
    transfer_gains: Tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class OptimizerConfig:
    random_starts: int = 32
    max_evals_per_start: int = 2000
    convergence_tol: float = 1e-7
    seed: int = 0
    threads: int = 1


def run_chain(rho0: DensityMatrix, frame: TargetFrame, chain: MeasurementChain) -> ChainResult:
    """Dephase ``rho0`` through every basis of ``chain`` and read out the target."""
    target = frame.projector()
    states, probs, dists = [], [], []
    rho = rho0
    for step in chain:
        rho = dephase(rho, step.realize(frame))
        states.append(rho)
        probs.append(expectation(rho, frame.zeta))
        dists.append(hs_distance(rho, target))
    p = probs[-1] if probs else expectation(rho0, frame.zeta)
    return ChainResult(p, tuple(states), tuple(probs), tuple(dists))


def chain_bruteforce(rho0: DensityMatrix, frame: TargetFrame, chain: MeasurementChain) -> float:
    """Sum over all ``2^N`` outcome records of the chain.

    Each record is weighted by the product of Born probabilities of its
    successive pure-state collapses; used as an oracle for :func:`run_chain`.
    """
    n = len(chain)
    if n > MAX_BRUTEFORCE_STEPS:
        raise ValueError(f"brute force limited to {MAX_BRUTEFORCE_STEPS} steps, got {n}")
    if n == 0:
        return expectation(rho0, frame.zeta)
    bases = [tuple(step.realize(frame)) for step in chain]
    first = [expectation(rho0, s) for s in bases[0]]
    hop = [
        [[abs(overlap(a, b)) ** 2 for b in bases[k + 1]] for a in bases[k]]
        for k in range(n - 1)
    ]
    final = [abs(overlap(s, frame.zeta)) ** 2 for s in bases[-1]]
    total = 0.0
    for path in itertools.product((0, 1), repeat=n):
        w = first[path[0]]
        for k in range(n - 1):
            w *= hop[k][path[k]][path[k + 1]]
        total += w * final[path[-1]]
    return total


def delta_gain(
    rho_prev: DensityMatrix,
    frame: TargetFrame,
    basis_n: MeasurementBasis,
    basis_next: MeasurementBasis,
) -> float:
    """Change in success probability from appending ``basis_next`` after ``basis_n``.

    ``rho_prev`` is the state entering the measurement of ``basis_n``.
    """
    return sum(
        expectation(rho_prev, i) * _transfer_gain(i, basis_next, frame) for i in basis_n
    )


def _transfer_gain(state: PureState, basis: MeasurementBasis, frame: TargetFrame) -> float:
    via = sum(abs(overlap(state, j)) ** 2 * abs(overlap(j, frame.zeta)) ** 2 for j in basis)
    return via - abs(overlap(state, frame.zeta)) ** 2


def check_gain_conditions(
    rho_prev: DensityMatrix,
    frame: TargetFrame,
    basis_n: MeasurementBasis,
    basis_next: MeasurementBasis,
    tol: float = STRUCT_TOL,
) -> GainCheck:
    pops = tuple(expectation(rho_prev, i) for i in basis_n)
    gains = tuple(_transfer_gain(i, basis_next, frame) for i in basis_n)
    zero_wins = pops[0] > pops[1] + tol and gains[0] > tol
    one_wins = pops[1] > pops[0] + tol and gains[1] > tol
    dominant = 0 if pops[0] >= pops[1] else 1
    return GainCheck(
        branch_0_dominant=pops[0] > pops[1] + tol,
        transfer_improves=gains[dominant] > tol,
        guaranteed_positive=zero_wins or one_wins,
        populations=pops,
        transfer_gains=gains,
    )


def greedy_chain(rho0: DensityMatrix, frame: TargetFrame, n_steps: int) -> MeasurementChain:
    """Apply the single-step optimum repeatedly to the current dephased state."""
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    steps: List[BasisAngles] = []
    rho = rho0
    for _ in range(n_steps):
        try:
            step = optimal_basis(rho, frame)
        except TargetReachedError:
            # aligned basis keeps the target population at one
            step = BasisAngles(0.0, 0.0)
        steps.append(step)
        rho = dephase(rho, step.realize(frame))
    return MeasurementChain(tuple(steps))


def _frame_bloch(rho: DensityMatrix, frame: TargetFrame) -> Tuple[float, float, float]:
    c = frame_coefficients(rho, frame)
    return (2 * c.coherence.real, -2 * c.coherence.imag, c.p_target - c.p_perp)


def chain_value(r0: Sequence[float], params: Sequence[float]) -> float:
    """Success probability from a frame Bloch vector and flat ``(alpha, beta)`` angles.

    Dephasing projects the Bloch vector onto the measurement axis, which
    makes this the cheap objective used inside the optimizer.
    """
    x, y, z = r0
    for k in range(0, len(params), 2):
        a, b = params[k], params[k + 1]
        sa = math.sin(a)
        nx, ny, nz = sa * math.cos(b), sa * math.sin(b), math.cos(a)
        d = x * nx + y * ny + z * nz
        x, y, z = d * nx, d * ny, d * nz
    return (1 + z) / 2


def _nelder_mead(r0, x0, config: OptimizerConfig) -> Tuple[float, np.ndarray]:
    res = minimize(
        lambda p: -chain_value(r0, p),
        np.asarray(x0, dtype=float),
        method="Nelder-Mead",
        options={
            "maxfev": config.max_evals_per_start,
            "xatol": config.convergence_tol,
            "fatol": 1e-14,
            "adaptive": len(x0) > 4,
        },
    )
    return -float(res.fun), np.asarray(res.x)


def optimize_chain(
    rho0: DensityMatrix,
    frame: TargetFrame,
    n_steps: int,
    budget: Optional[OptimizerConfig] = None,
    initial_chains: Sequence[MeasurementChain] = (),
) -> Tuple[MeasurementChain, float]:
    """Multi-start simplex search over all ``2 n_steps`` angles.

    Starts are the greedy chain, any ``initial_chains`` of matching length
    and ``budget.random_starts`` random chains, each with its own RNG
    stream. The winner is chosen by value, then start index, so the result
    does not depend on ``budget.threads``.
    """
    if not 1 <= n_steps <= MAX_OPTIMIZE_STEPS:
        raise ValueError(f"n_steps must lie in [1, {MAX_OPTIMIZE_STEPS}], got {n_steps}")
    budget = budget or OptimizerConfig()
    r0 = _frame_bloch(rho0, frame)
    starts = [greedy_chain(rho0, frame, n_steps).to_params()]
    for ch in initial_chains:
        if len(ch) != n_steps:
            raise ValueError("initial chain length does not match n_steps")
        starts.append(ch.to_params())
    streams = np.random.SeedSequence(budget.seed).spawn(budget.random_starts)
    for ss in streams:
        rng = np.random.default_rng(ss)
        a = rng.uniform(0, math.pi, n_steps)
        b = rng.uniform(0, 2 * math.pi, n_steps)
        starts.append(np.column_stack([a, b]).ravel())

    def work(x0):
        return _nelder_mead(r0, x0, budget)

    if budget.threads > 1:
        with ThreadPoolExecutor(budget.threads) as pool:
            results = list(pool.map(work, starts))
    else:
        results = [work(x0) for x0 in starts]
    best = max(range(len(results)), key=lambda i: (results[i][0], -i))
    chain = MeasurementChain.from_params(results[best][1])
    return chain, run_chain(rho0, frame, chain).p_success
