"""Estimator-style wrapper around chain optimization.

``fit`` learns a measurement chain for the states it is given,
``transform`` pushes states through the chain and ``predict_proba`` reports
the probability of ending in the target.

Because the chain acts linearly on density matrices, fitting on several
states is the same as fitting on their mean, which maximizes the average
success probability over the batch.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .chain import (
    MeasurementChain,
    OptimizerConfig,
    chain_value,
    greedy_chain,
    optimize_chain,
    run_chain,
)
from .qubit import DensityMatrix
from .validation import check_density_matrices, check_target

_STRATEGIES = ("optimal", "greedy")


def _frame_bloch_stack(states: np.ndarray, frame) -> np.ndarray:
    z, zp = frame.zeta.vector, frame.zeta_perp.vector
    pt = np.einsum("i,nij,j->n", z.conj(), states, z).real
    pp = np.einsum("i,nij,j->n", zp.conj(), states, zp).real
    coh = np.einsum("i,nij,j->n", z.conj(), states, zp)
    return np.column_stack([2 * coh.real, -2 * coh.imag, pt - pp])


class MeasurementSteering(TransformerMixin, BaseEstimator):
    """Steer qubit states toward ``target`` with ``n_steps`` projective measurements.

    Parameters
    ----------
    target : PureState, TargetFrame, array-like of two amplitudes or None
        Target ket; ``None`` means the computational ``|0>``.
    n_steps : int
        Number of intermediate observables.
    strategy : {"optimal", "greedy"}
        Multi-start global search or repeated single-step optimum.
    random_starts, max_evals_per_start, convergence_tol
        Optimizer budget, see :class:`~measure_steer.chain.OptimizerConfig`.
    random_state : int
        Seed for the random optimizer starts.
    n_jobs : int
        Worker threads for the multi-start search.

    Attributes
    ----------
    chain_ : MeasurementChain
    p_success_ : float
        Success probability of ``chain_`` on the mean fitted state.
    p_direct_ : float
        Success probability without intermediate measurements.
    """

    def __init__(
        self,
        target=None,
        n_steps=1,
        strategy="optimal",
        random_starts=32,
        max_evals_per_start=2000,
        convergence_tol=1e-7,
        random_state=0,
        n_jobs=1,
    ):
        self.target = target
        self.n_steps = n_steps
        self.strategy = strategy
        self.random_starts = random_starts
        self.max_evals_per_start = max_evals_per_start
        self.convergence_tol = convergence_tol
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        if self.strategy not in _STRATEGIES:
            raise ValueError(f"strategy must be one of {_STRATEGIES}, got {self.strategy!r}")
        states = check_density_matrices(X)
        self.frame_ = check_target(self.target)
        self.initial_state_ = DensityMatrix.from_matrix(states.mean(axis=0))
        if self.strategy == "greedy":
            self.chain_ = greedy_chain(self.initial_state_, self.frame_, self.n_steps)
            self.p_success_ = run_chain(self.initial_state_, self.frame_, self.chain_).p_success
        else:
            config = OptimizerConfig(
                random_starts=self.random_starts,
                max_evals_per_start=self.max_evals_per_start,
                convergence_tol=self.convergence_tol,
                seed=self.random_state,
                threads=self.n_jobs,
            )
            self.chain_, self.p_success_ = optimize_chain(
                self.initial_state_, self.frame_, self.n_steps, config
            )
        self.p_direct_ = run_chain(self.initial_state_, self.frame_, MeasurementChain()).p_success
        return self

    def transform(self, X):
        """States after the fitted chain, shape ``(n, 2, 2)``."""
        check_is_fitted(self, "chain_")
        states = check_density_matrices(X)
        out = np.empty_like(states)
        for k, m in enumerate(states):
            res = run_chain(DensityMatrix.from_matrix(m), self.frame_, self.chain_)
            final = res.intermediate_states[-1] if res.intermediate_states else DensityMatrix.from_matrix(m)
            out[k] = final.matrix
        return out

    def predict_proba(self, X):
        """Columns are ``[P(zeta_perp), P(zeta)]`` after the final target measurement."""
        check_is_fitted(self, "chain_")
        r = _frame_bloch_stack(check_density_matrices(X), self.frame_)
        params = self.chain_.to_params()
        p = np.clip([chain_value(v, params) for v in r], 0.0, 1.0)
        return np.column_stack([1 - p, p])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)

    def score(self, X, y=None):
        """Mean success probability over ``X``."""
        return float(self.predict_proba(X)[:, 1].mean())
