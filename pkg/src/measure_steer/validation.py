"""Coercion of user input into validated states."""
from __future__ import annotations

import numpy as np

from .qubit import INPUT_TOL, DensityMatrix, InvalidStateError, PureState, TargetFrame


def check_density_matrices(X) -> np.ndarray:
    """Return ``X`` as a validated ``(n, 2, 2)`` complex array.

    Accepts a :class:`DensityMatrix`, a single ``2 x 2`` array or a stack of
    them. Raises :class:`InvalidStateError` naming the first violated
    invariant.
    """
    if isinstance(X, DensityMatrix):
        return X.matrix[None]
    if isinstance(X, (list, tuple)) and X and isinstance(X[0], DensityMatrix):
        return np.stack([x.matrix for x in X])
    arr = np.asarray(X, dtype=complex)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1:] != (2, 2):
        raise InvalidStateError(f"expected shape (n, 2, 2) or (2, 2), got {arr.shape}")
    if arr.shape[0] == 0:
        raise InvalidStateError("no states given")
    if not np.all(np.isfinite(arr)):
        raise InvalidStateError("density matrix has non-finite entries")
    if np.max(np.abs(arr - arr.conj().transpose(0, 2, 1))) > INPUT_TOL:
        raise InvalidStateError("matrix is not Hermitian")
    for m in arr:
        DensityMatrix.from_matrix(m)
    return arr


def as_density_matrix(X) -> DensityMatrix:
    if isinstance(X, DensityMatrix):
        return X
    arr = check_density_matrices(X)
    if arr.shape[0] != 1:
        raise InvalidStateError("expected a single state")
    return DensityMatrix.from_matrix(arr[0])


def check_target(target) -> TargetFrame:
    """Frame for ``target``: a ket, a frame, two amplitudes or ``None`` for ``|0>``."""
    if target is None:
        return TargetFrame.computational()
    if isinstance(target, TargetFrame):
        return target
    if isinstance(target, PureState):
        return TargetFrame.from_target(target)
    v = np.asarray(target, dtype=complex).ravel()
    if v.shape != (2,):
        raise InvalidStateError("target must have exactly two amplitudes")
    return TargetFrame.from_target(PureState(*v))
