"""Symmetric positive-definite design matrices with an incrementally kept inverse.

The design matrix of regularized least squares, ``V = lam*I + sum x x^T``, grows by
one rank-1 term per observation. :class:`SpdState` keeps ``V`` and its inverse in
sync with the Sherman-Morrison identity and rebuilds the inverse from a Cholesky
factorization every :data:`REBUILD_EVERY` updates so round-off cannot accumulate.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg as sla

from .errors import InvalidArgument

REBUILD_EVERY = 256


def as_vec(x, dim: int | None = None, name: str = "x") -> np.ndarray:
    """Coerce ``x`` to a finite 1-D float64 array, optionally of length ``dim``."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidArgument(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise InvalidArgument(f"{name} has length {arr.shape[0]}, expected {dim}")
    if not np.isfinite(arr).all():
        raise InvalidArgument(f"{name} has non-finite entries")
    return arr


class SpdState:
    """``V = lam*I + sum_i x_i x_i^T`` together with ``V^{-1}``.

    Operations mutate in place; use :meth:`copy` for an independent snapshot.
    """

    __slots__ = ("dim", "lam", "V", "V_inv", "updates_since_rebuild", "n_updates")

    def __init__(self, dim: int, lam: float):
        if int(dim) != dim or dim < 1:
            raise InvalidArgument(f"dim must be a positive integer, got {dim!r}")
        if not np.isfinite(lam) or lam <= 0:
            raise InvalidArgument(f"lambda must be positive, got {lam!r}")
        self.dim = int(dim)
        self.lam = float(lam)
        self.V = lam * np.eye(self.dim)
        self.V_inv = np.eye(self.dim) / lam
        self.updates_since_rebuild = 0
        self.n_updates = 0

    def copy(self) -> SpdState:
        new = SpdState.__new__(SpdState)
        new.dim = self.dim
        new.lam = self.lam
        new.V = self.V.copy()
        new.V_inv = self.V_inv.copy()
        new.updates_since_rebuild = self.updates_since_rebuild
        new.n_updates = self.n_updates
        return new

    def rank_one_update(self, x) -> None:
        """Add ``x x^T`` to ``V`` and refresh ``V^{-1}``."""
        self._update(as_vec(x, self.dim))

    def _update(self, x: np.ndarray) -> None:
        Vx = self.V_inv @ x
        denom = 1.0 + float(x @ Vx)
        self.V += np.outer(x, x)
        self.V_inv -= np.outer(Vx, Vx) / denom
        self.n_updates += 1
        self.updates_since_rebuild += 1
        if self.updates_since_rebuild >= REBUILD_EVERY:
            self.rebuild()

    def rebuild(self) -> None:
        """Recompute ``V^{-1}`` from ``V`` by Cholesky factorization."""
        # V = lam*I + PSD terms, so a failure here means memory corruption or NaNs.
        try:
            factor = sla.cho_factor(self.V, lower=True, check_finite=True)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise RuntimeError(f"design matrix lost positive definiteness: {exc}") from exc
        inv = sla.cho_solve(factor, np.eye(self.dim))
        self.V_inv = 0.5 * (inv + inv.T)
        self.updates_since_rebuild = 0

    def norm(self, x, inverse: bool = False) -> float:
        """``sqrt(x^T V x)``, or ``sqrt(x^T V^{-1} x)`` when ``inverse`` is set."""
        x = as_vec(x, self.dim)
        M = self.V_inv if inverse else self.V
        return float(np.sqrt(max(float(x @ M @ x), 0.0)))

    def inverse_error(self) -> float:
        """Max-norm of ``V V^{-1} - I``; a health check for tests."""
        return float(np.max(np.abs(self.V @ self.V_inv - np.eye(self.dim))))


def spd_init(dim: int, lam: float) -> SpdState:
    return SpdState(dim, lam)


def weighted_norm(state: SpdState, x, mode: str = "direct") -> float:
    if mode not in ("direct", "inverse"):
        raise InvalidArgument(f"mode must be 'direct' or 'inverse', got {mode!r}")
    return state.norm(x, inverse=(mode == "inverse"))
