"""Regularized least squares and confidence-set geometry.

A confidence set is either the initial parameter ball ``{theta : |theta| <= B}``
or an ellipsoid ``{theta : |theta - theta_hat|_V <= beta}``. Both support exact
optimization of linear functionals through their support functions:

    max_{|theta - c|_V <= beta} <theta, phi> = <c, phi> + beta * |phi|_{V^{-1}}
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .linalg import SpdState, as_vec

CONTAINS_SLACK = 1e-12


class RlsState:
    """Running ridge-regression accumulator: ``V = lam*I + sum phi phi^T``, ``sum y*phi``."""

    __slots__ = ("spd", "xty", "m", "lam", "D")

    def __init__(self, dim: int, lam: float, D: float | None = None):
        self.spd = SpdState(dim, lam)
        self.xty = np.zeros(self.spd.dim)
        self.m = 0
        self.lam = float(lam)
        self.D = D

    @property
    def dim(self) -> int:
        return self.spd.dim

    def ingest(self, phi, y: float) -> None:
        phi = as_vec(phi, self.dim, "phi")
        if not math.isfinite(y):
            raise InvalidArgument(f"reward must be finite, got {y!r}")
        if self.D is not None and float(phi @ phi) > self.D * self.D * (1 + 1e-12):
            warnings.warn(f"feature norm {np.linalg.norm(phi):.6g} exceeds D={self.D:.6g}",
                          stacklevel=2)
        self.spd._update(phi)
        self.xty += y * phi
        self.m += 1

    def estimate(self) -> np.ndarray:
        return self.spd.V_inv @ self.xty

    def copy(self) -> RlsState:
        new = RlsState.__new__(RlsState)
        new.spd = self.spd.copy()
        new.xty = self.xty.copy()
        new.m = self.m
        new.lam = self.lam
        new.D = self.D
        return new


def rls_ingest(state: RlsState, phi, y: float) -> RlsState:
    state.ingest(phi, y)
    return state


def estimate(state: RlsState) -> np.ndarray:
    return state.estimate()


@dataclass(frozen=True)
class BetaSchedule:
    """Constants of the ellipsoid radius

    ``beta(n) = sigma * sqrt(d * log((1 + n * D^2 / lam) / delta)) + sqrt(lam) * B``.
    """

    sigma: float
    d: int
    D: float
    lam: float
    delta: float
    B: float

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise InvalidArgument(f"delta must lie in (0, 1), got {self.delta}")
        if self.sigma < 0 or self.B < 0:
            raise InvalidArgument("sigma and B must be nonnegative")
        if self.d < 1 or self.D <= 0 or self.lam <= 0:
            raise InvalidArgument("d, D and lambda must be positive")

    def radius(self, n: int) -> float:
        """Radius after ``n - 1`` samples, i.e. the formula evaluated at ``n``."""
        inner = (1.0 + n * self.D**2 / self.lam) / self.delta
        return self.sigma * math.sqrt(self.d * math.log(inner)) + math.sqrt(self.lam) * self.B


def beta_next(sched: BetaSchedule, count: int, variant: str = "clucb") -> float:
    """Radius of the next confidence set.

    For ``clucb`` ``count`` is the number of optimistic samples ``m`` and the formula
    is evaluated at ``m + 1``. For ``clucb2`` ``count`` is the round index ``t`` of
    the set being built and is used as is.
    """
    if count < 0:
        raise InvalidArgument(f"count must be nonnegative, got {count}")
    if variant == "clucb":
        return sched.radius(count + 1)
    if variant == "clucb2":
        return sched.radius(count)
    raise InvalidArgument(f"unknown beta variant {variant!r}")


@dataclass(frozen=True)
class Ball:
    """The parameter space ``{theta : |theta|_2 <= radius}``."""

    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidArgument(f"ball radius must be positive, got {self.radius}")

    def max_linear(self, phi) -> tuple[float, np.ndarray]:
        phi = as_vec(phi, name="phi")
        n = float(np.linalg.norm(phi))
        if n == 0.0:
            return 0.0, np.zeros_like(phi)
        return self.radius * n, self.radius * phi / n

    def min_linear(self, phi) -> tuple[float, np.ndarray]:
        value, arg = self.max_linear(-np.asarray(phi, dtype=np.float64))
        return -value, arg

    def upper(self, phi: np.ndarray) -> float:
        """Value of :meth:`max_linear` without input checks."""
        return self.radius * math.sqrt(float(phi @ phi))

    def lower(self, phi: np.ndarray) -> float:
        return -self.upper(phi)

    def max_values(self, Phi: np.ndarray) -> np.ndarray:
        return self.radius * np.sqrt(np.einsum("ij,ij->i", Phi, Phi))

    def contains(self, theta) -> bool:
        theta = np.asarray(theta, dtype=np.float64)
        return math.sqrt(float(theta @ theta)) <= self.radius + CONTAINS_SLACK


class Ellipsoid:
    """``{theta : |theta - center|_V <= radius}``, optionally cut by a ball.

    ``V`` and ``V^{-1}`` are snapshotted at construction so the set stays fixed
    even when the estimator that produced it keeps ingesting data.

    With ``clip`` set, the set is read as the intersection with the ball of that
    radius: linear bounds take the tighter of the two support values and returned
    optimizers are pulled radially back inside the ball.
    """

    __slots__ = ("center", "V", "V_inv", "radius", "clip")

    def __init__(self, center, V: np.ndarray, V_inv: np.ndarray, radius: float,
                 clip: float | None = None):
        if not radius > 0:
            raise InvalidArgument(f"ellipsoid radius must be positive, got {radius}")
        self.center = as_vec(center, name="center").copy()
        self.V = np.array(V, dtype=np.float64)
        self.V_inv = np.array(V_inv, dtype=np.float64)
        self.radius = float(radius)
        self.clip = clip

    @classmethod
    def from_rls(cls, rls: RlsState, radius: float, clip: float | None = None) -> Ellipsoid:
        if not radius > 0:
            raise InvalidArgument(f"ellipsoid radius must be positive, got {radius}")
        new = cls.__new__(cls)
        new.center = rls.estimate()
        new.V = rls.spd.V.copy()
        new.V_inv = rls.spd.V_inv.copy()
        new.radius = float(radius)
        new.clip = clip
        return new

    def _clip(self, theta: np.ndarray) -> np.ndarray:
        if self.clip is None:
            return theta
        n = float(np.linalg.norm(theta))
        return theta if n <= self.clip else theta * (self.clip / n)

    def max_linear(self, phi) -> tuple[float, np.ndarray]:
        phi = as_vec(phi, self.center.shape[0], "phi")
        Vphi = self.V_inv @ phi
        width = math.sqrt(max(float(phi @ Vphi), 0.0))
        base = float(self.center @ phi)
        if width == 0.0:
            return base, self._clip(self.center.copy())
        value = base + self.radius * width
        if self.clip is not None:
            value = min(value, self.clip * float(np.linalg.norm(phi)))
        return value, self._clip(self.center + (self.radius / width) * Vphi)

    def min_linear(self, phi) -> tuple[float, np.ndarray]:
        value, arg = self.max_linear(-np.asarray(phi, dtype=np.float64))
        return -value, arg

    def upper(self, phi: np.ndarray) -> float:
        """Value of :meth:`max_linear` without input checks."""
        value = float(self.center @ phi) + self.radius * math.sqrt(max(float(phi @ self.V_inv @ phi), 0.0))
        if self.clip is not None:
            value = min(value, self.clip * math.sqrt(float(phi @ phi)))
        return value

    def lower(self, phi: np.ndarray) -> float:
        return -self.upper(-phi)

    def max_values(self, Phi: np.ndarray) -> np.ndarray:
        """Support values for every row of ``Phi`` at once."""
        widths = np.sqrt(np.maximum(((Phi @ self.V_inv) * Phi).sum(axis=1), 0.0))
        values = Phi @ self.center + self.radius * widths
        if self.clip is not None:
            values = np.minimum(values, self.clip * np.sqrt(np.einsum("ij,ij->i", Phi, Phi)))
        return values

    def contains(self, theta) -> bool:
        theta = np.asarray(theta, dtype=np.float64)
        diff = theta - self.center
        inside = math.sqrt(max(float(diff @ self.V @ diff), 0.0)) <= self.radius + CONTAINS_SLACK
        if inside and self.clip is not None:
            inside = float(np.linalg.norm(theta)) <= self.clip + CONTAINS_SLACK
        return inside


ConfidenceSet = Ball | Ellipsoid


def max_linear(cs: ConfidenceSet, phi) -> tuple[float, np.ndarray]:
    return cs.max_linear(phi)


def min_linear(cs: ConfidenceSet, phi) -> tuple[float, np.ndarray]:
    return cs.min_linear(phi)


def contains(cs: ConfidenceSet, theta) -> bool:
    return cs.contains(theta)
