"""Bandit policies behind one ``decide`` / ``update`` interface.

Each round the harness calls ``decide(t, baseline_arm, baseline_reward)`` and then
``update(decision, y)`` with the observed reward. ``baseline_reward`` is ``None``
when the baseline's mean reward is hidden from the learner.

Ties between arms with equal optimistic value go to the lowest arm index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .confidence import Ball, BetaSchedule, Ellipsoid, RlsState, beta_next
from .errors import InvalidArgument

OPTIMISTIC = "optimistic"
CONSERVATIVE = "conservative"


@dataclass(frozen=True)
class Decision:
    t: int
    action: int
    kind: str
    candidate: int
    candidate_value: float
    baseline_arm: int
    baseline_reward: float | None = None
    L: float = float("nan")
    R: float | None = None

    @property
    def optimistic(self) -> bool:
        return self.kind == OPTIMISTIC


def check_alpha(alpha: float) -> float:
    if not 0 < alpha < 1:
        raise InvalidArgument(f"alpha must lie in the open interval (0, 1), got {alpha}")
    return float(alpha)


class _Optimist:
    """Shared machinery: arm features, a confidence set and the optimistic arm."""

    def __init__(self, arms: np.ndarray, sched: BetaSchedule):
        self.arms = np.asarray(arms, dtype=np.float64)
        if self.arms.ndim != 2 or self.arms.shape[0] == 0:
            raise InvalidArgument("action set must be a non-empty K x d matrix")
        self.sched = sched
        self.rls = RlsState(self.arms.shape[1], sched.lam, sched.D)
        self.conf: Ball | Ellipsoid = Ball(sched.B)

    def optimistic_arm(self) -> tuple[int, float]:
        values = self.conf.max_values(self.arms)
        a = int(np.argmax(values))  # first maximizer, i.e. lowest index
        return a, float(values[a])


class LUCB(_Optimist):
    """Linear UCB that ignores the baseline; its confidence set uses every sample."""

    name = "lucb"

    def decide(self, t: int, baseline_arm: int, baseline_reward: float | None = None) -> Decision:
        a, value = self.optimistic_arm()
        return Decision(t, a, OPTIMISTIC, a, value, baseline_arm, baseline_reward)

    def update(self, decision: Decision, y: float) -> None:
        self.rls.ingest(self.arms[decision.action], y)
        self.conf = Ellipsoid.from_rls(self.rls, beta_next(self.sched, self.rls.m, "clucb"))


class CLUCB(_Optimist):
    """Conservative linear UCB for a baseline with known mean rewards.

    The optimistic arm is played only if the worst parameter in the confidence set
    still keeps cumulative reward above ``(1 - alpha)`` times the baseline's.
    Baseline rounds leave the confidence set untouched, so their observations are
    not used for learning.
    """

    name = "clucb"

    def __init__(self, arms: np.ndarray, sched: BetaSchedule, alpha: float):
        super().__init__(arms, sched)
        self.alpha = check_alpha(alpha)
        self.z = np.zeros(self.arms.shape[1])
        self.m = 0
        self.n = 0
        self.baseline_reward_sum = 0.0  # over conservative rounds
        self.total_baseline_sum = 0.0  # over all rounds so far
        self._cached: tuple[int, float, float] | None = None

    def decide(self, t: int, baseline_arm: int, baseline_reward: float | None = None) -> Decision:
        if baseline_reward is None:
            raise InvalidArgument("CLUCB needs the baseline's mean reward every round")
        if self._cached is None:
            # the confidence set and z only move on optimistic rounds
            a, value = self.optimistic_arm()
            L = self.conf.lower(self.z + self.arms[a])
            self._cached = (a, value, L)
        a, value, L = self._cached
        rhs = (1.0 - self.alpha) * (self.total_baseline_sum + baseline_reward)
        if L + self.baseline_reward_sum >= rhs:
            return Decision(t, a, OPTIMISTIC, a, value, baseline_arm, baseline_reward, L, rhs)
        return Decision(t, baseline_arm, CONSERVATIVE, a, value, baseline_arm, baseline_reward, L, rhs)

    def update(self, decision: Decision, y: float | None) -> None:
        self.total_baseline_sum += decision.baseline_reward
        if decision.optimistic:
            phi = self.arms[decision.action]
            self.rls.ingest(phi, y)
            self.z = self.z + phi
            self.m += 1
            self.conf = Ellipsoid.from_rls(self.rls, beta_next(self.sched, self.m, "clucb"))
            self._cached = None
        else:
            self.n += 1
            self.baseline_reward_sum += decision.baseline_reward


class CLUCB2(_Optimist):
    """Conservative linear UCB when the baseline's mean rewards are unknown.

    Both sides of the safety check are bounded through the confidence set, with
    ``r_l`` (a known lower bound on baseline reward) floored into the credit for
    past conservative rounds. Every observation, baseline or not, is learned from.

    Only the latest ellipsoid is used. With ``strict_nested`` it is additionally cut
    by the initial parameter ball.
    """

    name = "clucb2"

    def __init__(self, arms: np.ndarray, sched: BetaSchedule, alpha: float, r_l: float,
                 strict_nested: bool = False):
        super().__init__(arms, sched)
        self.alpha = check_alpha(alpha)
        if not r_l > 0:
            raise InvalidArgument(f"r_l must be positive, got {r_l}")
        self.r_l = float(r_l)
        self.strict_nested = strict_nested
        d = self.arms.shape[1]
        self.z = np.zeros(d)  # played features on optimistic rounds
        self.w = np.zeros(d)  # baseline features on conservative rounds
        self.v = np.zeros(d)  # baseline features on optimistic rounds
        self.n = 0

    def decide(self, t: int, baseline_arm: int, baseline_reward: float | None = None) -> Decision:
        a, value = self.optimistic_arm()
        conf = self.conf
        phi_b = self.arms[baseline_arm]
        R = conf.upper(self.v + phi_b)
        past = conf.lower(self.w)
        L = conf.lower(self.z + self.arms[a]) + self.alpha * max(past, self.n * self.r_l)
        kind = OPTIMISTIC if L >= (1.0 - self.alpha) * R else CONSERVATIVE
        action = a if kind == OPTIMISTIC else baseline_arm
        return Decision(t, action, kind, a, value, baseline_arm, baseline_reward, L, R)

    def update(self, decision: Decision, y: float) -> None:
        self.rls.ingest(self.arms[decision.action], y)
        phi_b = self.arms[decision.baseline_arm]
        if decision.optimistic:
            self.z = self.z + self.arms[decision.action]
            self.v = self.v + phi_b
        else:
            self.w = self.w + phi_b
            self.n += 1
        radius = beta_next(self.sched, decision.t + 1, "clucb2")
        self.conf = Ellipsoid.from_rls(self.rls, radius, clip=self.sched.B if self.strict_nested else None)


class OraclePolicy:
    """Always plays the best arm; needs the true parameter."""

    name = "oracle"

    def __init__(self, means: np.ndarray):
        self.best = int(np.argmax(means))
        self.value = float(means[self.best])

    def decide(self, t: int, baseline_arm: int, baseline_reward: float | None = None) -> Decision:
        return Decision(t, self.best, OPTIMISTIC, self.best, self.value, baseline_arm, baseline_reward)

    def update(self, decision: Decision, y: float) -> None:
        pass


class BaselinePolicy:
    """Always defers to the baseline."""

    name = "baseline"

    def decide(self, t: int, baseline_arm: int, baseline_reward: float | None = None) -> Decision:
        return Decision(t, baseline_arm, CONSERVATIVE, baseline_arm, float("nan"), baseline_arm,
                        baseline_reward)

    def update(self, decision: Decision, y: float) -> None:
        pass

