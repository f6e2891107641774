"""Linear bandit problem instances, baseline policies and seeded reward noise.

An instance is a fixed set of K arms with feature vectors in R^d and a hidden
parameter ``theta_star``; pulling arm ``a`` yields ``<theta_star, phi_a> + eta``.
Action sets are time independent, but every query takes the round ``t`` so the
interfaces do not change if time-varying sets are added later.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import GenerationFailed, InstanceParseError, InvalidArgument

MAX_REJECTIONS = 1000
NOISE_BLOCK = 4096

# stream purposes for the counter-based generators
PURPOSE_INSTANCE = 0
PURPOSE_NOISE = 1


def stream(seed: int, run: int, purpose: int, block: int = 0) -> np.random.Generator:
    """Philox generator keyed by ``(seed, run, purpose, block)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, run, purpose, block])))


@dataclass(frozen=True)
class BaselineSpec:
    """Which arm the baseline plays, and what the learner knows about it.

    ``kind`` is ``"ranked"`` (the ``k``-th best arm, 1-based) or ``"fixed"`` (a
    0-based arm index). The reward and gap bounds are filled in from the instance.
    """

    kind: str
    rank_or_index: int
    reward_known: bool = True
    r_l: float = 0.0
    r_h: float = 0.0
    delta_l: float = 0.0
    delta_h: float = 0.0


@dataclass
class ProblemInstance:
    arms: np.ndarray
    theta_star: np.ndarray
    sigma: float
    B: float
    D: float
    baseline: BaselineSpec
    means: np.ndarray = field(init=False, repr=False)
    baseline_arm: int = field(init=False)
    optimal_arm: int = field(init=False)

    def __post_init__(self):
        self.arms = np.array(self.arms, dtype=np.float64)
        self.theta_star = np.array(self.theta_star, dtype=np.float64)
        if self.arms.ndim != 2:
            raise InvalidArgument("arms must be a K x d matrix")
        K, d = self.arms.shape
        if K < 2:
            raise InvalidArgument(f"need at least 2 arms, got {K}")
        if self.theta_star.shape != (d,):
            raise InvalidArgument(f"theta_star has length {self.theta_star.size}, arms have d={d}")
        if not (np.all(np.isfinite(self.arms)) and np.all(np.isfinite(self.theta_star))):
            raise InvalidArgument("arms and theta_star must be finite")
        if self.sigma < 0:
            raise InvalidArgument("sigma must be nonnegative")
        self.means = self.arms @ self.theta_star
        self.optimal_arm = int(np.argmax(self.means))
        self.baseline_arm = self._resolve_baseline()
        r_b = float(self.means[self.baseline_arm])
        gap = float(self.means[self.optimal_arm]) - r_b
        # time-independent arms: the per-round bounds collapse to one value each
        self.baseline = BaselineSpec(
            kind=self.baseline.kind,
            rank_or_index=self.baseline.rank_or_index,
            reward_known=self.baseline.reward_known,
            r_l=r_b,
            r_h=r_b,
            delta_l=0.0,
            delta_h=gap,
        )
        self.validate()

    def _resolve_baseline(self) -> int:
        choice = self.baseline
        K = self.K
        if choice.kind == "ranked":
            if not 1 <= choice.rank_or_index <= K:
                raise InvalidArgument(f"baseline rank must be in [1, {K}], got {choice.rank_or_index}")
            # stable sort: ties resolve to the lowest arm index
            order = np.argsort(-self.means, kind="stable")
            return int(order[choice.rank_or_index - 1])
        if choice.kind == "fixed":
            if not 0 <= choice.rank_or_index < K:
                raise InvalidArgument(f"baseline index must be in [0, {K}), got {choice.rank_or_index}")
            return int(choice.rank_or_index)
        raise InvalidArgument(f"unknown baseline kind {choice.kind!r}")

    @property
    def d(self) -> int:
        return self.arms.shape[1]

    @property
    def K(self) -> int:
        return self.arms.shape[0]

    def validate(self) -> None:
        """Check the boundedness assumptions on rewards, parameter and features."""
        tol = 1e-12
        if np.any(self.means < -tol) or np.any(self.means > 1 + tol):
            raise InvalidArgument("mean rewards must lie in [0, 1]")
        if np.linalg.norm(self.theta_star) > self.B * (1 + tol):
            raise InvalidArgument("|theta_star| exceeds B")
        if np.max(np.linalg.norm(self.arms, axis=1)) > self.D * (1 + tol):
            raise InvalidArgument("a feature norm exceeds D")
        b = self.baseline
        r_b = float(self.means[self.baseline_arm])
        gap = float(self.means[self.optimal_arm]) - r_b
        if not (b.r_l <= r_b + tol and r_b <= b.r_h + tol):
            raise InvalidArgument("baseline reward outside [r_l, r_h]")
        if not (b.delta_l - tol <= gap <= b.delta_h + tol):
            raise InvalidArgument("baseline gap outside [delta_l, delta_h]")
        if b.r_l <= 0:
            raise InvalidArgument(f"baseline reward must be positive, got {b.r_l}")

    def feature(self, t: int, action: int) -> np.ndarray:
        return self.arms[action]

    def mean_reward(self, t: int, action: int) -> float:
        return float(self.means[action])


@dataclass(frozen=True)
class NoiseModel:
    """Reward noise drawn from a counter-based stream keyed by ``(seed, run)``.

    ``kind="gaussian"`` draws ``N(0, scale^2)``; ``kind="uniform"`` draws from
    ``[-scale, scale]``. Both are ``scale``-sub-Gaussian. The value for round ``t``
    depends only on ``(seed, run, t)``, never on the order of queries.
    """

    kind: str = "gaussian"
    scale: float = 1.0
    seed: int = 0
    run: int = 0

    def __post_init__(self):
        if self.kind not in ("gaussian", "uniform"):
            raise InvalidArgument(f"unknown noise kind {self.kind!r}")
        if self.scale < 0:
            raise InvalidArgument("noise scale must be nonnegative")

    def block(self, b: int) -> np.ndarray:
        rng = stream(self.seed, self.run, PURPOSE_NOISE, b)
        if self.kind == "gaussian":
            return self.scale * rng.standard_normal(NOISE_BLOCK)
        return rng.uniform(-self.scale, self.scale, NOISE_BLOCK)

    def sample(self, t: int) -> float:
        b, i = divmod(t, NOISE_BLOCK)
        return float(self.block(b)[i])

    def series(self, horizon: int) -> np.ndarray:
        """Noise for rounds ``0 .. horizon`` (index ``t`` holds round ``t``)."""
        n_blocks = horizon // NOISE_BLOCK + 1
        return np.concatenate([self.block(b) for b in range(n_blocks)])[: horizon + 1]


def pull(inst: ProblemInstance, t: int, action: int, noise: NoiseModel) -> float:
    if not 0 <= action < inst.K:
        raise InvalidArgument(f"arm index {action} out of range [0, {inst.K})")
    mean = float(inst.means[action])
    if noise.scale == 0:
        return mean
    return mean + noise.sample(t)


def oracle_action(inst: ProblemInstance, t: int) -> tuple[int, float]:
    a = inst.optimal_arm
    return a, float(inst.means[a])


def baseline_action(inst: ProblemInstance, t: int) -> tuple[int, float | None]:
    """Baseline arm for round ``t`` and its mean reward, or ``None`` when hidden."""
    b = inst.baseline_arm
    return b, (float(inst.means[b]) if inst.baseline.reward_known else None)


def _draw_positive_arms(theta: np.ndarray, K: int, draw: Callable[[], np.ndarray]) -> np.ndarray:
    """Draw K features one at a time, redrawing any whose mean reward is not positive."""
    arms = []
    for _ in range(K):
        for _attempt in range(MAX_REJECTIONS):
            phi = np.asarray(draw(), dtype=np.float64)
            if float(theta @ phi) > 0:
                arms.append(phi)
                break
        else:
            raise GenerationFailed(f"no positive-reward arm after {MAX_REJECTIONS} draws")
    return np.array(arms)


def generate_instance(d: int = 4, K: int = 100, sigma: float = 1.0, baseline_rank: int = 10,
                      seed: int = 0, run: int = 0, reward_known: bool = True,
                      draw: Callable[[], np.ndarray] | None = None) -> ProblemInstance:
    """Random instance with standard Gaussian ``theta_star`` and arm features.

    Arms with nonpositive mean reward are redrawn, then ``theta_star`` is rescaled
    so the best arm's mean reward is exactly 1. ``draw`` replaces the Gaussian
    sampler (first call gives ``theta_star``, later calls give features).
    """
    if K < 2 or d < 1:
        raise InvalidArgument("need d >= 1 and K >= 2")
    if not 1 <= baseline_rank <= K:
        raise InvalidArgument(f"baseline_rank must be in [1, {K}], got {baseline_rank}")
    if draw is None:
        rng = stream(seed, run, PURPOSE_INSTANCE)
        draw = lambda: rng.standard_normal(d)  # noqa: E731
    theta = np.asarray(draw(), dtype=np.float64)
    if not np.any(theta):
        raise GenerationFailed("theta_star drawn as the zero vector")
    arms = _draw_positive_arms(theta, K, draw)
    theta = theta / float(np.max(arms @ theta))
    return ProblemInstance(
        arms=arms,
        theta_star=theta,
        sigma=sigma,
        B=float(np.linalg.norm(theta)),
        D=float(np.max(np.linalg.norm(arms, axis=1))),
        baseline=BaselineSpec("ranked", baseline_rank, reward_known),
    )


# --------------------------------------------------------------------------
# instance files

def _num(x: float) -> str:
    return format(float(x), ".17g")


def _vec(xs) -> str:
    return "[" + ", ".join(_num(x) for x in xs) + "]"


def dumps_instance(inst: ProblemInstance) -> str:
    b = inst.baseline
    arms = ",\n    ".join(_vec(row) for row in inst.arms)
    return (
        "{\n"
        f'  "d": {inst.d},\n'
        f'  "arms": [\n    {arms}\n  ],\n'
        f'  "theta_star": {_vec(inst.theta_star)},\n'
        f'  "sigma": {_num(inst.sigma)},\n'
        f'  "B": {_num(inst.B)},\n'
        f'  "D": {_num(inst.D)},\n'
        f'  "baseline": {{"kind": "{b.kind}", "rank_or_index": {b.rank_or_index}, '
        f'"reward_known": {"true" if b.reward_known else "false"}}}\n'
        "}\n"
    )


def _line_of(text: str, needle: str) -> int:
    pos = text.find(needle)
    return text.count("\n", 0, pos) + 1 if pos >= 0 else 1


def loads_instance(text: str) -> ProblemInstance:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc

    def fail(key: str, msg: str):
        line = _line_of(text, '"' + key + '"')
        raise InstanceParseError(f"line {line}: {key}: {msg}")

    if not isinstance(raw, dict):
        raise InstanceParseError("line 1: top level must be an object")
    for key in ("d", "arms", "theta_star", "sigma", "B", "D", "baseline"):
        if key not in raw:
            fail(key, "missing field")
    d = raw["d"]
    if not isinstance(d, int) or d < 1:
        fail("d", f"must be a positive integer, got {d!r}")
    arms = raw["arms"]
    if not isinstance(arms, list) or len(arms) < 2:
        fail("arms", "must be a list of at least 2 feature vectors")
    for i, row in enumerate(arms):
        if not isinstance(row, list) or len(row) != d:
            fail("arms", f"arm {i} has length {len(row) if isinstance(row, list) else '?'}, expected d={d}")
    theta = raw["theta_star"]
    if not isinstance(theta, list) or len(theta) != d:
        fail("theta_star", f"must have length d={d}")
    base = raw["baseline"]
    if not isinstance(base, dict) or not {"kind", "rank_or_index"} <= base.keys():
        fail("baseline", "needs kind and rank_or_index")
    try:
        inst = ProblemInstance(
            arms=np.array(arms, dtype=np.float64),
            theta_star=np.array(theta, dtype=np.float64),
            sigma=float(raw["sigma"]),
            B=float(raw["B"]),
            D=float(raw["D"]),
            baseline=BaselineSpec(str(base["kind"]), int(base["rank_or_index"]),
                                  bool(base.get("reward_known", True))),
        )
    except (InvalidArgument, TypeError, ValueError) as exc:
        raise InstanceParseError(f"line 1: invalid instance: {exc}") from exc
    return inst


def save_instance(inst: ProblemInstance, path) -> None:
    Path(path).write_text(dumps_instance(inst))


def load_instance(path) -> ProblemInstance:
    return loads_instance(Path(path).read_text())


def ranked_arm(inst: ProblemInstance, k: int) -> int:
    """0-based index of the ``k``-th best arm (1-based rank)."""
    return int(np.argsort(-inst.means, kind="stable")[k - 1])


def baseline_gap(inst: ProblemInstance, t: int) -> float:
    return float(inst.means[inst.optimal_arm] - inst.means[inst.baseline_arm])

