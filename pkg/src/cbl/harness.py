"""Episode runner, per-round metrics and multi-seed aggregation.

Safety is always judged with the true mean rewards, which the harness knows and
the policies never see.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .confidence import BetaSchedule
from .environment import NoiseModel, ProblemInstance, generate_instance
from .errors import InvalidArgument
from .policies import CLUCB, CLUCB2, LUCB, BaselinePolicy, OraclePolicy, check_alpha

POLICIES = ("lucb", "clucb", "clucb2", "oracle", "baseline")
VIOLATION_SLACK = 1e-9
THIN_ABOVE = 1000
THIN_EVERY = 10

TRACE_HEADER = ["t", "policy", "alpha", "action", "kind", "y", "expected_reward", "optimal_reward",
                "baseline_reward", "cum_regret", "constraint_lhs", "constraint_rhs", "violated",
                "coverage_ok"]
AGGREGATE_HEADER = ["t", "policy", "alpha", "mean_per_step_regret", "p05", "p95", "violation_pct"]


@dataclass(frozen=True)
class PolicyConfig:
    """What to run. ``alpha`` also sets the constraint that LUCB is scored against."""

    name: str
    alpha: float = 0.1
    lam: float = 1.0
    delta: float = 0.001
    strict_nested: bool = False

    def __post_init__(self):
        if self.name not in POLICIES:
            raise InvalidArgument(f"unknown policy {self.name!r}; expected one of {POLICIES}")
        check_alpha(self.alpha)

    @property
    def label(self) -> str:
        return f"{self.name}@{self.alpha:g}"


def schedule_for(inst: ProblemInstance, cfg: PolicyConfig) -> BetaSchedule:
    return BetaSchedule(sigma=inst.sigma, d=inst.d, D=inst.D, lam=cfg.lam, delta=cfg.delta, B=inst.B)


def make_policy(inst: ProblemInstance, cfg: PolicyConfig):
    sched = schedule_for(inst, cfg)
    if cfg.name == "lucb":
        return LUCB(inst.arms, sched)
    if cfg.name == "clucb":
        return CLUCB(inst.arms, sched, cfg.alpha)
    if cfg.name == "clucb2":
        return CLUCB2(inst.arms, sched, cfg.alpha, inst.baseline.r_l, cfg.strict_nested)
    if cfg.name == "oracle":
        return OraclePolicy(inst.means)
    return BaselinePolicy()


def _running_sum(x: np.ndarray) -> np.ndarray:
    # extended precision keeps 10^4..10^5-term prefix sums accurate to a few ulps
    return np.cumsum(x, dtype=np.longdouble).astype(np.float64)


@dataclass
class RunTrace:
    """Column-wise per-round record of one episode; index ``i`` is round ``i + 1``."""

    policy: str
    alpha: float
    seed: int
    run: int
    actions: np.ndarray
    optimistic: np.ndarray
    candidates: np.ndarray
    y: np.ndarray
    expected: np.ndarray
    optimal: np.ndarray
    baseline: np.ndarray
    coverage: np.ndarray
    cum_regret: np.ndarray = field(init=False)
    lhs: np.ndarray = field(init=False)
    rhs: np.ndarray = field(init=False)
    violated: np.ndarray = field(init=False)

    def __post_init__(self):
        self.cum_regret = _running_sum(self.optimal - self.expected)
        self.lhs = _running_sum(self.expected)
        self.rhs = (1.0 - self.alpha) * _running_sum(self.baseline)
        self.violated = self.lhs < self.rhs - VIOLATION_SLACK

    @property
    def horizon(self) -> int:
        return len(self.actions)

    @property
    def n_conservative(self) -> int:
        return int(np.count_nonzero(~self.optimistic))

    def n_conservative_at(self, T: int) -> int:
        return int(np.count_nonzero(~self.optimistic[:T]))

    @property
    def coverage_intact(self) -> bool:
        return bool(np.all(self.coverage))

    def truncated(self, horizon: int) -> RunTrace:
        """The first ``horizon`` rounds; equal to running the episode that long."""
        h = slice(0, horizon)
        return RunTrace(self.policy, self.alpha, self.seed, self.run, self.actions[h],
                        self.optimistic[h], self.candidates[h], self.y[h], self.expected[h],
                        self.optimal[h], self.baseline[h], self.coverage[h])

    def with_alpha(self, alpha: float) -> RunTrace:
        """Same rounds, scored against a different safety level."""
        return RunTrace(self.policy, check_alpha(alpha), self.seed, self.run, self.actions,
                        self.optimistic, self.candidates, self.y, self.expected, self.optimal,
                        self.baseline, self.coverage)


def run_episode(inst: ProblemInstance, cfg: PolicyConfig, horizon: int, seed: int = 0,
                run: int = 0, noise_kind: str = "gaussian") -> RunTrace:
    """Play ``horizon`` rounds; deterministic in ``(inst, cfg, seed, run)``."""
    if horizon < 1:
        raise InvalidArgument(f"horizon must be >= 1, got {horizon}")
    policy = make_policy(inst, cfg)
    noise = NoiseModel(noise_kind, inst.sigma, seed, run).series(horizon)
    means = inst.means
    theta_star = inst.theta_star
    b = inst.baseline_arm
    r_b = float(means[b])
    r_b_seen = r_b if inst.baseline.reward_known else None
    r_star = float(means[inst.optimal_arm])

    actions = np.empty(horizon, dtype=np.int64)
    candidates = np.empty(horizon, dtype=np.int64)
    optimistic = np.empty(horizon, dtype=bool)
    coverage = np.ones(horizon, dtype=bool)
    ys = np.empty(horizon)
    has_conf = hasattr(policy, "conf")
    last_conf, covered = None, True
    for i in range(horizon):
        t = i + 1
        if has_conf:
            conf = policy.conf
            if conf is not last_conf:
                covered = conf.contains(theta_star)
                last_conf = conf
            coverage[i] = covered
        dec = policy.decide(t, b, r_b_seen)
        a = dec.action
        y = float(means[a]) + float(noise[t])
        policy.update(dec, y)
        actions[i] = a
        candidates[i] = dec.candidate
        optimistic[i] = dec.optimistic
        ys[i] = y
    return RunTrace(cfg.name, cfg.alpha, seed, run, actions, optimistic, candidates, ys,
                    means[actions], np.full(horizon, r_star), np.full(horizon, r_b), coverage)


def per_step_regret(trace: RunTrace) -> np.ndarray:
    return trace.cum_regret / np.arange(1, trace.horizon + 1)


def violation_pct(trace: RunTrace, window: int = 1000) -> float:
    """Percentage of the first ``window`` rounds at which the constraint is broken."""
    v = trace.violated[:window]
    return 100.0 * float(np.mean(v)) if len(v) else 0.0


def violation_stats(traces, window: int = 1000, coverage_intact_only: bool = False) -> float:
    """Mean over episodes of :func:`violation_pct`."""
    chosen = [tr for tr in traces if tr.coverage_intact or not coverage_intact_only]
    if not chosen:
        return 0.0
    return float(np.mean([violation_pct(tr, window) for tr in chosen]))


def regret_decomposition(trace: RunTrace) -> tuple[float, float]:
    """Regret split into optimistic-round regret and summed baseline gaps."""
    gaps = trace.optimal - trace.expected
    opt = trace.optimistic
    return math.fsum(gaps[opt]), math.fsum((trace.optimal - trace.baseline)[~opt])


def thinned_grid(horizon: int) -> np.ndarray:
    """Rounds kept in aggregates: all up to 1,000, then every 10th."""
    head = np.arange(1, min(horizon, THIN_ABOVE) + 1)
    if horizon <= THIN_ABOVE:
        return head
    tail = np.arange(THIN_ABOVE + THIN_EVERY, horizon + 1, THIN_EVERY)
    if tail.size == 0 or tail[-1] != horizon:
        tail = np.append(tail, horizon)
    return np.concatenate([head, tail])


@dataclass
class AggregateStats:
    policy: str
    alpha: float
    t: np.ndarray
    mean_per_step_regret: np.ndarray
    p05: np.ndarray
    p95: np.ndarray
    violation_pct: np.ndarray
    n_T: np.ndarray
    n_episodes: int


def aggregate(traces, thin: bool = True) -> AggregateStats:
    traces = list(traces)
    if not traces:
        raise InvalidArgument("nothing to aggregate")
    horizon = min(tr.horizon for tr in traces)
    grid = thinned_grid(horizon) if thin else np.arange(1, horizon + 1)
    idx = grid - 1
    psr = np.array([per_step_regret(tr)[idx] for tr in traces])
    viol = np.array([tr.violated[idx] for tr in traces])
    return AggregateStats(
        policy=traces[0].policy,
        alpha=traces[0].alpha,
        t=grid,
        mean_per_step_regret=psr.mean(axis=0),
        p05=np.percentile(psr, 5, axis=0),
        p95=np.percentile(psr, 95, axis=0),
        violation_pct=100.0 * viol.mean(axis=0),
        n_T=np.array([tr.n_conservative_at(horizon) for tr in traces]),
        n_episodes=len(traces),
    )


# --------------------------------------------------------------------------
# batches of episodes

@dataclass(frozen=True)
class EpisodeJob:
    """One episode. Without ``instance`` a fresh instance is drawn from ``(seed, run)``."""

    cfg: PolicyConfig
    horizon: int
    seed: int
    run: int
    instance: ProblemInstance | None = None
    gen: tuple = (4, 100, 1.0, 10)  # d, K, sigma, baseline rank
    reward_known: bool = True


def job_instance(job: EpisodeJob) -> ProblemInstance:
    if job.instance is not None:
        return job.instance
    d, K, sigma, rank = job.gen
    reward_known = job.cfg.name != "clucb2" and job.reward_known
    return generate_instance(d, K, sigma, rank, seed=job.seed, run=job.run, reward_known=reward_known)


def run_job(job: EpisodeJob) -> RunTrace:
    return run_episode(job_instance(job), job.cfg, job.horizon, job.seed, job.run)


def run_jobs(jobs, threads: int = 1) -> list[RunTrace]:
    """Run episodes, in worker processes when ``threads > 1``; output order follows input."""
    jobs = list(jobs)
    if threads <= 1 or len(jobs) < 2:
        return [run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run_job, jobs, chunksize=max(1, len(jobs) // (4 * threads))))


# --------------------------------------------------------------------------
# CSV output

def _g(x: float) -> str:
    return format(float(x), ".10g")


def _b(x) -> str:
    return "true" if x else "false"


def trace_rows(trace: RunTrace, rounds=None):
    rounds = range(1, trace.horizon + 1) if rounds is None else rounds
    for t in rounds:
        i = t - 1
        yield [str(t), trace.policy, _g(trace.alpha), str(int(trace.actions[i])),
               "optimistic" if trace.optimistic[i] else "conservative", _g(trace.y[i]),
               _g(trace.expected[i]), _g(trace.optimal[i]), _g(trace.baseline[i]),
               _g(trace.cum_regret[i]), _g(trace.lhs[i]), _g(trace.rhs[i]),
               _b(trace.violated[i]), _b(trace.coverage[i])]


def write_trace_csv(trace: RunTrace, path, thin: bool = False) -> None:
    rounds = thinned_grid(trace.horizon) if thin else None
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        w.writerows(trace_rows(trace, rounds))


def write_aggregate_csv(stats_list, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGGREGATE_HEADER)
        for s in stats_list:
            for j, t in enumerate(s.t):
                w.writerow([str(int(t)), s.policy, _g(s.alpha), _g(s.mean_per_step_regret[j]),
                            _g(s.p05[j]), _g(s.p95[j]), _g(s.violation_pct[j])])


def read_trace_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p

