"""Numerical checks of the inequalities the algorithms rely on.

Each checker evaluates both sides of one inequality instance and reports whether
it holds. The sweep helpers generate the case families used by ``cbl verify``
and the acceptance tests.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .confidence import Ellipsoid, RlsState
from .environment import ProblemInstance, generate_instance
from .errors import InvalidArgument
from .harness import PolicyConfig, RunTrace, make_policy, run_episode, schedule_for
from .linalg import SpdState
from .policies import LUCB


@dataclass
class LemmaCheckCase:
    lemma: str
    inputs: dict
    lhs: float
    rhs: float
    holds: bool
    applicable: bool = True
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def check_lemma1(X, lam: float, D: float | None = None) -> LemmaCheckCase:
    """Elliptical potential: ``sum_i min(1, |X_i|^2_{V_{i-1}^{-1}}) <= 2d log(1 + k D^2 / (lam d))``."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    k, d = X.shape
    norms = np.linalg.norm(X, axis=1)
    if D is None:
        D = float(norms.max()) if k else 0.0
    if k and norms.max() > D * (1 + 1e-12):
        raise InvalidArgument("a sequence element exceeds the norm bound D")
    spd = SpdState(d, lam)
    lhs = 0.0
    for x in X:
        Vx = spd.V_inv @ x
        lhs += min(1.0, float(x @ Vx))
        spd._update(x)
    rhs = 2 * d * math.log(1 + k * D * D / (lam * d))
    return LemmaCheckCase("lemma1", {"k": k, "d": d, "lambda": lam, "D": D}, lhs, rhs, lhs <= rhs)


def check_lemma2(c1: float, c2: float, c3: float, m: float) -> LemmaCheckCase:
    """``-c3 m + c1 sqrt(m) log(c2 m) <= 16 c1^2 / (9 c3) * log(2 c1 sqrt(c2) e / c3)^2`` for ``m >= 2``."""
    if m < 2 or min(c1, c2, c3) <= 0:
        raise InvalidArgument("need m >= 2 and positive constants")
    lhs = -c3 * m + c1 * math.sqrt(m) * math.log(c2 * m)
    rhs = 16 * c1**2 / (9 * c3) * math.log(2 * c1 * math.sqrt(c2) * math.e / c3) ** 2
    return LemmaCheckCase("lemma2", {"c1": c1, "c2": c2, "c3": c3, "m": m}, lhs, rhs, lhs <= rhs)


def check_lemma3(c1: float, c2: float, x: float) -> LemmaCheckCase:
    """If ``log(c1 c2) >= 1`` and ``x <= c1 log(c2 x)`` then ``x <= 2 c1 log(c1 c2)``.

    Cases where the hypothesis ``log(c1 c2) >= 1`` fails are marked not applicable;
    cases with a false premise hold vacuously.
    """
    inputs = {"c1": c1, "c2": c2, "x": x}
    rhs = 2 * c1 * math.log(c1 * c2)
    if math.log(c1 * c2) < 1:
        return LemmaCheckCase("lemma3", inputs, x, rhs, True, applicable=False,
                              note="log(c1*c2) < 1")
    premise = x <= c1 * math.log(c2 * x)
    if not premise:
        return LemmaCheckCase("lemma3", inputs, x, rhs, True, note="premise false")
    return LemmaCheckCase("lemma3", inputs, x, rhs, x <= rhs)


def lemma1_sweep(n_sequences: int = 1000, k_max: int = 2000, d_max: int = 5, seed: int = 0):
    rng = np.random.default_rng([seed, 1])
    cases = []
    for _ in range(n_sequences):
        d = int(rng.integers(1, d_max + 1))
        k = int(rng.integers(1, k_max + 1))
        D = float(rng.choice([0.5, 1.0, 3.0]))
        lam = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
        X = rng.standard_normal((k, d))
        X *= D / np.linalg.norm(X, axis=1, keepdims=True)
        if rng.random() < 0.5:
            X *= rng.uniform(0.0, 1.0, (k, 1))
        cases.append(check_lemma1(X, lam, D))
    return cases


def lemma2_grid(values=(0.1, 1.0, 10.0), n_m: int = 200, m_max: float = 1e6):
    ms = np.logspace(np.log10(2.0), np.log10(m_max), n_m)
    return [check_lemma2(c1, c2, c3, float(m))
            for c1 in values for c2 in values for c3 in values for m in ms]


def lemma3_grid(n_constants: int = 400, n_x: int = 200, seed: int = 0):
    rng = np.random.default_rng([seed, 3])
    cases = []
    for _ in range(n_constants):
        c1 = float(np.exp(rng.uniform(np.log(0.05), np.log(100.0))))
        # keep log(c1 c2) >= 1 so the lemma applies
        c2 = float(math.e / c1 * np.exp(rng.uniform(0.0, 8.0)))
        xs = np.logspace(-3, np.log10(50 * c1 * math.log(c1 * c2) + 1), n_x)
        cases.extend(check_lemma3(c1, c2, float(x)) for x in xs)
    return cases


# --------------------------------------------------------------------------
# conservative-round count

def nT_bound_rhs(d: int, B: float, lam: float, sigma: float, D: float, delta: float,
                 alpha: float, r_l: float, delta_l: float = 0.0) -> float:
    """Right side of ``alpha r_l (n_T - 1) <= 114 d^2 (B sqrt(lam) + sigma)^2 / (Delta_l + alpha r_l) [log(...)]^2``."""
    s = B * math.sqrt(lam) + sigma
    c = delta_l + alpha * r_l
    return 114 * d**2 * s**2 / c * math.log(64 * d * s * D / (math.sqrt(lam * delta) * c)) ** 2


def check_nT_bound(trace: RunTrace, inst: ProblemInstance, cfg: PolicyConfig) -> bool | None:
    """Whether the episode's conservative count respects the bound; ``None`` if coverage failed."""
    if not trace.coverage_intact:
        return None
    b = inst.baseline
    rhs = nT_bound_rhs(inst.d, inst.B, cfg.lam, inst.sigma, inst.D, cfg.delta, cfg.alpha,
                       b.r_l, b.delta_l)
    return cfg.alpha * b.r_l * (trace.n_conservative - 1) <= rhs


# --------------------------------------------------------------------------
# geometry and estimation oracles

@dataclass
class GeometryCase:
    d: int
    analytic: float
    sampled: float
    diagonal: bool
    diagonal_formula: float | None = None

    @property
    def gap(self) -> float:
        return self.analytic - self.sampled


def sample_boundary_max(ell: Ellipsoid, phi: np.ndarray, n: int, rng) -> float:
    """Largest ``<theta, phi>`` over ``n`` points drawn uniformly from the ellipsoid boundary."""
    d = phi.shape[0]
    u = rng.standard_normal((n, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    L = np.linalg.cholesky(ell.V)
    # theta = c + beta L^{-T} u has |theta - c|_V = beta
    offsets = np.linalg.solve(L.T, u.T).T
    return float(np.max(ell.center @ phi + ell.radius * (offsets @ phi)))


def geometry_cases(n_cases: int = 1000, n_samples: int = 100_000, seed: int = 0,
                   max_scale: float = 0.25):
    """Random ellipsoids (d <= 4) comparing the closed-form maximum with sampling.

    Every other case uses a diagonal shape matrix so the closed form can also be
    checked against the coordinate-wise formula. ``max_scale`` bounds
    ``beta |phi|_{V^{-1}}``, which sets the sampling resolution.
    """
    rng = np.random.default_rng([seed, 6])
    cases = []
    for i in range(n_cases):
        d = int(rng.integers(1, 5))
        diagonal = i % 2 == 1
        if diagonal:
            diag = np.exp(rng.uniform(0.0, np.log(20.0), d))
            V = np.diag(diag)
        else:
            X = rng.standard_normal((int(rng.integers(0, 30)), d))
            V = np.eye(d) + X.T @ X
        center = rng.standard_normal(d)
        phi = rng.standard_normal(d)
        phi /= np.linalg.norm(phi)
        width = math.sqrt(float(phi @ np.linalg.solve(V, phi)))
        beta = float(rng.uniform(0.2, 1.0)) * max_scale / width
        ell = Ellipsoid(center, V, np.linalg.inv(V), beta)
        analytic = ell.max_linear(phi)[0]
        sampled = sample_boundary_max(ell, phi, n_samples, rng)
        formula = None
        if diagonal:
            formula = float(center @ phi + beta * math.sqrt(float(np.sum(phi**2 / diag))))
        cases.append(GeometryCase(d, analytic, sampled, diagonal, formula))
    return cases


def rls_oracle_error(n_ingests: int = 10_000, d: int = 4, lam: float = 1.0, seed: int = 0) -> float:
    """Relative gap between the incremental estimate and a batch ridge solve."""
    rng = np.random.default_rng([seed, 7])
    Phi = rng.standard_normal((n_ingests, d))
    theta = rng.standard_normal(d)
    Y = Phi @ theta + rng.standard_normal(n_ingests)
    rls = RlsState(d, lam)
    for phi, y in zip(Phi, Y):
        rls.ingest(phi, float(y))
    direct = np.linalg.solve(Phi.T @ Phi + lam * np.eye(d), Phi.T @ Y)
    return float(np.linalg.norm(rls.estimate() - direct) / np.linalg.norm(direct))


# --------------------------------------------------------------------------
# coverage and the CLUCB / LUCB correspondence

@dataclass
class CoverageResult:
    policy: str
    episodes: int
    failures: int
    delta: float

    @property
    def failure_rate(self) -> float:
        return self.failures / self.episodes


def coverage_experiment(policy: str = "lucb", episodes: int = 500, horizon: int = 200,
                        d: int = 2, K: int = 20, delta: float = 0.1, seed: int = 0,
                        alpha: float = 0.1) -> CoverageResult:
    """Fraction of episodes whose confidence set misses ``theta_star`` at some round."""
    cfg = PolicyConfig(policy, alpha=alpha, delta=delta)
    failures = 0
    for run in range(episodes):
        inst = generate_instance(d, K, 1.0, 2, seed=seed, run=run, reward_known=policy != "clucb2")
        if not run_episode(inst, cfg, horizon, seed, run).coverage_intact:
            failures += 1
    return CoverageResult(policy, episodes, failures, delta)


@dataclass
class ReplayResult:
    optimistic_rounds: int
    action_mismatches: int
    set_mismatches: int
    mismatch_rounds: list = field(default_factory=list)

    @property
    def identical(self) -> bool:
        return self.action_mismatches == 0 and self.set_mismatches == 0


def lucb_replay(inst: ProblemInstance, cfg: PolicyConfig, trace: RunTrace) -> ReplayResult:
    """Feed CLUCB's optimistic rounds to a fresh LUCB and compare sets and actions.

    CLUCB is re-run alongside so its confidence set at each optimistic round can be
    compared with LUCB's, which has seen exactly the same observations.
    """
    if cfg.name != "clucb":
        raise InvalidArgument("replay applies to CLUCB traces")
    clucb = make_policy(inst, cfg)
    lucb = LUCB(inst.arms, schedule_for(inst, cfg))
    b = inst.baseline_arm
    r_b = float(inst.means[b])
    actions = set_bad = 0
    bad_rounds = []
    for i in range(trace.horizon):
        dec = clucb.decide(i + 1, b, r_b)
        if dec.optimistic:
            mine = lucb.decide(i + 1, b)
            if not _same_set(clucb.conf, lucb.conf):
                set_bad += 1
                bad_rounds.append(i + 1)
            if mine.action != trace.actions[i] or dec.action != trace.actions[i]:
                actions += 1
                bad_rounds.append(i + 1)
            lucb.update(mine, float(trace.y[i]))
        clucb.update(dec, float(trace.y[i]))
    return ReplayResult(int(trace.optimistic.sum()), actions, set_bad, bad_rounds)


def _same_set(a, b) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Ellipsoid):
        return (a.radius == b.radius and np.array_equal(a.center, b.center)
                and np.array_equal(a.V, b.V))
    return a == b
