import os

import pytest

from cbl.environment import generate_instance
from cbl.harness import EpisodeJob, PolicyConfig, job_instance, run_jobs

ACCEPTANCE_LINES = []

SEEDS = 100
SEED = 0
# longest horizon any check needs, per (policy, alpha); shorter horizons are prefixes
HORIZONS = {
    ("lucb", None): 10_000,
    ("clucb", 0.01): 10_000,
    ("clucb", 0.05): 10_000,
    ("clucb", 0.1): 20_000,
    ("clucb", 0.2): 10_000,
    ("clucb", 0.5): 10_000,
    ("clucb2", 0.01): 5_000,
    ("clucb2", 0.05): 5_000,
    ("clucb2", 0.1): 5_000,
    ("clucb2", 0.2): 5_000,
}


class SharedRuns:
    """Episodes on the standard instance family, each simulated once at its longest horizon."""

    def __init__(self, threads: int):
        self.threads = threads
        self._cache = {}

    def _key(self, policy, alpha):
        return (policy, None if policy == "lucb" else alpha)

    def jobs(self, policy, alpha, horizon=None):
        key = self._key(policy, alpha)
        cfg = PolicyConfig(policy, alpha=alpha if key[1] is not None else 0.1)
        return [EpisodeJob(cfg, horizon or HORIZONS[key], SEED, run) for run in range(SEEDS)]

    def traces(self, policy, alpha, horizon):
        key = self._key(policy, alpha)
        if horizon > HORIZONS[key]:
            raise ValueError(f"{key} is only simulated to {HORIZONS[key]} rounds")
        if key not in self._cache:
            self._cache[key] = run_jobs(self.jobs(policy, alpha), self.threads)
        out = [tr.truncated(horizon) for tr in self._cache[key]]
        return [tr.with_alpha(alpha) for tr in out] if key[1] is None else out

    def instances(self, policy="clucb"):
        return [job_instance(j) for j in self.jobs(policy, 0.1, 1)]


@pytest.fixture(scope="session")
def shared_runs():
    return SharedRuns(int(os.environ.get("CBL_THREADS", "1")))


@pytest.fixture(scope="session")
def fixed_instance():
    return generate_instance(d=4, K=100, sigma=1.0, baseline_rank=10, seed=SEED, run=0)


@pytest.fixture
def record_criterion():
    def record(number, title, passed, detail):
        line = f"criterion {number:>2} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
