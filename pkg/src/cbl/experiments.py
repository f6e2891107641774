"""Run configuration and the multi-seed experiment grids behind the CLI."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .environment import generate_instance, load_instance
from .errors import ConfigError, InvalidArgument
from .harness import (EpisodeJob, PolicyConfig, RunTrace, aggregate, per_step_regret, run_jobs,
                      violation_pct, POLICIES)

SCALES = {"desk": {"horizon": 10_000, "seeds": 100}, "paper": {"horizon": 40_000, "seeds": 1000}}
FIGURE_ALPHAS = [0.01, 0.05, 0.1, 0.2, 0.5]
VIOLATION_WINDOW = 1000


@dataclass
class RunConfig:
    instance: str | None = None
    d: int = 4
    K: int = 100
    sigma: float = 1.0
    baseline_rank: int = 10
    instance_per_run: bool = True
    policies: list = field(default_factory=lambda: ["lucb", "clucb"])
    alpha: list = field(default_factory=lambda: [0.1])
    horizon: int | None = None
    seeds: int | None = None
    seed: int = 0
    out: str | None = None
    thin: bool = True
    strict_nested: bool = False
    scale: str = "desk"
    threads: int = 1
    lam: float = 1.0
    delta: float = 0.001
    trace_runs: int = 1

    def resolved(self) -> RunConfig:
        """Copy with scale defaults and the output directory filled in, validated."""
        cfg = RunConfig(**asdict(self))
        if cfg.scale not in SCALES:
            raise ConfigError(f"scale: expected one of {sorted(SCALES)}, got {cfg.scale!r}")
        if cfg.horizon is None:
            cfg.horizon = SCALES[cfg.scale]["horizon"]
        if cfg.seeds is None:
            cfg.seeds = SCALES[cfg.scale]["seeds"]
        if cfg.out is None:
            cfg.out = os.environ.get("CBL_OUT", "out")
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if isinstance(self.alpha, (int, float)):
            self.alpha = [self.alpha]
        for a in self.alpha:
            if not isinstance(a, (int, float)) or not 0 < a < 1:
                raise ConfigError(f"alpha: every value must lie in (0, 1), got {a!r}")
        if self.horizon is not None and (not isinstance(self.horizon, int) or self.horizon < 1):
            raise ConfigError(f"horizon: must be an integer >= 1, got {self.horizon!r}")
        if self.seeds is not None and (not isinstance(self.seeds, int) or self.seeds < 1):
            raise ConfigError(f"seeds: must be an integer >= 1, got {self.seeds!r}")
        for p in self.policies:
            if p not in POLICIES:
                raise ConfigError(f"policies: unknown policy {p!r}")
        if self.d < 1 or self.K < 2:
            raise ConfigError("d/K: need d >= 1 and K >= 2")
        if not 1 <= self.baseline_rank <= self.K:
            raise ConfigError(f"baseline_rank: must lie in [1, K={self.K}], got {self.baseline_rank}")
        if not 0 < self.delta < 1:
            raise ConfigError(f"delta: must lie in (0, 1), got {self.delta}")
        if self.lam <= 0:
            raise ConfigError(f"lam: must be positive, got {self.lam}")
        if self.sigma < 0:
            raise ConfigError(f"sigma: must be nonnegative, got {self.sigma}")
        if self.threads < 1:
            raise ConfigError(f"threads: must be >= 1, got {self.threads}")

    def apply(self, key: str, value) -> None:
        names = {f.name: f for f in fields(self)}
        if key not in names:
            raise ConfigError(f"{key}: unknown config key")
        if key in ("policies", "alpha") and isinstance(value, str):
            value = [v.strip() for v in value.split(",") if v.strip()]
            if key == "alpha":
                try:
                    value = [float(v) for v in value]
                except ValueError as exc:
                    raise ConfigError(f"alpha: not a number list: {exc}") from exc
        setattr(self, key, value)


def parse_value(text: str):
    """Interpret a ``--set`` value as JSON where possible, else as a string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be an object")
    cfg = RunConfig()
    for key, value in raw.items():
        cfg.apply(key, value)
    return cfg


def policy_configs(cfg: RunConfig, name: str) -> list[PolicyConfig]:
    try:
        return [PolicyConfig(name, float(a), cfg.lam, cfg.delta, cfg.strict_nested) for a in cfg.alpha]
    except InvalidArgument as exc:
        raise ConfigError(str(exc)) from exc


def episode_jobs(cfg: RunConfig, pcfg: PolicyConfig, horizon: int | None = None) -> list[EpisodeJob]:
    horizon = horizon or cfg.horizon
    gen = (cfg.d, cfg.K, cfg.sigma, cfg.baseline_rank)
    fixed = None
    if cfg.instance:
        try:
            fixed = load_instance(cfg.instance)
        except OSError as exc:
            raise ConfigError(f"instance: cannot read {cfg.instance}: {exc.strerror}") from exc
    elif not cfg.instance_per_run:
        fixed = generate_instance(cfg.d, cfg.K, cfg.sigma, cfg.baseline_rank, seed=cfg.seed, run=0,
                                  reward_known=pcfg.name != "clucb2")
    return [EpisodeJob(pcfg, horizon, cfg.seed, run, instance=fixed, gen=gen) for run in range(cfg.seeds)]


def run_grid(cfg: RunConfig, horizon: int | None = None) -> dict[tuple[str, float], list[RunTrace]]:
    """Traces for every (policy, alpha). Alpha-free policies run once and are rescored per alpha."""
    out = {}
    for name in cfg.policies:
        pcfgs = policy_configs(cfg, name)
        if name in ("lucb", "oracle", "baseline"):
            traces = run_jobs(episode_jobs(cfg, pcfgs[0], horizon), cfg.threads)
            for p in pcfgs:
                out[(name, p.alpha)] = [tr.with_alpha(p.alpha) for tr in traces]
        else:
            for p in pcfgs:
                out[(name, p.alpha)] = run_jobs(episode_jobs(cfg, p, horizon), cfg.threads)
    return out


def summarize(grid) -> list[dict]:
    rows = []
    for (name, alpha), traces in grid.items():
        n_T = np.array([tr.n_conservative for tr in traces])
        rows.append({
            "policy": name,
            "alpha": alpha,
            "episodes": len(traces),
            "horizon": traces[0].horizon,
            "mean_final_per_step_regret": float(np.mean([per_step_regret(tr)[-1] for tr in traces])),
            "violation_pct_first_1000": float(np.mean([violation_pct(tr, VIOLATION_WINDOW) for tr in traces])),
            "coverage_intact_fraction": float(np.mean([tr.coverage_intact for tr in traces])),
            "n_T_mean": float(n_T.mean()),
            "n_T_median": float(np.median(n_T)),
            "n_T_max": int(n_T.max()),
        })
    return rows


def aggregates(grid, thin: bool = True):
    return [aggregate(traces, thin=thin) for traces in grid.values()]


# --------------------------------------------------------------------------
# figure data

def figure1(grid):
    """Mean per-step regret curves (``AggregateStats`` per policy and alpha)."""
    return aggregates(grid)


def figure2(grid) -> list[dict]:
    return [{"policy": name, "alpha": alpha,
             "violation_pct": float(np.mean([violation_pct(tr, VIOLATION_WINDOW) for tr in traces]))}
            for (name, alpha), traces in grid.items()]


def figure3(grid) -> list[dict]:
    return [{"policy": name, "alpha": alpha,
             "per_step_regret": float(np.mean([per_step_regret(tr)[-1] for tr in traces]))}
            for (name, alpha), traces in grid.items()]
