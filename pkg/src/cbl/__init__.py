"""Conservative linear bandits: optimistic and baseline-safe policies with a simulation harness."""

from .confidence import Ball, BetaSchedule, Ellipsoid, RlsState
from .environment import ProblemInstance, generate_instance, load_instance, save_instance
from .harness import PolicyConfig, RunTrace, run_episode
from .linalg import SpdState
from .policies import CLUCB, CLUCB2, LUCB

__all__ = [
    "Ball", "BetaSchedule", "CLUCB", "CLUCB2", "Ellipsoid", "LUCB", "PolicyConfig",
    "ProblemInstance", "RlsState", "RunTrace", "SpdState", "generate_instance", "load_instance",
    "run_episode", "save_instance",
]
