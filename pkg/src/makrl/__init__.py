"""Kalman-filter multi-agent RL: adaptive Kalman TD and successor
representation learners with multiple-model noise adaptation, adaptive RBF
features, and a 2D particle-world benchmark."""

from .env import AgentSpec, Event, ParticleWorld, StepOutcome, WorldState, make_scenario
from .features import FeatureVector, RbfBank, loss, make_bank
from .harness import (
    EpisodeRecord,
    MetricsWriter,
    MonteCarloResult,
    RunConfig,
    monte_carlo,
    run_testing,
    run_training,
)
from .maksr import FactoredSrFilter, MakSrLearner
from .maktd import AdaptiveKalmanFilter, MakTdLearner, StepDiagnostics, Transition

__version__ = "0.1.0"

__all__ = [
    "AgentSpec",
    "AdaptiveKalmanFilter",
    "EpisodeRecord",
    "Event",
    "FactoredSrFilter",
    "FeatureVector",
    "MakSrLearner",
    "MakTdLearner",
    "MetricsWriter",
    "MonteCarloResult",
    "ParticleWorld",
    "RbfBank",
    "RunConfig",
    "StepDiagnostics",
    "StepOutcome",
    "Transition",
    "WorldState",
    "loss",
    "make_bank",
    "make_scenario",
    "monte_carlo",
    "run_testing",
    "run_training",
    "__version__",
]
