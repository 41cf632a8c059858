"""Bayesian variable selection with Dirichlet-process error variances.

Spike-and-slab and horseshoe regressions whose per-observation noise variances
are clustered by a Dirichlet process, fitted by Gibbs sampling.
"""

__version__ = "0.1.0"

from .gibbs import Hyper, ModelConfig, SamplerSettings, run_chain  # noqa: E402
from .datasets import Dataset, ScenarioSpec, gen_scenario  # noqa: E402

__all__ = ["Hyper", "ModelConfig", "SamplerSettings", "run_chain", "Dataset", "ScenarioSpec", "gen_scenario"]
