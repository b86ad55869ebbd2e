"""arrowtime: learned and exact arrows of time for Markov decision processes."""

from . import analysis, chains, envs, jko, model, rewards, sampling, training

__version__ = "0.1.0"

__all__ = ["analysis", "chains", "envs", "jko", "model", "rewards", "sampling",
           "training", "__version__"]
