"""Reinforcement-learning framework for robust crop-management policies.

Trains PPO agents on a built-in surrogate maize environment (or an external
simulator attached over a line protocol), with a three-phase augmentation
curriculum, novelty-driven exploration, and sensitivity-ranked observation
noise.
"""

__version__ = "0.1.0"
