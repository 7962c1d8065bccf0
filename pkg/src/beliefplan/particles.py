"""Weighted particle sets used for beliefs and messages.

A particle set holds M values of one variable kind (pose, config, grasp,
trajectory or discrete) together with normalized non-negative weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

WEIGHT_TOL = 1e-9

# convergence thresholds per kind (argmax displacement between iterations)
KIND_EPS = {
    "pose": 0.01,            # 1 cm
    "config": 0.01,          # 0.01 rad per joint (and 1 cm base)
    "grasp": np.array([0.01, 0.05, 0.05]),   # 1 cm offset, 0.05 rad angles
    "trajectory": 0.01,      # 1 cm max waypoint displacement
    "discrete": 0.0,
}

# resampling jitter bandwidth = 0.2 * kind epsilon; trajectories and discrete
# values are never jittered
JITTER_BANDWIDTH = {
    "pose": np.array([0.002, 0.002]),
    "config": np.array([0.002, 0.002, 0.002, 0.002]),
    "grasp": np.array([0.002, 0.01, 0.01]),
}


@dataclass
class ParticleSet:
    """M weighted samples approximating one variable's belief."""

    values: np.ndarray          # (M, ...) sample values
    weights: np.ndarray         # (M,) normalized weights
    kind: str = "pose"

    def __post_init__(self):
        self.values = np.asarray(self.values)
        self.weights = np.asarray(self.weights, dtype=float)

    @property
    def size(self) -> int:
        return len(self.weights)

    def check(self):
        if len(self.values) != len(self.weights):
            raise ValueError("values/weights length mismatch")
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite and non-negative")
        if abs(self.weights.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {self.weights.sum()}, not 1")
        return self

    def copy(self) -> "ParticleSet":
        return ParticleSet(self.values.copy(), self.weights.copy(), self.kind)

    def argmax_index(self) -> int:
        # np.argmax returns the lowest index on exact ties
        return int(np.argmax(self.weights))

    def argmax_value(self) -> np.ndarray:
        return self.values[self.argmax_index()]


def normalize_weights(w: np.ndarray) -> np.ndarray:
    """Normalize weights; an all-zero (or non-finite) vector becomes uniform."""
    w = np.nan_to_num(np.asarray(w, dtype=float), nan=0.0, posinf=0.0, neginf=0.0)
    w = np.clip(w, 0.0, None)
    total = w.sum()
    if total <= 0.0:
        return np.full(len(w), 1.0 / len(w))
    return w / total


def systematic_resample(weights: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Low-variance (systematic) resampling; returns selected indices."""
    positions = (rng.random() + np.arange(n)) / n
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0
    return np.searchsorted(cumulative, positions)


def resample(ps: ParticleSet, n: int, rng: np.random.Generator,
             jitter: bool = True) -> ParticleSet:
    """Resample n particles with replacement proportional to weight.

    Pose/config/grasp kinds receive a small Gaussian jitter so that repeated
    resampling does not collapse the support; trajectories and discrete values
    are copied verbatim.
    """
    idx = systematic_resample(normalize_weights(ps.weights), n, rng)
    values = np.array(ps.values[idx])
    if jitter and ps.kind in JITTER_BANDWIDTH:
        band = JITTER_BANDWIDTH[ps.kind]
        values = values + rng.normal(0.0, 1.0, values.shape) * band
    return ParticleSet(values, np.full(n, 1.0 / n), ps.kind)


def pooled_union(sets, kind: str) -> ParticleSet:
    """Union of particle sets with weights renormalized over the pool."""
    values = np.concatenate([np.asarray(s.values) for s in sets], axis=0)
    weights = np.concatenate([normalize_weights(s.weights) for s in sets])
    return ParticleSet(values, normalize_weights(weights), kind)


def displacement(kind: str, a: np.ndarray, b: np.ndarray) -> float:
    """Kind-aware displacement between two sample values, in epsilon units."""
    eps = KIND_EPS[kind]
    diff = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    if kind == "discrete":
        return float(np.max(diff) > 0)
    if kind == "grasp":
        return float(np.max(diff / eps))
    return float(np.max(diff) / eps)
