"""Scenario construction: channel integration, feature mapping, candidate
generation with bounded perturbations, utility scoring, and top-k selection."""

from dataclasses import dataclass
import math

import numpy as np

from .errors import ConfigError, ShapeError
from .rounding import round_half_away

_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class ModalityWeights:
    """Convex weights over the sensor, internal-state, and instruction channels."""

    sensor: float
    internal: float
    instruction: float

    def __post_init__(self):
        for name in ("sensor", "internal", "instruction"):
            if getattr(self, name) < 0.0:
                raise ConfigError(f"weight {name} must be >= 0")
        total = self.sensor + self.internal + self.instruction
        if abs(total - 1.0) > _WEIGHT_TOL:
            raise ConfigError(f"weights must sum to 1, got {total!r}")


@dataclass(frozen=True)
class Scenario:
    """One candidate situation: perturbed attributes plus their summed utility."""

    index: int
    attributes: np.ndarray
    utility: float


def integrate(sensor, internal, instruction, weights: ModalityWeights) -> np.ndarray:
    """Elementwise convex combination of the three channels."""
    s = np.asarray(sensor, dtype=float)
    i = np.asarray(internal, dtype=float)
    h = np.asarray(instruction, dtype=float)
    if not (s.shape == i.shape == h.shape) or s.ndim != 1 or s.size < 1:
        raise ShapeError(
            f"channel lengths must match and be >= 1, got {s.shape}, {i.shape}, {h.shape}"
        )
    return weights.sensor * s + weights.internal * i + weights.instruction * h


def semantic_features(unified) -> np.ndarray:
    """Round each unified value to 2 decimals, ties away from zero."""
    u = np.asarray(unified, dtype=float)
    return np.asarray([round_half_away(x, 2) for x in u], dtype=float)


def feature_map(unified) -> np.ndarray:
    """exp(-u) per element: strictly positive and decreasing in u."""
    return np.exp(-np.asarray(unified, dtype=float))


def generate_scenarios(map_values, m_count: int, noise_width: float, rng) -> list:
    """Perturb the feature map m_count times with uniform noise on
    [-noise_width, +noise_width) per attribute. Deterministic for a given
    seed; pass an int seed or a Generator."""
    if m_count < 1:
        raise ConfigError(f"m_count must be >= 1, got {m_count}")
    if noise_width < 0.0:
        raise ConfigError(f"noise_width must be >= 0, got {noise_width}")
    m = np.asarray(map_values, dtype=float)
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    noise = gen.uniform(-noise_width, noise_width, size=(m_count, m.size))
    out = []
    for j in range(m_count):
        attrs = m + noise[j]
        out.append(Scenario(index=j, attributes=attrs, utility=scenario_utility(attrs)))
    return out


def scenario_utility(attributes) -> float:
    """Sum of attribute values (compensated, so long vectors stay exact)."""
    return math.fsum(np.asarray(attributes, dtype=float))


def select_top_k(scenarios, k: int) -> list:
    """The min(k, m) scenarios with the largest utility, descending; ties by
    ascending scenario index."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    ranked = sorted(scenarios, key=lambda s: (-s.utility, s.index))
    return ranked[: min(k, len(ranked))]
