"""Simulated network between the wearer/relay side and the friend's phone.

Latency is directional and asymmetric.  Each frame send consumes exactly
two RNG draws (drop, then jitter) regardless of configuration, so two
simulators that send the same frames in the same order observe the same
delays from the same seed.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, replace
from typing import Optional


class Direction(enum.Enum):
    TO_WEARER = "to_wearer"
    TO_FRIEND = "to_friend"


@dataclass(frozen=True)
class NetworkModel:
    latency_to_wearer_ms: int = 0
    latency_to_friend_ms: int = 0
    jitter_ms: int = 0
    drop_prob: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        for name in ("latency_to_wearer_ms", "latency_to_friend_ms", "jitter_ms"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise ValueError(f"{name} must be a non-negative integer")
        if not isinstance(self.drop_prob, (int, float)) or isinstance(self.drop_prob, bool):
            raise ValueError("drop_prob must be a number")
        if not 0.0 <= float(self.drop_prob) <= 1.0:
            raise ValueError("drop_prob must be within [0, 1]")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ValueError("seed must be an integer")

    def with_seed(self, seed: int) -> "NetworkModel":
        return replace(self, seed=seed)

    def sampler(self) -> "NetworkSampler":
        return NetworkSampler(self)


class NetworkSampler:
    """Stateful per-run RNG stream over a NetworkModel."""

    def __init__(self, model: NetworkModel):
        model.validate()
        self.model = model
        self._rng = random.Random(model.seed)

    def delay_ms(self, direction: Direction) -> Optional[int]:
        """Total transit delay for one frame, or None if the frame is lost.

        Both draws always happen so the stream position depends only on
        how many frames have been sent, not on the model's settings.
        """
        drop_draw = self._rng.random()
        jitter = self._rng.randint(0, self.model.jitter_ms)
        if drop_draw < self.model.drop_prob:
            return None
        if direction is Direction.TO_WEARER:
            return self.model.latency_to_wearer_ms + jitter
        return self.model.latency_to_friend_ms + jitter
