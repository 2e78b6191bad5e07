"""Aspect ratios of the sample size to the two variable counts."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class AspectRatios:
    """``beta_p = n/p`` and ``beta_q = n/q``."""

    beta_p: float
    beta_q: float

    def __post_init__(self):
        for name in ("beta_p", "beta_q"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and positive, got {value!r}")
        object.__setattr__(self, "beta_p", float(self.beta_p))
        object.__setattr__(self, "beta_q", float(self.beta_q))

    @classmethod
    def from_dims(cls, n: int, p: int, q: int) -> "AspectRatios":
        return cls(n / p, n / q)

    @property
    def beta(self) -> float:
        return max(self.beta_p, self.beta_q)

    @property
    def q_over_p(self) -> float:
        return self.beta_p / self.beta_q

    def swapped(self) -> "AspectRatios":
        return AspectRatios(self.beta_q, self.beta_p)

    def to_dict(self) -> dict:
        return {"beta_p": self.beta_p, "beta_q": self.beta_q}
