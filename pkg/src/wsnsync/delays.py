"""One-way packet delay processes with reproducible seeded streams."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s
DEFAULT_DISTANCE = 100.0  # m
DEFAULT_MEAN_DELAY = DEFAULT_DISTANCE / SPEED_OF_LIGHT  # ~333.56 ns

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]


class DelayKind(str, enum.Enum):
    DETERMINISTIC = "deterministic"
    GAUSSIAN = "gaussian"
    AR1 = "ar1"


@dataclass(frozen=True)
class DelaySpec:
    """Parametric delay process.

    ``sigma`` is the *stationary* standard deviation of the random part for
    both the i.i.d. and the AR(1) kind, so the two are directly comparable.
    """

    kind: DelayKind = DelayKind.GAUSSIAN
    mean: float = DEFAULT_MEAN_DELAY
    sigma: float = 1e-9
    rho: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", DelayKind(self.kind))
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.mean < 0:
            raise ValueError("mean must be >= 0")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must be in [0, 1)")

    @classmethod
    def deterministic(cls, mean: float = DEFAULT_MEAN_DELAY) -> "DelaySpec":
        return cls(DelayKind.DETERMINISTIC, mean, 0.0, 0.0)

    @classmethod
    def gaussian(cls, sigma: float, mean: float = DEFAULT_MEAN_DELAY) -> "DelaySpec":
        return cls(DelayKind.GAUSSIAN, mean, sigma, 0.0)

    @classmethod
    def ar1(cls, sigma: float, rho: float, mean: float = DEFAULT_MEAN_DELAY) -> "DelaySpec":
        return cls(DelayKind.AR1, mean, sigma, rho)


def _generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


class DelaySampler:
    """Stateful draw of successive delays ``d(0), d(1), ...``.

    With ``width`` set, every call returns an array holding one sample from
    each of ``width`` independent streams (used for vectorized Monte Carlo).
    Negative totals are returned as drawn; clamping would bias estimators.
    """

    _BLOCK = 4096

    def __init__(self, spec: DelaySpec, seed: SeedLike = None, width: Optional[int] = None):
        self.spec = spec
        self.width = width
        self._rng = _generator(seed)
        self.prev_deviation = None  # AR(1) state x(k-1); None before first draw
        self._buf = np.empty(0)
        self._pos = 0
        self._innov_scale = spec.sigma * math.sqrt(1.0 - spec.rho * spec.rho)

    def _normal(self) -> float:
        if self._pos >= self._buf.shape[0]:
            self._buf = self._rng.standard_normal(self._BLOCK)
            self._pos = 0
        z = self._buf[self._pos]
        self._pos += 1
        return float(z)

    def sample(self):
        spec = self.spec
        if spec.kind is DelayKind.DETERMINISTIC:
            return spec.mean if self.width is None else np.full(self.width, spec.mean)
        z = self._normal() if self.width is None else self._rng.standard_normal(self.width)
        if spec.kind is DelayKind.GAUSSIAN:
            return spec.mean + spec.sigma * z
        if self.prev_deviation is None:
            x = spec.sigma * z
        else:
            x = spec.rho * self.prev_deviation + self._innov_scale * z
        self.prev_deviation = x
        return spec.mean + x

    __call__ = sample


def sample_delay(sampler: DelaySampler):
    return sampler.sample()
