"""Seeded, random-access noise generators for six distribution families.

Every sample is a pure function of (seed, t): the generator for step t is a
Philox stream keyed on both, so any step can be replayed without iterating
through the stream. One-sided families are re-centered by their analytic mean
before the norm bound is enforced by radial clipping.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParams, UnknownFamily

FAMILIES = ("gaussian", "uniform", "gamma", "beta", "exponential", "weibull")

DEFAULT_PARAMS = {
    "gaussian": {"mean": 0.0, "sigma": 1.0},
    "uniform": {"low": -1.0, "high": 1.0},
    "gamma": {"shape": 2.0, "scale": 1.0},
    "beta": {"a": 2.0, "b": 5.0},
    "exponential": {"rate": 1.0},
    "weibull": {"shape": 1.5, "scale": 1.0},
}

_MASK64 = (1 << 64) - 1


def _validate(family, params):
    if family not in FAMILIES:
        raise UnknownFamily(f"unknown noise family {family!r}")
    merged = dict(DEFAULT_PARAMS[family])
    unknown = set(params) - set(merged)
    if unknown:
        raise InvalidParams(f"unknown parameters for {family}: {sorted(unknown)}")
    merged.update(params)
    if family == "gaussian" and merged["sigma"] < 0:
        raise InvalidParams("gaussian sigma must be nonnegative")
    if family == "uniform" and merged["high"] < merged["low"]:
        raise InvalidParams("uniform needs low <= high")
    if family == "gamma" and (merged["shape"] <= 0 or merged["scale"] <= 0):
        raise InvalidParams("gamma shape/scale must be positive")
    if family == "beta" and (merged["a"] <= 0 or merged["b"] <= 0):
        raise InvalidParams("beta parameters must be positive")
    if family == "exponential" and merged["rate"] <= 0:
        raise InvalidParams("exponential rate must be positive")
    if family == "weibull" and (merged["shape"] <= 0 or merged["scale"] <= 0):
        raise InvalidParams("weibull shape/scale must be positive")
    return merged


def centering_shift(family, params=None):
    """Per-coordinate mean of the raw distribution, subtracted before clipping."""
    p = _validate(family, params or {})
    if family == "gaussian":
        return p["mean"]
    if family == "uniform":
        return 0.5 * (p["low"] + p["high"])
    if family == "gamma":
        return p["shape"] * p["scale"]
    if family == "beta":
        return p["a"] / (p["a"] + p["b"])
    if family == "exponential":
        return 1.0 / p["rate"]
    return p["scale"] * math.gamma(1.0 + 1.0 / p["shape"])  # weibull


@dataclass(frozen=True)
class NoiseModel:
    """A bounded noise source: ||w_t|| <= bound for every emitted vector."""

    family: str
    dim: int
    bound: float
    seed: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "family", self.family.lower())
        object.__setattr__(self, "params", _validate(self.family, self.params))
        if self.bound < 0:
            raise InvalidParams("noise bound must be nonnegative")
        if self.dim < 1:
            raise InvalidParams("dim must be positive")

    def _rng(self, t):
        key = ((int(t) + 1) << 64) | (int(self.seed) & _MASK64)
        return np.random.Generator(np.random.Philox(key=key))

    def _raw(self, t):
        rng = self._rng(t)
        p = self.params
        if self.family == "gaussian":
            return rng.normal(p["mean"], p["sigma"], self.dim)
        if self.family == "uniform":
            return rng.uniform(p["low"], p["high"], self.dim)
        if self.family == "gamma":
            return rng.gamma(p["shape"], p["scale"], self.dim)
        if self.family == "beta":
            return rng.beta(p["a"], p["b"], self.dim)
        if self.family == "exponential":
            return rng.exponential(1.0 / p["rate"], self.dim)
        return p["scale"] * rng.weibull(p["shape"], self.dim)  # weibull

    def sample(self, t):
        """Noise vector for step t; deterministic in (seed, t)."""
        if self.bound == 0.0:
            return np.zeros(self.dim)
        w = self._raw(t) - centering_shift(self.family, self.params)
        norm = np.linalg.norm(w)
        if norm > self.bound:
            w *= self.bound / norm
            # repeat until round-off cannot push the norm past the bound
            while np.linalg.norm(w) > self.bound:
                w *= 1.0 - 1e-15
        return w


def constant_noise(direction, bound, dim):
    """A degenerate 'model' emitting the same vector every step (test helper)."""
    v = np.asarray(direction, dtype=float)
    if v.shape != (dim,):
        raise InvalidParams("direction dimension mismatch")
    n = np.linalg.norm(v)
    if n > 0:
        v = v * (bound / n)

    class _Const:
        def sample(self, t):
            return v.copy()

    return _Const()
