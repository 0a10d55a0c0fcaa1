"""Forcing terms and measurement noise.

The forcing is ``F = h + eta`` where ``h`` is a train of bursts
``h_j * phi(t - t_j)`` switched on at ``t_j`` and ``eta`` is a bounded,
Lipschitz background source.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .space import Space, SpaceElement, norm


# ---------------------------------------------------------------- decay

class DecayProfile:
    """Continuous ``phi`` on ``[0, inf)`` with ``phi(0) = 1`` and ``0 < phi(t) <= exp(-rho t)``."""

    kind = "general"

    def __init__(self, rho: float):
        if not rho > 0:
            raise ValueError("decay rate rho must be positive")
        self.rho = float(rho)

    def values(self, t) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, t):
        return self.values(t)


class ExponentialDecay(DecayProfile):
    kind = "exponential"

    def values(self, t):
        return np.exp(-self.rho * np.asarray(t, dtype=float))

    def __repr__(self):
        return f"ExponentialDecay(rho={self.rho})"


class GeneralDecay(DecayProfile):
    """A decay profile given by a callable (vectorised over ``t``)."""

    def __init__(self, rho: float, fn: Callable, label: str = "custom"):
        super().__init__(rho)
        self.fn = fn
        self.label = label

    def values(self, t):
        return np.asarray(self.fn(np.asarray(t, dtype=float)), dtype=float)

    @classmethod
    def exp_mixture(cls, weights: Sequence[float], rates: Sequence[float], rho: float | None = None):
        """``phi(t) = sum_k w_k exp(-r_k t)``; ``rho`` defaults to ``min(r_k)``."""
        w = np.asarray(weights, dtype=float)
        r = np.asarray(rates, dtype=float)
        if w.shape != r.shape or w.ndim != 1:
            raise ValueError("weights and rates must be vectors of equal length")
        rho = float(r.min()) if rho is None else rho

        def fn(t):
            return np.exp(-np.multiply.outer(t, r)) @ w

        terms = " + ".join(f"{wk:g}e^(-{rk:g}t)" for wk, rk in zip(w, r))
        return cls(rho, fn, label=terms)

    @classmethod
    def tabulated(cls, ts: Sequence[float], vals: Sequence[float], rho: float):
        """Piecewise-linear interpolation of a table; evaluation past the table is an error."""
        ts = np.asarray(ts, dtype=float)
        vals = np.asarray(vals, dtype=float)
        if ts[0] != 0.0 or np.any(np.diff(ts) <= 0):
            raise ValueError("table abscissae must start at 0 and increase strictly")

        def fn(t):
            t = np.asarray(t, dtype=float)
            if np.any(t > ts[-1]):
                raise ValueError(f"decay table ends at t={ts[-1]}")
            return np.interp(t, ts, vals)

        return cls(rho, fn, label="table")

    def __repr__(self):
        return f"GeneralDecay(rho={self.rho}, {self.label})"


def phi(d: DecayProfile, t: float) -> float:
    if t < 0:
        raise ValueError(f"decay profile evaluated at negative time {t}")
    return float(np.asarray(d.values(t)).item())


def decay_domination_slack(d: DecayProfile, horizon: float, n: int = 10_000) -> float:
    """``min_t (exp(-rho t) - phi(t))`` over a uniform grid; negative means violated.

    Also returns a negative value when ``phi(0) != 1`` or ``phi`` is not positive.
    """
    ts = np.linspace(0.0, horizon, n)
    vals = d.values(ts)
    if abs(vals[0] - 1.0) > 1e-12:
        return -abs(vals[0] - 1.0)
    if np.any(vals <= 0):
        return float(vals.min())
    return float(np.min(np.exp(-d.rho * ts) - vals + 1e-15))


# ---------------------------------------------------------------- bursts

@dataclass(frozen=True)
class BurstTrain:
    times: tuple[float, ...]
    shapes: tuple[SpaceElement, ...]
    decay: DecayProfile
    H_bound: float | None = None

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        shapes = tuple(self.shapes)
        if len(times) != len(shapes):
            raise ValueError("one shape per burst time required")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"burst times must increase strictly: {times}")
        if times and times[0] < 0:
            raise ValueError("burst times must be nonnegative")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "shapes", shapes)
        if self.H_bound is None:
            H = max((norm(h) for h in shapes), default=0.0)
            object.__setattr__(self, "H_bound", H)
        elif any(norm(h) > self.H_bound * (1 + 1e-12) for h in shapes):
            raise ValueError(f"a burst shape exceeds the bound H={self.H_bound}")

    @classmethod
    def empty(cls, decay: DecayProfile):
        return cls((), (), decay, 0.0)

    def __len__(self):
        return len(self.times)

    def __iter__(self):
        return iter(zip(self.times, self.shapes))


def burst_value(b: BurstTrain, t: float, space: Space) -> SpaceElement:
    out = np.zeros(space.size)
    for tj, h in b:
        if tj <= t:
            out += b.decay.values(t - tj) * h.coeffs
    return SpaceElement(out, space)


# ---------------------------------------------------------------- background

class BackgroundSource:
    """Background forcing ``eta`` with sup bound ``K`` and Lipschitz constant ``L``.

    Separable sources (``eta(t) = shape * profile(t)``) set ``shape``; the
    solver exploits that to integrate them cheaply.
    """

    kind = "custom"
    shape: SpaceElement | None = None

    def __init__(self, space: Space, K: float, L: float):
        self.space = space
        self.K = float(K)
        self.L = float(L)

    def profile(self, t):
        raise NotImplementedError

    def value(self, t: float) -> SpaceElement:
        return SpaceElement(float(self.profile(t)) * self.shape.coeffs, self.space)

    def values(self, ts) -> np.ndarray:
        """Rows ``eta(ts[i])`` as coefficient arrays."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        return np.outer(self.profile(ts), self.shape.coeffs)


class ZeroBackground(BackgroundSource):
    kind = "zero"

    def __init__(self, space: Space):
        super().__init__(space, 0.0, 0.0)
        self.shape = space.zero()

    def profile(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))


class ExpBackground(BackgroundSource):
    """``eta(t) = x exp(-rate t)``; ``K = ||x||`` and ``L = rate ||x||``."""

    kind = "exp"

    def __init__(self, shape: SpaceElement, rate: float):
        n = norm(shape)
        super().__init__(shape.space, n, abs(rate) * n)
        self.shape = shape
        self.rate = float(rate)

    def profile(self, t):
        return np.exp(-self.rate * np.asarray(t, dtype=float))


class SinBackground(BackgroundSource):
    """``eta(t) = x sin(rate t)``; ``K = ||x||`` and ``L = rate ||x||``."""

    kind = "sin"

    def __init__(self, shape: SpaceElement, rate: float):
        n = norm(shape)
        super().__init__(shape.space, n, abs(rate) * n)
        self.shape = shape
        self.rate = float(rate)

    def profile(self, t):
        return np.sin(self.rate * np.asarray(t, dtype=float))


class CustomBackground(BackgroundSource):
    """Arbitrary ``eta``; ``fn(t)`` returns a coefficient array. K and L are trusted but probed by validation."""

    def __init__(self, space: Space, fn: Callable[[float], np.ndarray], K: float, L: float):
        super().__init__(space, K, L)
        self.fn = fn

    def value(self, t):
        return SpaceElement(np.asarray(self.fn(float(t)), dtype=float), self.space)

    def values(self, ts):
        return np.stack([np.asarray(self.fn(float(t)), dtype=float) for t in np.atleast_1d(ts)])


def eta_value(s: BackgroundSource, t: float) -> SpaceElement:
    if t < 0:
        raise ValueError("background evaluated at negative time")
    return s.value(t)


def background_probe(s: BackgroundSource, horizon: float, n: int = 2001) -> tuple[float, float]:
    """Measured ``(sup ||eta||, max Lipschitz quotient)`` on a uniform probe grid."""
    ts = np.linspace(0.0, horizon, n)
    E = s.values(ts)
    w = s.space.weights
    norms = np.sqrt(np.einsum("ij,j,ij->i", E, w, E))
    dE = np.diff(E, axis=0)
    dn = np.sqrt(np.einsum("ij,j,ij->i", dE, w, dE))
    return float(norms.max()), float(np.max(dn / np.diff(ts)))


# ---------------------------------------------------------------- noise

def _splitmix(z: np.ndarray) -> np.ndarray:
    z = z + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@dataclass(frozen=True)
class NoiseModel:
    """Uniform noise on ``[-sigma, sigma]``, a pure function of ``(seed, t, channel)``.

    Each draw hashes the seed, the bit pattern of ``t`` and the channel id, so
    the stream is reproducible and independent of evaluation order.
    """

    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("noise level must be nonnegative")

    def draw_many(self, ts, channels) -> np.ndarray:
        ts, channels = np.broadcast_arrays(np.asarray(ts, dtype=np.float64),
                                           np.asarray(channels, dtype=np.int64))
        if self.sigma == 0:
            return np.zeros(ts.shape)
        with np.errstate(over="ignore"):
            z = _splitmix(np.full(ts.shape, np.uint64(self.seed & 0xFFFFFFFFFFFFFFFF)))
            z = _splitmix(z ^ np.ascontiguousarray(ts).view(np.uint64))
            z = _splitmix(z ^ channels.astype(np.uint64))
        u = (z >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return self.sigma * (2.0 * u - 1.0)


def noise_draw(n: NoiseModel, t: float, channel_id: int) -> float:
    return float(n.draw_many(t, channel_id).item())
