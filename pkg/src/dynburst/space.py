"""Finite-dimensional stand-in for the Hilbert space of states.

Two representations are supported:

* ``grid``: samples of a function on a uniform grid of ``[0, 1]``, with the
  composite trapezoid rule as inner product (a discretised L2[0, 1]).
* ``abstract``: plain Euclidean coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Union

import numpy as np


class DimensionError(ValueError):
    """Raised when elements of different spaces are combined."""


@dataclass(frozen=True)
class Space:
    kind: str = "grid"
    size: int = 1025

    def __post_init__(self):
        if self.kind not in ("grid", "abstract"):
            raise ValueError(f"unknown space kind {self.kind!r}")
        if self.kind == "grid" and self.size < 2:
            raise ValueError("a grid space needs at least 2 points")
        if self.size < 1:
            raise ValueError("space size must be positive")

    @cached_property
    def weights(self) -> np.ndarray:
        if self.kind == "abstract":
            return np.ones(self.size)
        w = np.full(self.size, 1.0 / (self.size - 1))
        w[0] = w[-1] = 0.5 / (self.size - 1)
        return w

    @cached_property
    def points(self) -> np.ndarray:
        if self.kind == "abstract":
            return np.arange(self.size, dtype=float)
        return np.linspace(0.0, 1.0, self.size)

    def refined(self, factor: int) -> "Space":
        """Grid with ``factor`` times as many intervals (same space for abstract)."""
        if self.kind == "abstract":
            return self
        return Space("grid", factor * (self.size - 1) + 1)

    def zero(self) -> "SpaceElement":
        return SpaceElement(np.zeros(self.size), self)

    def element(self, coeffs) -> "SpaceElement":
        return SpaceElement(np.asarray(coeffs, dtype=float), self)


@dataclass(frozen=True, eq=False)
class SpaceElement:
    coeffs: np.ndarray
    space: Space

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.space.size,):
            raise DimensionError(
                f"coefficient shape {c.shape} does not match space size {self.space.size}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def _check(self, other: "SpaceElement"):
        if not isinstance(other, SpaceElement):
            return NotImplemented
        if other.space != self.space:
            raise DimensionError(f"{self.space} vs {other.space}")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return SpaceElement(self.coeffs + other.coeffs, self.space)

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return SpaceElement(self.coeffs - other.coeffs, self.space)

    def __mul__(self, scalar):
        if isinstance(scalar, SpaceElement):
            return NotImplemented
        return SpaceElement(float(scalar) * self.coeffs, self.space)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return SpaceElement(self.coeffs / float(scalar), self.space)

    def __neg__(self):
        return SpaceElement(-self.coeffs, self.space)

    def __len__(self):
        return self.space.size


def inner(x: SpaceElement, y: SpaceElement) -> float:
    if x.space != y.space:
        raise DimensionError(f"inner product of elements from {x.space} and {y.space}")
    return float(np.dot(x.coeffs * x.space.weights, y.coeffs))


def norm(x: SpaceElement) -> float:
    return float(np.sqrt(max(inner(x, x), 0.0)))


# closed-form function expressions on [0, 1]

@dataclass(frozen=True)
class Sin:
    c: float = 1.0

    def __call__(self, x):
        return self.c * np.sin(x)


@dataclass(frozen=True)
class Cos:
    c: float = 1.0

    def __call__(self, x):
        return self.c * np.cos(x)


@dataclass(frozen=True)
class Poly:
    """Polynomial with coefficients in ascending order: ``Poly((2, 1))`` is ``2 + x``."""

    coeffs: Sequence[float] = (0.0, 1.0)

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, np.asarray(self.coeffs, dtype=float))


@dataclass(frozen=True)
class Const:
    c: float = 0.0

    def __call__(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.c)


Expr = Union[Sin, Cos, Poly, Const]


def make_function(expr: Expr, space: Union[Space, int]) -> SpaceElement:
    """Sample a closed-form expression on the grid of ``space``.

    An integer is read as the number of grid points of a ``grid`` space.
    """
    if isinstance(space, int):
        space = Space("grid", space)
    if space.kind != "grid":
        raise ValueError("closed-form functions live on grid spaces")
    return SpaceElement(np.asarray(expr(space.points), dtype=float), space)


def parse_expr(spec) -> Expr:
    """Build an expression from a config mapping such as ``{"sin": 3}`` or ``{"poly": [2, 1]}``."""
    if isinstance(spec, (int, float)):
        return Const(float(spec))
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ValueError(f"function spec must be a one-key mapping, got {spec!r}")
    (key, val), = spec.items()
    key = key.lower()
    if key == "sin":
        return Sin(float(val))
    if key == "cos":
        return Cos(float(val))
    if key == "poly":
        return Poly(tuple(float(v) for v in val))
    if key == "const":
        return Const(float(val))
    raise ValueError(f"unknown function kind {key!r}")
