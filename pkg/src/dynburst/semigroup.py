"""Strongly continuous semigroups T(t) acting on a :class:`~dynburst.space.Space`.

Three realizations: a scalar multiple of the identity, a diagonal (spectral)
model and a general matrix generator. Each one exposes the evolution
``T(t)``, its adjoint with respect to the space's inner product, and growth
constants ``(M, a)`` with ``||T(t)|| <= M exp(a t)``.

Internally operators are represented by their "factor": a 0-d array for the
scalar kind, the vector of multipliers for the diagonal kind and a square
matrix for the matrix kind. :func:`act` applies a factor to a stack of
coefficient vectors.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .space import DimensionError, Space, SpaceElement


class GrowthBoundError(ValueError):
    """The supplied (M, a) do not dominate ||T(t)|| on the probe grid."""


def act(factor: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Apply an operator factor to the last axis of ``X``."""
    if factor.ndim <= 1:
        return factor * X
    return X @ factor.T


class SemigroupModel:
    kind = "abstract"

    def __init__(self, M: float, a: float, space: Space | None = None):
        if M < 1:
            raise ValueError("growth constant M must be >= 1")
        self.M = float(M)
        self.a = float(a)
        self.space = space

    # subclasses implement these two
    def factor(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def adjoint_factor(self, t: float) -> np.ndarray:
        return self.factor(t)

    def growth_bound(self) -> tuple[float, float]:
        return self.M, self.a

    def _check_time(self, t):
        if t < 0:
            raise ValueError(f"semigroup evaluated at negative time {t}")

    def _check_element(self, x: SpaceElement):
        if self.space is not None and x.space.size != self.space.size:
            raise DimensionError(
                f"{self.kind} semigroup of dimension {self.space.size} applied to {x.space}"
            )

    def apply(self, t: float, x: SpaceElement) -> SpaceElement:
        self._check_time(t)
        self._check_element(x)
        return SpaceElement(act(self.factor(t), x.coeffs), x.space)

    def apply_adjoint(self, t: float, g: SpaceElement) -> SpaceElement:
        self._check_time(t)
        self._check_element(g)
        return SpaceElement(act(self.adjoint_factor(t), g.coeffs), g.space)

    def act_many(self, taus: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Rows ``T(taus[i]) x`` for a fixed coefficient vector ``x``."""
        return np.stack([act(self.factor(float(t)), x) for t in np.atleast_1d(taus)])

    def operator_norm(self, t: float, space: Space) -> float:
        """||T(t)|| in the weighted norm of ``space``."""
        F = self.factor(t)
        if F.ndim == 0:
            return float(abs(F))
        if F.ndim == 1:
            return float(np.max(np.abs(F)))
        s = np.sqrt(space.weights)
        return float(np.linalg.norm(s[:, None] * F / s[None, :], 2))


class ScalarSemigroup(SemigroupModel):
    """``T(t) = exp(a t) I``."""

    kind = "scalar"

    def __init__(self, a: float, space: Space | None = None):
        super().__init__(1.0, a, space)

    def factor(self, t):
        self._check_time(t)
        return np.asarray(np.exp(self.a * t))

    def act_many(self, taus, x):
        return np.exp(self.a * np.atleast_1d(taus))[:, None] * x[None, :]

    def rates(self) -> np.ndarray:
        return np.asarray(self.a)

    def __repr__(self):
        return f"ScalarSemigroup(a={self.a})"


class DiagonalSemigroup(SemigroupModel):
    """``T(t)`` multiplies coordinate k by ``exp(lam[k] t)``.

    Diagonal multipliers are self-adjoint for any diagonal weighting, so the
    adjoint coincides with ``T(t)`` on both grid and abstract spaces.
    """

    kind = "diagonal"

    def __init__(self, lam, space: Space | None = None):
        lam = np.asarray(lam, dtype=float)
        if lam.ndim != 1:
            raise ValueError("diagonal generator must be a vector")
        if space is None:
            space = Space("abstract", lam.size)
        if space.size != lam.size:
            raise DimensionError(f"{lam.size} eigenvalues for a space of size {space.size}")
        super().__init__(1.0, float(lam.max()), space)
        self.lam = lam

    def factor(self, t):
        self._check_time(t)
        return np.exp(self.lam * t)

    def act_many(self, taus, x):
        return np.exp(np.outer(np.atleast_1d(taus), self.lam)) * x[None, :]

    def rates(self) -> np.ndarray:
        return self.lam

    def __repr__(self):
        return f"DiagonalSemigroup(n={self.lam.size}, a={self.a})"


class MatrixSemigroup(SemigroupModel):
    """``T(t) = expm(t A)`` for a square generator ``A``.

    ``(M, a)`` are supplied by the caller and checked against the weighted
    operator norm on ``t = 0, 0.1, ..., probe_horizon``.
    """

    kind = "matrix"

    def __init__(self, A, M: float, a: float, space: Space | None = None, probe_horizon: float = 2.0):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("generator must be a square matrix")
        if space is None:
            space = Space("abstract", A.shape[0])
        if space.size != A.shape[0]:
            raise DimensionError(f"{A.shape} generator for a space of size {space.size}")
        super().__init__(M, a, space)
        self.A = A
        self._cache: dict[float, np.ndarray] = {}
        self._validate(probe_horizon)

    def _validate(self, horizon):
        ts = np.round(np.arange(0.0, horizon + 1e-12, 0.1), 12)
        for t in ts:
            nrm = self.operator_norm(float(t), self.space)
            allowed = self.M * np.exp(self.a * t)
            if nrm > allowed * (1 + 1e-12):
                raise GrowthBoundError(
                    f"||T({t:g})|| = {nrm:.6g} exceeds M e^(a t) = {allowed:.6g}"
                )

    def factor(self, t):
        self._check_time(t)
        t = float(t)
        F = self._cache.get(t)
        if F is None:
            F = scipy.linalg.expm(t * self.A)
            if len(self._cache) < 4096:
                self._cache[t] = F
        return F

    def adjoint_factor(self, t):
        F = self.factor(t)
        w = self.space.weights
        return F.T * w[None, :] / w[:, None]

    def __repr__(self):
        return f"MatrixSemigroup(n={self.A.shape[0]}, M={self.M}, a={self.a})"
