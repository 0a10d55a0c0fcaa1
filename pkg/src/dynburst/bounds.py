"""Closed-form error bounds for the recovered burst inner products."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .forcing import DecayProfile
from .semigroup import DiagonalSemigroup, ScalarSemigroup, SemigroupModel, act
from .space import SpaceElement


def expm1_ratio(z):
    """``(exp(z) - 1) / z`` elementwise, equal to 1 at ``z = 0``."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-5
    safe = np.where(small, 1.0, z)
    series = 1.0 + z / 2.0 + z * z / 6.0
    return np.where(small, series, np.expm1(safe) / safe)


def e_func(t: float) -> float:
    return float(expm1_ratio(t))


@dataclass(frozen=True)
class BoundInputs:
    M: float
    a: float
    rho: float
    beta: float
    sigma: float
    K: float
    L: float
    g_norm: float
    h_norm: float
    modulus: Callable[[float], float]
    H: float = 0.0
    R: float = 0.0
    D: float = 0.0

    def at_beta(self, beta: float) -> "BoundInputs":
        return replace(self, beta=beta)


def v_bound(k: int, b: BoundInputs) -> float:
    """Bound on ``v_k`` for exponential decay, ``k in {0, 1}``."""
    if k not in (0, 1):
        raise ValueError("k must be 0 or 1")
    first = b.M * b.h_norm * math.expm1((k + 2) * b.rho * b.beta) * e_func(b.a * b.beta)
    return b.g_norm * (first + b.modulus(b.beta))


def decay_deviation(k: int, i: int, phi: DecayProfile, rho: float, beta: float, n: int = 1000) -> float:
    """``max |exp(k rho b) phi(s) - 1|`` over ``s in [(i-2) b, i b]`` on an ``n``-point grid."""
    s = np.linspace((i - 2) * beta, i * beta, n)
    return float(np.max(np.abs(math.exp(k * rho * beta) * phi.values(s) - 1.0)))


def v_bound_general(k: int, i: int, phi: DecayProfile, b: BoundInputs, n: int = 1000) -> float:
    """Bound on ``v_{k,i}`` for a general decay profile, ``k, i in {2, 3}``."""
    if k not in (2, 3) or i not in (2, 3):
        raise ValueError("k and i must be 2 or 3")
    dev = decay_deviation(k, i, phi, b.rho, b.beta, n)
    return b.g_norm * (b.h_norm * b.M * dev * e_func(b.a * b.beta) + b.modulus(b.beta))


def _shared_terms(b: BoundInputs) -> float:
    rb = b.rho * b.beta
    return (3 * math.exp((3 * b.rho + b.a) * b.beta) * b.M * b.L * b.g_norm * b.beta
            + math.exp(b.a * b.beta) * math.expm1(3 * rb) * b.M * b.K * b.g_norm
            + 4 * math.exp(3 * rb) * b.sigma)


def bound_thm1(b: BoundInputs, Q: float) -> float:
    """Error bound for Algorithm-1 estimates given the threshold ``Q`` in use."""
    v = max(v_bound(0, b), v_bound(1, b))
    return _shared_terms(b) + 2 * math.exp(b.rho * b.beta) * Q + v


def past_burst_term(M: float, a: float, rho: float, beta: float, D: float, H: float, R: float) -> float:
    """Residual influence of earlier bursts spaced at least ``D`` apart: ``2 C H R / (exp(rho D) - 1)``."""
    if not D > 0:
        raise ValueError("gap parameter D must be positive")
    C = M * math.exp(a * beta)
    return 2.0 * C * H * R / math.expm1(rho * D)


def bound_thm2(b: BoundInputs, Q1: float, phi: DecayProfile) -> float:
    """Error bound for Algorithm-2 estimates given the threshold ``Q1`` in use."""
    eps = past_burst_term(b.M, b.a, b.rho, b.beta, b.D, b.H, b.R)
    v = max(v_bound_general(3, 2, phi, b), v_bound_general(3, 3, phi, b),
            v_bound_general(2, 2, phi, b))
    return eps + _shared_terms(b) + 2 * math.exp(b.rho * b.beta) * Q1 + v


def semigroup_modulus(S: SemigroupModel, h: SpaceElement, beta: float, n: int = 256) -> float:
    """``sup_{s in [0, b]} ||T(s) h - h||``.

    Exact for scalar and diagonal kinds (each coordinate moves monotonically
    in ``s``, so the supremum sits at ``s = b``); otherwise the maximum over a
    grid of ``n`` points, half geometric towards 0 and half uniform, plus the
    endpoint.
    """
    if beta <= 0:
        return 0.0
    w = h.space.weights
    if isinstance(S, (ScalarSemigroup, DiagonalSemigroup)):
        d = np.expm1(np.asarray(S.rates()) * beta) * h.coeffs
        return float(np.sqrt(np.dot(w * d, d)))
    grid = np.unique(np.concatenate([
        beta * np.geomspace(1e-6, 1.0, n // 2),
        np.linspace(0.0, beta, n - n // 2),
    ]))
    best = 0.0
    for s in grid:
        d = act(S.factor(float(s)), h.coeffs) - h.coeffs
        best = max(best, float(np.sqrt(np.dot(w * d, d))))
    return best


def certify_beta_star(bound: Callable[[float], float], target: float, beta_max: float = 0.1,
                      beta_min: float = 1e-9, rtol: float = 1e-6) -> float:
    """Largest ``b <= beta_max`` with ``bound(b) <= target`` (bisection, bound increasing in ``b``).

    Raises ``ValueError`` when even ``beta_min`` does not certify.
    """
    if bound(beta_max) <= target:
        return beta_max
    lo, hi = beta_min, beta_max
    if bound(lo) > target:
        raise ValueError(f"bound stays above {target:g} down to beta={beta_min:g}")
    while hi - lo > rtol * lo:
        mid = math.sqrt(lo * hi) if hi / lo > 4 else 0.5 * (lo + hi)
        if bound(mid) <= target:
            lo = mid
        else:
            hi = mid
    return lo
