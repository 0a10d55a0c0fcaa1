"""Mild solution of ``u' = A u + F``, ``u(0) = u0``.

``u(t) = T(t) u0 + int_0^t T(t - s) F(s) ds`` with ``F = h + eta``.

Two evaluation routes are provided and cross-checked in the tests:

* :func:`mild_solution` integrates directly from 0 to ``t`` (closed forms
  where available, composite Gauss-Legendre otherwise).
* :class:`StepIntegrator` / :func:`iter_states` advance the state one
  sampling step at a time, ``u((n+1)b) = T(b) u(nb) + increment_n``,
  vectorising the increments over many steps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .bounds import expm1_ratio
from .forcing import (BackgroundSource, BurstTrain, CustomBackground, DecayProfile,
                      ExponentialDecay, NoiseModel)
from .semigroup import DiagonalSemigroup, ScalarSemigroup, SemigroupModel, act
from .space import DimensionError, Space, SpaceElement

GL_ORDER = 8
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)
REFINEMENTS = 4


class QuadratureError(RuntimeError):
    def __init__(self, achieved: float, tol: float, where: str = ""):
        self.achieved = achieved
        self.tol = tol
        super().__init__(
            f"quadrature did not converge{(' on ' + where) if where else ''}: "
            f"achieved {achieved:.3e}, requested {tol:.3e}"
        )


@dataclass(frozen=True)
class QuadConfig:
    tol: float = 1e-10
    panels: int = 64
    width: float = math.inf

    @property
    def base_panels(self) -> int:
        # finest level (after REFINEMENTS doublings) uses `panels` panels
        return max(1, self.panels >> REFINEMENTS)


@dataclass(frozen=True)
class ModelParams:
    beta: float
    horizon: float
    D: float = 0.0
    quad_tol: float = 1e-10
    quad_panels: int = 64

    def __post_init__(self):
        if not (self.beta > 0 and self.horizon > 0):
            raise ValueError("beta and horizon must be positive")
        if self.beta >= self.horizon:
            raise ValueError("sampling step beta must be smaller than the horizon")
        if self.D < 0:
            raise ValueError("gap parameter D must be nonnegative")

    @property
    def n_last(self) -> int:
        """Index of the last sampling instant ``n b <= horizon``."""
        return int(math.floor(self.horizon / self.beta + 1e-9))

    def quad(self) -> QuadConfig:
        return QuadConfig(self.quad_tol, self.quad_panels, self.beta)


@dataclass(frozen=True)
class Scenario:
    semigroup: SemigroupModel
    u0: SpaceElement
    bursts: BurstTrain
    background: BackgroundSource
    noise: NoiseModel
    params: ModelParams

    def __post_init__(self):
        sp = self.u0.space
        sg = self.semigroup.space
        if sg is not None and sg.size != sp.size:
            raise DimensionError("semigroup and initial state live in different spaces")
        if any(h.space != sp for h in self.bursts.shapes):
            raise DimensionError("burst shapes live in a different space")
        if self.background.space != sp:
            raise DimensionError("background lives in a different space")

    @property
    def space(self) -> Space:
        return self.u0.space

    @property
    def rho(self) -> float:
        return self.bursts.decay.rho

    @property
    def sigma(self) -> float:
        return self.noise.sigma

    @property
    def beta(self) -> float:
        return self.params.beta

    def replace(self, **changes) -> "Scenario":
        from dataclasses import replace
        return replace(self, **changes)


# ---------------------------------------------------------------- quadrature

def _rule(a: float, b: float, panels: int) -> tuple[np.ndarray, np.ndarray]:
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    weights = (half[:, None] * _GL_W[None, :]).ravel()
    return nodes, weights


def _refine(evaluate: Callable[[int], np.ndarray], q: QuadConfig, where: str) -> np.ndarray:
    """Panel doubling until successive estimates agree to ``q.tol`` (relative, floor 1)."""
    p = q.base_panels
    prev = evaluate(p)
    err = math.inf
    for _ in range(REFINEMENTS):
        p *= 2
        cur = evaluate(p)
        scale = max(1.0, float(np.max(np.abs(cur), initial=0.0)))
        err = float(np.max(np.abs(cur - prev), initial=0.0)) / scale
        if err <= q.tol:
            return cur
        prev = cur
    raise QuadratureError(err, q.tol, where)


def _pieces(a: float, b: float, width: float) -> list[tuple[float, float]]:
    """Split ``[a, b]`` at the multiples of ``width``."""
    if b <= a:
        return []
    if not math.isfinite(width):
        return [(a, b)]
    k0 = math.floor(a / width + 1e-9) + 1
    cuts = [a]
    k = k0
    while k * width < b - 1e-12 * width:
        if k * width > a + 1e-12 * width:
            cuts.append(k * width)
        k += 1
    cuts.append(b)
    return list(zip(cuts[:-1], cuts[1:]))


def closed_form_rates(S: SemigroupModel):
    """Generator spectrum for kinds with elementwise exponentials, else ``None``."""
    if isinstance(S, (ScalarSemigroup, DiagonalSemigroup)):
        return S.rates()
    return None


def _exp_burst_kernel(rates, rho: float, d: float):
    """``int_0^d exp(lam (d - r)) exp(-rho r) dr``, elementwise in ``lam``."""
    rates = np.asarray(rates, dtype=float)
    return np.exp(rates * d) * d * expm1_ratio(-(rates + rho) * d)


def _weighted_propagate(S: SemigroupModel, taus, coef, vec) -> np.ndarray:
    """``sum_i coef_i T(taus_i) vec``."""
    rates = closed_form_rates(S)
    if rates is not None and np.ndim(rates) == 0:
        return float(np.dot(coef, np.exp(float(rates) * taus))) * vec
    if rates is not None:
        return (coef @ np.exp(np.outer(taus, rates))) * vec
    return coef @ S.act_many(taus, vec)


def _burst_integral(S, h, d, t_j, a, b, q):
    """``int_a^b T(b - s) h phi(s - t_j) ds`` for ``t_j <= a <= b``."""
    rates = closed_form_rates(S)
    if rates is not None and isinstance(d, ExponentialDecay):
        return np.exp(-d.rho * (a - t_j)) * _exp_burst_kernel(rates, d.rho, b - a) * h.coeffs
    out = np.zeros(h.space.size)
    for lo, hi in _pieces(a, b, q.width):
        def evaluate(p, lo=lo, hi=hi):
            s, w = _rule(lo, hi, p)
            return _weighted_propagate(S, b - s, w * d.values(s - t_j), h.coeffs)
        out += _refine(evaluate, q, f"burst at {t_j:g}, [{lo:g}, {hi:g}]")
    return out


def convolve_burst(S: SemigroupModel, h: SpaceElement, d: DecayProfile, t_j: float, t: float,
                   q: QuadConfig = QuadConfig()) -> SpaceElement:
    """``int_{t_j}^t T(t - s) h phi(s - t_j) ds``.

    Scalar and diagonal semigroups with exponential decay use the closed form;
    everything else goes through composite Gauss-Legendre with panels
    aligned to the multiples of ``q.width``.
    """
    if t < t_j:
        raise ValueError(f"burst convolution needs t >= t_j, got t={t} < {t_j}")
    return SpaceElement(_burst_integral(S, h, d, t_j, t_j, t, q), h.space)


def convolve_background(S: SemigroupModel, bg: BackgroundSource, t0: float, t1: float,
                        q: QuadConfig = QuadConfig()) -> SpaceElement:
    """``int_{t0}^{t1} T(t1 - s) eta(s) ds`` by composite Gauss-Legendre."""
    if t1 < t0:
        raise ValueError("background convolution needs t0 <= t1")
    out = np.zeros(bg.space.size)
    if bg.kind == "zero":
        return SpaceElement(out, bg.space)
    for a, b in _pieces(t0, t1, q.width):
        if isinstance(bg, CustomBackground):
            def evaluate(p, a=a, b=b):
                s, w = _rule(a, b, p)
                E = bg.values(s)
                return sum(wi * act(S.factor(t1 - si), e) for si, wi, e in zip(s, w, E))
        else:
            def evaluate(p, a=a, b=b):
                s, w = _rule(a, b, p)
                return _weighted_propagate(S, t1 - s, w * bg.profile(s), bg.shape.coeffs)
        out += _refine(evaluate, q, f"background [{a:g}, {b:g}]")
    return SpaceElement(out, bg.space)


def forcing_integral(sc: Scenario, t0: float, t1: float) -> SpaceElement:
    """``int_{t0}^{t1} T(t1 - s) F(s) ds`` (no initial-state term)."""
    q = sc.params.quad()
    S = sc.semigroup
    out = convolve_background(S, sc.background, t0, t1, q).coeffs.copy()
    for tj, h in sc.bursts:
        if tj < t1:
            out += _burst_integral(S, h, sc.bursts.decay, tj, max(tj, t0), t1, q)
    return SpaceElement(out, sc.space)


def mild_solution(sc: Scenario, t: float) -> SpaceElement:
    if not 0 <= t <= sc.params.horizon * (1 + 1e-12):
        raise ValueError(f"t={t} outside [0, {sc.params.horizon}]")
    free = sc.semigroup.apply(t, sc.u0)
    return free + forcing_integral(sc, 0.0, t)


# ---------------------------------------------------------------- stepping

class StepIntegrator:
    """Increments ``int_{nb}^{(n+1)b} T((n+1)b - s) F(s) ds`` for blocks of steps.

    Full steps share the same node offsets inside ``[0, b]``, so the
    propagated vectors ``T(b - s_i) v`` are computed once per source and
    refinement level and reused for every step.
    """

    def __init__(self, sc: Scenario):
        self.sc = sc
        self.beta = sc.beta
        self.q = sc.params.quad()
        self.S = sc.semigroup
        self._rules: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._prop: dict[tuple[int, int], np.ndarray] = {}
        self._exp_step: dict[int, np.ndarray] = {}
        decay = sc.bursts.decay
        if isinstance(decay, ExponentialDecay):
            rates = closed_form_rates(self.S)
            for j, (tj, h) in enumerate(sc.bursts):
                if rates is not None:
                    v = _exp_burst_kernel(rates, decay.rho, self.beta) * h.coeffs
                else:
                    v = _burst_integral(self.S, h, decay, 0.0, 0.0, self.beta, self.q)
                self._exp_step[j] = v

    def _nodes(self, panels: int):
        r = self._rules.get(panels)
        if r is None:
            r = self._rules[panels] = _rule(0.0, self.beta, panels)
        return r

    def _propagated(self, key: int, vec: np.ndarray, panels: int) -> np.ndarray:
        P = self._prop.get((key, panels))
        if P is None:
            s, _ = self._nodes(panels)
            P = self._prop[(key, panels)] = self.S.act_many(self.beta - s, vec)
        return P

    def _separable(self, key, vec, starts, profile, where):
        """Block of full-step integrals of ``T((n+1)b - s) profile(s) vec``."""
        def evaluate(p):
            s, w = self._nodes(p)
            C = profile(starts[:, None] + s[None, :]) * w[None, :]
            return C @ self._propagated(key, vec, p)
        return _refine(evaluate, self.q, where)

    def increments(self, n0: int, n1: int) -> np.ndarray:
        sc, beta = self.sc, self.beta
        ns = np.arange(n0, n1)
        starts = ns * beta
        ends = (ns + 1) * beta
        out = np.zeros((ns.size, sc.space.size))
        bg = sc.background
        if isinstance(bg, CustomBackground):
            for k, (a, b) in enumerate(zip(starts, ends)):
                out[k] += convolve_background(self.S, bg, a, b, self.q).coeffs
        elif bg.kind != "zero":
            out += self._separable(-1, bg.shape.coeffs, starts, bg.profile,
                                   f"background steps {n0}..{n1}")
        decay = sc.bursts.decay
        for j, (tj, h) in enumerate(sc.bursts):
            full = starts >= tj
            partial = (~full) & (ends > tj)
            if np.any(full):
                if j in self._exp_step:
                    out[full] += np.outer(np.exp(-decay.rho * (starts[full] - tj)), self._exp_step[j])
                else:
                    out[full] += self._separable(
                        j, h.coeffs, starts[full], lambda t, tj=tj: decay.values(t - tj),
                        f"burst {j} steps {n0}..{n1}")
            for k in np.flatnonzero(partial):
                out[k] += _burst_integral(self.S, h, decay, tj, tj, float(ends[k]), self.q)
        return out


def iter_states(sc: Scenario, chunk: int = 2048, dtype=np.longdouble) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(n0, U)`` where ``U[k]`` is ``u((n0 + k) b)``, for ``n = 0 .. n_last``.

    The state is carried in ``dtype`` (extended precision by default): the
    prediction differences subtract nearly equal large numbers once the
    semigroup has grown the state by many orders of magnitude.
    """
    integ = StepIntegrator(sc)
    n_last = sc.params.n_last
    Tb = np.asarray(sc.semigroup.factor(sc.beta)).astype(dtype)
    u = sc.u0.coeffs.astype(dtype)
    n0 = 0
    first = True
    while n0 <= n_last:
        n1 = min(n_last + 1, n0 + chunk)
        U = np.empty((n1 - n0, sc.space.size), dtype=dtype)
        k0 = 0
        if first:
            U[0] = u
            k0 = 1
            first = False
        inc = integ.increments(n0 + k0 - 1, n1 - 1).astype(dtype)
        for k in range(k0, n1 - n0):
            u = act(Tb, u) + inc[k - k0]
            U[k] = u
        yield n0, U
        n0 = n1
