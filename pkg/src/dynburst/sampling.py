"""Two-channel space-time measurements and the prediction differences built from them.

For every sampler ``g`` two channels are read at ``t = n b``:

* state channel  ``<u(nb), g/b> + noise``
* predictor      ``<u(nb), T*(b) g / b> + noise``

``F_n = state[n+1] - predictor[n]`` vanishes without forcing, and
``Delta_n = exp(rho b) F_{n+1} - F_n`` additionally cancels the memory of
earlier exponentially decaying bursts.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .semigroup import act
from .solver import Scenario, iter_states, mild_solution
from .space import SpaceElement, inner, norm

STATE, PRED = 0, 1


def channel_id(sampler_index: int, channel: int) -> int:
    return 2 * sampler_index + channel


@dataclass(frozen=True)
class SamplerSet:
    gtilde: tuple[SpaceElement, ...]
    names: tuple[str, ...] = ()

    def __post_init__(self):
        g = tuple(self.gtilde)
        if not g:
            raise ValueError("at least one sampler is required")
        if any(x.space != g[0].space for x in g):
            raise ValueError("samplers must share one space")
        names = tuple(self.names) or tuple(f"g{i + 1}" for i in range(len(g)))
        if len(names) != len(g):
            raise ValueError("one name per sampler")
        object.__setattr__(self, "gtilde", g)
        object.__setattr__(self, "names", names)

    @cached_property
    def norms(self) -> tuple[float, ...]:
        return tuple(norm(g) for g in self.gtilde)

    @property
    def R_bound(self) -> float:
        return max(self.norms)

    def __len__(self):
        return len(self.gtilde)

    def __iter__(self):
        return iter(zip(self.names, self.gtilde))


@dataclass(eq=False)
class MeasurementSeries:
    """Raw channels for one sampler, indices ``n = 0 .. N``.

    The raw channels are kept in extended precision; ``F`` and ``Delta`` are
    formed from them before rounding to float64.
    """

    sampler_id: str
    g_norm: float
    beta: float
    rho: float
    m_state: np.ndarray
    m_pred: np.ndarray
    truth: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.m_state)

    @cached_property
    def F(self) -> np.ndarray:
        return (self.m_state[1:] - self.m_pred[:-1]).astype(np.float64)

    @cached_property
    def Delta(self) -> np.ndarray:
        F = (self.m_state[1:] - self.m_pred[:-1])
        return (np.exp(np.longdouble(self.rho * self.beta)) * F[1:] - F[:-1]).astype(np.float64)

    @cached_property
    def scale(self) -> float:
        return max(1.0, float(np.max(np.abs(self.m_state))))

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.m_state)) * self.beta


def compute_F(series: MeasurementSeries, n: int) -> float:
    if not 0 <= n < len(series) - 1:
        raise IndexError(f"F_{n} needs measurements {n} and {n + 1}; series has {len(series)}")
    return float(series.F[n])


def compute_delta(series: MeasurementSeries, n: int, rho: float, beta: float) -> float:
    if not 0 <= n < len(series) - 2:
        raise IndexError(f"Delta_{n} needs F_{n + 1}; series has {len(series)} measurements")
    if rho == series.rho and beta == series.beta:
        return float(series.Delta[n])
    return math.exp(rho * beta) * float(series.F[n + 1]) - float(series.F[n])


def measure(sc: Scenario, n: int, g: SpaceElement, sampler_index: int = 0) -> tuple[float, float]:
    """Both channels at ``t = n b``, evaluated through :func:`mild_solution`."""
    beta = sc.beta
    if n < 0 or n > sc.params.n_last:
        raise ValueError(f"measurement index {n} outside 0..{sc.params.n_last}")
    t = n * beta
    u = mild_solution(sc, t)
    nu = sc.noise.draw_many([t, t], [channel_id(sampler_index, STATE), channel_id(sampler_index, PRED)])
    m_state = inner(u, g) / beta + nu[0]
    m_pred = inner(u, sc.semigroup.apply_adjoint(beta, g)) / beta + nu[1]
    return float(m_state), float(m_pred)


def acquire(sc: Scenario, samplers: SamplerSet, chunk: int = 2048) -> list[MeasurementSeries]:
    """Measurement series for every sampler over ``n = 0 .. n_last``."""
    beta = sc.beta
    ld = np.longdouble
    w = sc.space.weights.astype(ld)
    adj = np.asarray(sc.semigroup.adjoint_factor(beta)).astype(ld)
    if adj.ndim == 2:
        # recompute the weighted transpose in extended precision
        F = np.asarray(sc.semigroup.factor(beta)).astype(ld)
        adj = F.T * w[None, :] / w[:, None]
    cols = []
    for _, g in samplers:
        gl = g.coeffs.astype(ld)
        cols.append(w * gl)
        cols.append(w * act(adj, gl))
    G = np.stack(cols, axis=1) / ld(beta)

    n_total = sc.params.n_last + 1
    raw = np.empty((n_total, G.shape[1]), dtype=ld)
    for n0, U in iter_states(sc, chunk=chunk):
        raw[n0:n0 + len(U)] = U @ G

    times = np.arange(n_total) * beta
    chans = np.arange(G.shape[1])
    raw += sc.noise.draw_many(times[:, None], chans[None, :]).astype(ld)

    out = []
    for i, (name, g) in enumerate(samplers):
        out.append(MeasurementSeries(
            sampler_id=name, g_norm=samplers.norms[i], beta=beta, rho=sc.rho,
            m_state=raw[:, channel_id(i, STATE)].copy(), m_pred=raw[:, channel_id(i, PRED)].copy(),
        ))
    return out


def _fmt(x) -> str:
    if isinstance(x, np.longdouble):
        return np.format_float_scientific(x, unique=True, trim="-")
    return repr(float(x))


def write_measurements_csv(path: Path | str, series: Sequence[MeasurementSeries]) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["n", "t", "sampler_id", "m_state", "m_pred", "F", "Delta"])
        n_total = len(series[0])
        for n in range(n_total):
            for s in series:
                F = _fmt(s.F[n]) if n < len(s.F) else ""
                D = _fmt(s.Delta[n]) if n < len(s.Delta) else ""
                wr.writerow([n, _fmt(n * s.beta), s.sampler_id, _fmt(s.m_state[n]),
                             _fmt(s.m_pred[n]), F, D])
