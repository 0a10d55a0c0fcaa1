"""Detection thresholds, scenario validation and the two burst-detection scans."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bounds import BoundInputs, past_burst_term, semigroup_modulus
from .forcing import ExponentialDecay, background_probe, decay_domination_slack
from .sampling import MeasurementSeries, SamplerSet
from .solver import Scenario
from .space import norm

ALG1, ALG2 = "alg1", "alg2"
EXPONENTS = ("rho_beta", "beta")


@dataclass(frozen=True)
class ThresholdParams:
    M: float
    a: float
    rho: float
    beta: float
    sigma: float
    K: float = 0.0
    L: float = 0.0
    H: float = 0.0
    R: float = 0.0
    D: float = 0.0
    threshold_exponent: str = "rho_beta"

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if not (self.rho > 0 and self.beta > 0):
            raise ValueError("rho and beta must be positive")
        for name in ("sigma", "K", "L", "H", "R", "D"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.threshold_exponent not in EXPONENTS:
            raise ValueError(f"threshold_exponent must be one of {EXPONENTS}")

    @classmethod
    def from_scenario(cls, sc: Scenario, samplers: SamplerSet, threshold_exponent: str = "rho_beta",
                      sigma: float | None = None) -> "ThresholdParams":
        """Constants read off a scenario.

        A negative growth exponent is replaced by 0: the bounds use
        ``sup_{s <= b} ||T(s)|| <= M exp(a b)``, which needs ``a >= 0``.
        """
        M, a = sc.semigroup.growth_bound()
        return cls(M=M, a=max(a, 0.0), rho=sc.rho, beta=sc.beta,
                   sigma=sc.sigma if sigma is None else sigma,
                   K=sc.background.K, L=sc.background.L, H=sc.bursts.H_bound,
                   R=samplers.R_bound, D=sc.params.D, threshold_exponent=threshold_exponent)

    def bound_inputs(self, g_norm: float, h_norm: float, modulus) -> BoundInputs:
        return BoundInputs(M=self.M, a=self.a, rho=self.rho, beta=self.beta, sigma=self.sigma,
                           K=self.K, L=self.L, g_norm=g_norm, h_norm=h_norm, modulus=modulus,
                           H=self.H, R=self.R, D=self.D)


def threshold_Q(p: ThresholdParams, g_norm: float) -> float:
    """Upper bound on ``|Delta_n|`` over burst-free windows."""
    if g_norm < 0:
        raise ValueError("g_norm must be nonnegative")
    rb = p.rho * p.beta
    mid = math.expm1(rb) if p.threshold_exponent == "rho_beta" else math.expm1(p.beta)
    return (math.exp((p.rho + p.a) * p.beta) * p.M * p.L * g_norm * p.beta
            + math.exp(p.a * p.beta) * mid * p.M * p.K * g_norm
            + 4.0 * math.exp(rb) * p.sigma)


def epsilon(p: ThresholdParams) -> float:
    """Leftover influence of earlier bursts at least ``D`` in the past."""
    return past_burst_term(p.M, p.a, p.rho, p.beta, p.D, p.H, p.R)


def threshold_Q1(p: ThresholdParams, g_norm: float) -> float:
    return threshold_Q(p, g_norm) + epsilon(p)


# ---------------------------------------------------------------- validation

@dataclass(frozen=True)
class ValidationItem:
    name: str
    passed: bool
    slack: float
    detail: str = ""
    severity: str = "error"


@dataclass
class ValidationReport:
    mode: str
    items: list[ValidationItem] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(it.passed for it in self.items if it.severity == "error")

    @property
    def failures(self) -> list[ValidationItem]:
        return [it for it in self.items if it.severity == "error" and not it.passed]

    @property
    def warnings(self) -> list[ValidationItem]:
        return [it for it in self.items if it.severity == "warning" and not it.passed]

    def add(self, name, slack, detail="", severity="error"):
        self.items.append(ValidationItem(name, bool(slack >= 0), float(slack), detail, severity))

    def render(self) -> str:
        lines = [f"validation ({self.mode}): {'ok' if self.ok else 'FAILED'}"]
        for it in self.items:
            tag = "pass" if it.passed else ("warn" if it.severity == "warning" else "FAIL")
            lines.append(f"  [{tag}] {it.name}: slack={it.slack:.6g} {it.detail}".rstrip())
        return "\n".join(lines)


def validate_scenario(sc: Scenario, samplers: SamplerSet, mode: str = ALG1) -> ValidationReport:
    if mode not in (ALG1, ALG2):
        raise ValueError(f"unknown mode {mode!r}")
    beta, horizon = sc.beta, sc.params.horizon
    rep = ValidationReport(mode)
    times = np.asarray(sc.bursts.times)

    need = 4 * beta + (sc.params.D if mode == ALG2 else 0.0)
    if times.size > 1:
        gap = float(np.min(np.diff(times)))
        rep.add("burst_gaps", gap - need + 1e-12 * need, f"min gap {gap:g}, required {need:g}")
    else:
        rep.add("burst_gaps", math.inf, "fewer than two bursts")

    H = sc.bursts.H_bound
    hmax = max((norm(h) for h in sc.bursts.shapes), default=0.0)
    rep.add("burst_norms", H * (1 + 1e-12) - hmax, f"max ||h|| {hmax:g}, H {H:g}")

    bg = sc.background
    if bg.kind != "zero":
        sup, lip = background_probe(bg, horizon)
        rep.add("background_sup", bg.K * (1 + 1e-9) + 1e-15 - sup, f"probed {sup:g}, K {bg.K:g}")
        rep.add("background_lipschitz", bg.L * (1 + 1e-6) + 1e-15 - lip, f"probed {lip:g}, L {bg.L:g}")

    rep.add("decay_domination", decay_domination_slack(sc.bursts.decay, horizon),
            f"rho {sc.rho:g}")

    gmax = max(samplers.norms)
    rep.add("sampler_norms", samplers.R_bound - gmax, f"max ||g|| {gmax:g}")

    if mode == ALG1:
        ok = isinstance(sc.bursts.decay, ExponentialDecay)
        rep.add("exponential_decay", 0.0 if ok else -1.0,
                "" if ok else f"{sc.bursts.decay!r} needs the general-decay scan")
    else:
        rep.add("gap_parameter", sc.params.D if sc.params.D > 0 else -1.0, f"D {sc.params.D:g}")

    if times.size:
        late = times[times > horizon - 4 * beta]
        rep.add("horizon_window", -1.0 if late.size else 4 * beta,
                f"bursts in undetectable window: {late.tolist()}" if late.size else "",
                severity="warning")
    return rep


# ---------------------------------------------------------------- detection

@dataclass(frozen=True)
class DetectionEvent:
    t_hat: float
    f_hat: dict
    trigger_delta: float
    trigger_index: int
    trigger_sampler: str
    algorithm: str


@dataclass
class DetectionResult:
    """Events of one scan.

    ``truncated`` is set when the series ended before the scan reached the
    horizon while a threshold crossing was still pending in the unscanned tail.
    """

    algorithm: str
    events: list[DetectionEvent]
    scan_end: int
    truncated: bool = False
    visited: list[int] = field(default_factory=list)

    def __iter__(self):
        return iter(self.events)

    def __len__(self):
        return len(self.events)

    def __getitem__(self, k):
        return self.events[k]


def _scan(series: Sequence[MeasurementSeries], thresholds: Sequence[float], p: ThresholdParams,
          skip: int, algorithm: str, horizon: float | None) -> DetectionResult:
    if not series:
        raise ValueError("no measurement series")
    for s in series:
        if not (math.isclose(s.rho, p.rho, rel_tol=1e-12) and math.isclose(s.beta, p.beta, rel_tol=1e-12)):
            raise ValueError(f"series {s.sampler_id} was acquired with different rho/beta")
    beta = p.beta
    nF = min(len(s.F) for s in series)
    if horizon is None:
        horizon = (min(len(s) for s in series) - 1) * beta
    nD = nF - 1
    D = np.stack([s.Delta[:nD] for s in series])
    Qs = np.asarray(thresholds, dtype=float)[:, None]
    over = np.abs(D) > Qs
    trig = over.any(axis=0)
    hits = np.flatnonzero(trig)
    grow = math.exp(3 * p.rho * beta)

    # last admissible index: i b < horizon and F_{i+3} defined
    i_max = min(nF - 4, int(math.ceil(horizon / beta - 1e-9)) - 1)
    events: list[DetectionEvent] = []
    visited: list[int] = []
    i = 1
    while i <= i_max:
        pos = int(np.searchsorted(hits, i))
        if pos == hits.size:
            break
        i = max(i, int(hits[pos]) - 1)
        if i > i_max:
            break
        visited.append(i)
        k = i if trig[i] else i + 1
        lo = i - 1 if k == i else i
        f_hat = {s.sampler_id: float(grow * s.F[lo + 3] - s.F[lo]) for s in series}
        col = np.abs(D[:, k]) - Qs[:, 0]
        which = int(np.argmax(np.where(over[:, k], col, -np.inf)))
        events.append(DetectionEvent(t_hat=(k + 1) * beta, f_hat=f_hat,
                                     trigger_delta=float(D[which, k]), trigger_index=k,
                                     trigger_sampler=series[which].sampler_id, algorithm=algorithm))
        i += skip
    scan_end = min(i, i_max + 1)
    stopped_short = i_max < int(math.ceil(horizon / beta - 1e-9)) - 1
    truncated = bool(stopped_short and np.any(trig[max(scan_end, 1):]))
    return DetectionResult(algorithm, events, scan_end, truncated, visited)


def detect_alg1(series: Sequence[MeasurementSeries], p: ThresholdParams,
                horizon: float | None = None) -> DetectionResult:
    """Scan for bursts with exponential decay, threshold ``Q`` per sampler."""
    Q = [threshold_Q(p, s.g_norm) for s in series]
    return _scan(series, Q, p, 3, ALG1, horizon)


def detect_alg2(series: Sequence[MeasurementSeries], p: ThresholdParams, D: float | None = None,
                horizon: float | None = None) -> DetectionResult:
    """Scan for bursts with a general decay profile, threshold ``Q1``; skips ``D`` after each hit."""
    if D is not None and D != p.D:
        from dataclasses import replace
        p = replace(p, D=D)
    if not p.D > 0:
        raise ValueError("the general-decay scan needs D > 0")
    Q1 = [threshold_Q1(p, s.g_norm) for s in series]
    skip = 3 + int(math.floor(p.D / p.beta + 1e-9))
    return _scan(series, Q1, p, skip, ALG2, horizon)


def event_bound_inputs(sc: Scenario, p: ThresholdParams, g_norm: float, burst_index: int) -> BoundInputs:
    """Bound constants for the estimate of burst ``burst_index`` against a sampler of norm ``g_norm``."""
    h = sc.bursts.shapes[burst_index]
    S = sc.semigroup

    def modulus(b, h=h):
        return semigroup_modulus(S, h, b)

    return p.bound_inputs(g_norm, norm(h), modulus)
