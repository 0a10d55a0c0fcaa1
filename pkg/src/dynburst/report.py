"""End-to-end runs: simulate, measure, detect, compare against ground truth and bounds, write reports."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import config as cfgmod
from .bounds import bound_thm1, bound_thm2, certify_beta_star
from .detector import (ALG1, DetectionResult, ThresholdParams, ValidationReport, detect_alg1,
                       detect_alg2, epsilon, event_bound_inputs, threshold_Q, threshold_Q1,
                       validate_scenario)
from .sampling import MeasurementSeries, acquire, write_measurements_csv
from .space import inner


class ValidationFailed(RuntimeError):
    def __init__(self, report: ValidationReport):
        self.report = report
        super().__init__(report.render())


def _f(x) -> str:
    return repr(float(x))


def ground_truth(cfg: cfgmod.RunConfig, factor: int = 4) -> np.ndarray:
    """``<h_i, g_j>`` on a grid ``factor`` times finer than the scenario grid (rows: bursts)."""
    space = cfg.scenario.space.refined(factor)
    hs = [cfgmod.element_from_spec(s, space) for s in cfg.burst_specs()]
    gs = [cfgmod.element_from_spec(s, space) for s in cfg.sampler_specs()]
    out = np.zeros((len(hs), len(gs)))
    for i, h in enumerate(hs):
        for j, g in enumerate(gs):
            out[i, j] = inner(h, g)
    return out


def threshold_params(cfg: cfgmod.RunConfig) -> ThresholdParams:
    return ThresholdParams.from_scenario(cfg.scenario, cfg.samplers, cfg.threshold_exponent)


def pair_bound(cfg: cfgmod.RunConfig, p: ThresholdParams, burst: int, sampler: int) -> float:
    """Recovery-error bound for burst ``burst`` seen through sampler ``sampler``."""
    g_norm = cfg.samplers.norms[sampler]
    b = event_bound_inputs(cfg.scenario, p, g_norm, burst)
    if cfg.mode == ALG1:
        return bound_thm1(b, threshold_Q(p, g_norm))
    return bound_thm2(b, threshold_Q1(p, g_norm), cfg.scenario.bursts.decay)


def match_events(times: Sequence[float], result: DetectionResult, beta: float) -> dict[int, int]:
    """Map burst index -> event index for events within ``beta`` (plus rounding slack) of a burst."""
    out: dict[int, int] = {}
    used: set[int] = set()
    for j, tj in enumerate(times):
        best, best_d = None, math.inf
        for k, ev in enumerate(result.events):
            d = abs(ev.t_hat - tj)
            if k not in used and d <= beta * (1 + 1e-9) and d < best_d:
                best, best_d = k, d
        if best is not None:
            out[j] = best
            used.add(best)
    return out


@dataclass
class PairRow:
    burst: int
    sampler: str
    f_hat: float
    truth: float
    bound: float

    @property
    def error(self) -> float:
        return abs(self.f_hat - self.truth)

    @property
    def margin(self) -> float:
        return self.bound - self.error


@dataclass
class RunReport:
    name: str
    mode: str
    beta: float
    validation: ValidationReport
    series: list[MeasurementSeries]
    detection: DetectionResult
    truth: np.ndarray
    matches: dict[int, int]
    pairs: list[PairRow]
    event_bounds: dict[tuple[int, str], float]
    epsilon: float | None
    files: dict[str, Path] = field(default_factory=dict)

    @property
    def max_error(self) -> float:
        return max((r.error for r in self.pairs), default=0.0)

    @property
    def max_bound(self) -> float:
        return max((r.bound for r in self.pairs), default=0.0)

    @property
    def all_detected(self) -> bool:
        return len(self.matches) == self.truth.shape[0]

    def summary(self) -> str:
        ev = self.detection.events
        lines = [
            f"scenario {self.name} ({self.mode}), beta={self.beta:g}",
            self.validation.render(),
            f"events: {len(ev)}" + (" (scan truncated before the horizon)" if self.detection.truncated else ""),
        ]
        for k, e in enumerate(ev):
            lines.append(f"  event {k}: t_hat={e.t_hat:.6g} trigger Delta={e.trigger_delta:.6g} "
                         f"on {e.trigger_sampler}")
        missed = [j for j in range(self.truth.shape[0]) if j not in self.matches]
        lines.append(f"bursts detected within beta: {len(self.matches)}/{self.truth.shape[0]}"
                     + (f", missed {missed}" if missed else ""))
        if self.epsilon is not None:
            lines.append(f"epsilon: {self.epsilon:.6g}")
        lines.append(f"max recovery error {self.max_error:.6g}, max bound {self.max_bound:.6g}")
        viol = [r for r in self.pairs if r.margin < 0]
        lines.append("all errors within bounds" if not viol else f"BOUND VIOLATIONS: {len(viol)}")
        return "\n".join(lines) + "\n"


def simulate(cfg: cfgmod.RunConfig, check: bool = True) -> RunReport:
    """Everything except file output."""
    sc = cfg.scenario
    val = validate_scenario(sc, cfg.samplers, cfg.mode)
    if check and not val.ok:
        raise ValidationFailed(val)
    p = threshold_params(cfg)
    series = acquire(sc, cfg.samplers)
    if cfg.mode == ALG1:
        det = detect_alg1(series, p, sc.params.horizon)
        eps = None
    else:
        det = detect_alg2(series, p, horizon=sc.params.horizon)
        eps = epsilon(p)
    truth = ground_truth(cfg)
    matches = match_events(sc.bursts.times, det, sc.beta)
    names = cfg.samplers.names
    pairs, ebounds = [], {}
    for j, k in sorted(matches.items()):
        for s, name in enumerate(names):
            bd = pair_bound(cfg, p, j, s)
            ebounds[(k, name)] = bd
            pairs.append(PairRow(j, name, det.events[k].f_hat[name], float(truth[j, s]), bd))
    return RunReport(cfg.name, cfg.mode, sc.beta, val, series, det, truth, matches, pairs, ebounds, eps)


def write_events_csv(path: Path, rep: RunReport) -> None:
    inv = {k: j for j, k in rep.matches.items()}
    names = list(rep.series[i].sampler_id for i in range(len(rep.series)))
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["event_id", "algorithm", "t_hat", "trigger_delta", "sampler_id", "f_hat",
                     "ground_truth_inner", "thm_bound", "abs_error"])
        for k, ev in enumerate(rep.detection.events):
            j = inv.get(k)
            for s, name in enumerate(names):
                f = ev.f_hat[name]
                if j is None:
                    gt = bd = err = ""
                else:
                    truth = rep.truth[j, s]
                    gt, bd, err = _f(truth), _f(rep.event_bounds[(k, name)]), _f(abs(f - truth))
                wr.writerow([k, ev.algorithm, _f(ev.t_hat), _f(ev.trigger_delta), name, _f(f), gt, bd, err])


def write_bounds_csv(path: Path, rep: RunReport) -> None:
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["scenario_id", "sampler_id", "burst_id", "empirical_error", "bound_thm", "margin"])
        for r in rep.pairs:
            wr.writerow([rep.name, r.sampler, r.burst, _f(r.error), _f(r.bound), _f(r.margin)])


def write_truth_csv(path: Path, truth: np.ndarray, sampler_names: Sequence[str]) -> None:
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["burst_id", *sampler_names])
        for j, row in enumerate(truth):
            wr.writerow([j, *(_f(v) for v in row)])


def run(cfg: cfgmod.RunConfig, outdir: Path | str, figures: bool = True) -> RunReport:
    rep = simulate(cfg)
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "measurements": out / "measurements.csv",
        "events": out / "events.csv",
        "bounds": out / "bounds.csv",
        "ground_truth": out / "ground_truth.csv",
        "summary": out / "summary.txt",
    }
    write_measurements_csv(files["measurements"], rep.series)
    write_events_csv(files["events"], rep)
    write_bounds_csv(files["bounds"], rep)
    write_truth_csv(files["ground_truth"], rep.truth, cfg.samplers.names)
    files["summary"].write_text(rep.summary())
    if figures:
        from .plotting import recovery_figure
        files["figure"] = out / "recovery.png"
        recovery_figure(rep.truth, {rep.beta: estimates(rep)}, cfg.samplers.names,
                        files["figure"], title=cfg.name)
    rep.files = files
    return rep


def estimates(rep: RunReport) -> np.ndarray:
    """Recovered values arranged like ``rep.truth`` (NaN for missed bursts)."""
    est = np.full(rep.truth.shape, np.nan)
    names = [s.sampler_id for s in rep.series]
    for j, k in rep.matches.items():
        for s, name in enumerate(names):
            est[j, s] = rep.detection.events[k].f_hat[name]
    return est


@dataclass
class SweepRow:
    beta: float
    max_error: float
    bound: float
    detected: int
    report: RunReport


def sweep_beta(cfg: cfgmod.RunConfig, betas: Sequence[float], outdir: Path | str | None = None,
               figures: bool = True) -> list[SweepRow]:
    rows = []
    for b in betas:
        rep = simulate(cfg.with_beta(float(b)))
        rows.append(SweepRow(float(b), rep.max_error, rep.max_bound, len(rep.matches), rep))
    if outdir is not None:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        with (out / "sweep.csv").open("w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["beta", "max_error", "bound", "detected"])
            for r in rows:
                wr.writerow([_f(r.beta), _f(r.max_error), _f(r.bound), r.detected])
        if figures:
            from .plotting import recovery_figure, sweep_figure
            sweep_figure([r.beta for r in rows], [r.max_error for r in rows],
                         [r.bound for r in rows], out / "sweep.png", title=cfg.name)
            recovery_figure(rows[0].report.truth, {r.beta: estimates(r.report) for r in rows},
                            cfg.samplers.names, out / "recovery.png", title=cfg.name)
    return rows


def certified_beta(cfg: cfgmod.RunConfig, beta_max: float = 0.1) -> tuple[float, float]:
    """Largest certified ``b <= beta_max`` at which every pair bound meets the small-step constant.

    Returns ``(beta_star, constant)`` where the constant is ``13 sigma`` for the
    exponential-decay scan and ``13 sigma + 4 eps`` (at ``beta_star``) otherwise.
    """
    base = cfg.scenario
    sigma = base.sigma
    n_b, n_g = len(base.bursts), len(cfg.samplers)

    def excess(beta):
        c = cfg.with_beta(beta)
        p = threshold_params(c)
        worst = max(pair_bound(c, p, j, s) for j in range(n_b) for s in range(n_g))
        extra = 0.0 if cfg.mode == ALG1 else 4 * epsilon(p)
        return worst - extra

    beta_star = certify_beta_star(excess, 13 * sigma, beta_max=beta_max)
    if cfg.mode == ALG1:
        return beta_star, 13 * sigma
    return beta_star, 13 * sigma + 4 * epsilon(threshold_params(cfg.with_beta(beta_star)))
