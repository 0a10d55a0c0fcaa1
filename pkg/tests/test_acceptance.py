"""Acceptance criteria, one test each. Every test prints a PASS/FAIL line to the terminal."""
import filecmp
import math
import time
from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import ortho_group

from dynburst import config as cfgmod
from dynburst import report
from dynburst.bounds import semigroup_modulus, v_bound, v_bound_general
from dynburst.detector import (ThresholdParams, detect_alg1, epsilon, threshold_Q, threshold_Q1,
                               validate_scenario)
from dynburst.forcing import (BurstTrain, ExpBackground, ExponentialDecay, GeneralDecay, NoiseModel,
                              SinBackground, ZeroBackground)
from dynburst.sampling import SamplerSet, acquire, compute_F
from dynburst.semigroup import DiagonalSemigroup, MatrixSemigroup, ScalarSemigroup
from dynburst.solver import ModelParams, Scenario, mild_solution
from dynburst.space import Cos, Poly, Sin, Space, make_function, norm

from conftest import ALG1_TIMES, ALG2_TIMES, reference_samplers, reference_scenario, unit_sampler

pytestmark = pytest.mark.acceptance


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {n}] {'PASS' if ok else 'FAIL'}: {detail}")
        return ok
    return emit


def clean_windows(times, beta, n_delta, D=0.0):
    """Indices n with no burst in [n b - D, (n+2) b) (open at the left when D > 0)."""
    times = np.asarray(times, dtype=float)
    out = []
    for n in range(n_delta):
        lo, hi = n * beta, (n + 2) * beta
        if D > 0:
            busy = np.any((times > lo - D + 1e-12) & (times < hi - 1e-12))
        else:
            busy = np.any((times >= lo - 1e-12) & (times < hi - 1e-12))
        if not busy:
            out.append(n)
    return np.asarray(out, dtype=int)


# ---------------------------------------------------------------- 1

def test_ideal_cancellation(grid, verdict):
    t0 = time.perf_counter()
    worst = 0.0
    for beta in (0.015, 0.01):
        sc = reference_scenario(grid, beta=beta, background="zero", sigma=0.0)
        for s in acquire(sc, reference_samplers(grid)):
            idx = clean_windows(sc.bursts.times, beta, len(s.Delta))
            worst = max(worst, float(np.max(np.abs(s.Delta[idx]))) / s.scale)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and dt < 5
    verdict(1, ok, f"max |Delta|/max|m_state| over burst-free windows = {worst:.3g} (limit 1e-8), {dt:.2f} s")
    assert ok


# ---------------------------------------------------------------- 2

def _random_scenario(k, general):
    r = np.random.default_rng(7919 * k + (1 if general else 0))
    kind = ("grid", "scalar", "diagonal", "matrix")[k % 4]
    beta = float(r.uniform(0.01, 0.05))
    if general:
        rates = np.sort(r.uniform(0.5, 3.0, size=r.integers(1, 4)))
        w = r.uniform(0.1, 1.0, size=rates.size)
        decay = GeneralDecay.exp_mixture(w / w.sum(), rates)
        D = float(r.uniform(0.2, 1.0))
        horizon = float(r.uniform(2.0, 4.0))
    else:
        decay = ExponentialDecay(float(r.uniform(0.3, 3.0)))
        D = 0.0
        horizon = float(r.uniform(1.0, 2.5))
    gap = D + 4 * beta

    times, t = [], float(r.uniform(0.0, 0.4))
    for _ in range(int(r.integers(0, 5))):
        if t >= horizon:
            break
        times.append(t)
        t += gap * (1.0 + 1e-6 + r.uniform(0.0, 1.5))

    if kind == "grid":
        sp = Space("grid", 129)
        S = ScalarSemigroup(float(r.uniform(-1.0, 1.5)), sp)

        def elem():
            c = r.uniform(-2, 2, size=3)
            return (make_function(Poly(tuple(c)), sp) + make_function(Sin(float(r.uniform(-2, 2))), sp)
                    + make_function(Cos(float(r.uniform(-2, 2))), sp))
    else:
        dim = 1 if kind == "scalar" else int(r.integers(2, 5))
        sp = Space("abstract", dim)
        if kind == "scalar":
            S = ScalarSemigroup(float(r.uniform(-1.0, 1.5)), sp)
        elif kind == "diagonal":
            S = DiagonalSemigroup(r.uniform(-3.0, 1.5, size=dim), sp)
        else:
            lam = r.uniform(-2.0, 1.0, size=dim)
            Q = ortho_group.rvs(dim, random_state=r) if dim > 1 else np.eye(1)
            A = Q @ np.diag(lam) @ Q.T
            if dim >= 2:              # add a rotation in the top 2x2 block, keeping A normal
                w = float(r.uniform(-3, 3))
                B = np.diag(lam)
                B[0, 1], B[1, 0] = w, -w
                B[1, 1] = B[0, 0]
                A = Q @ B @ Q.T
                lam = np.diag(B)
            S = MatrixSemigroup(A, 1.0, float(np.max(lam)), sp)

        def elem():
            return sp.element(r.uniform(-2, 2, size=dim))

    shapes = tuple(elem() for _ in times)
    bg_kind = ("zero", "exp", "sin")[int(r.integers(0, 3))]
    rate = float(r.uniform(0.0, 0.5))
    bg = {"zero": lambda: ZeroBackground(sp), "exp": lambda: ExpBackground(elem(), rate),
          "sin": lambda: SinBackground(elem(), rate)}[bg_kind]()
    noise = NoiseModel(float(10 ** r.uniform(-4, -2)), int(r.integers(0, 2 ** 32)))
    samplers = SamplerSet(tuple(elem() for _ in range(int(r.integers(1, 4)))))
    sc = Scenario(S, elem(), BurstTrain(tuple(times), shapes, decay), bg, noise,
                  ModelParams(beta, horizon, D))
    return sc, samplers


def _false_triggers(sc, samplers, general):
    mode = "alg2" if general else "alg1"
    rep = validate_scenario(sc, samplers, mode)
    assert rep.ok, rep.render()
    p = ThresholdParams.from_scenario(sc, samplers)
    bad = 0
    worst = 0.0
    for s in acquire(sc, samplers):
        Q = threshold_Q1(p, s.g_norm) if general else threshold_Q(p, s.g_norm)
        idx = clean_windows(sc.bursts.times, sc.beta, len(s.Delta), sc.params.D if general else 0.0)
        if idx.size:
            ratio = np.abs(s.Delta[idx]) / Q
            bad += int(np.count_nonzero(ratio > 1))
            worst = max(worst, float(ratio.max()))
    return bad, worst


def test_threshold_soundness(verdict):
    t0 = time.perf_counter()
    n_each = 1000
    result = {}
    for general in (False, True):
        bad_total, worst = 0, 0.0
        for k in range(n_each):
            sc, samplers = _random_scenario(k, general)
            bad, w = _false_triggers(sc, samplers, general)
            bad_total += bad
            worst = max(worst, w)
        result[general] = (bad_total, worst)
    dt = time.perf_counter() - t0
    ok = result[False][0] == 0 and result[True][0] == 0 and dt < 300
    verdict(2, ok, f"{n_each} scenarios per scan; false triggers exp/general = {result[False][0]}/{result[True][0]}, "
                   f"max |Delta|/threshold = {result[False][1]:.3f}/{result[True][1]:.3f}, {dt:.1f} s")
    assert ok


# ---------------------------------------------------------------- 3, 4

def _reference_runs(mode, times, limit):
    reps, ok, notes = {}, True, []
    for bg in ("exp", "sin"):
        base = cfgmod.load(cfgmod.resolve(f"{mode}-{bg}"))
        for beta in (0.015, 0.01):
            t0 = time.perf_counter()
            rep = report.simulate(base.with_beta(beta))
            dt = time.perf_counter() - t0
            reps[(bg, beta)] = rep
            timing = all(abs(rep.detection.events[k].t_hat - times[j]) <= beta * (1 + 1e-9)
                         for j, k in rep.matches.items())
            within = all(r.margin >= 0 for r in rep.pairs)
            run_ok = (rep.all_detected and len(rep.detection) == 3 and timing and within
                      and len(rep.pairs) == 9 and dt < limit)
            ok &= run_ok
            notes.append(f"{bg}/b={beta}: {len(rep.matches)}/3, err {rep.max_error:.4f} <= bound "
                         f"{rep.max_bound:.4f}{'' if within else ' VIOLATED'}, {dt:.1f} s")
    return reps, ok, notes


def test_reference_alg1(verdict):
    reps, ok, notes = _reference_runs("alg1", ALG1_TIMES, 30)
    sigma = 1e-3
    for bg in ("exp", "sin"):
        shrink = reps[(bg, 0.01)].max_error <= reps[(bg, 0.015)].max_error + 2 * sigma
        ok &= shrink
        notes.append(f"{bg}: err(0.01) <= err(0.015) + 2 sigma {'holds' if shrink else 'FAILS'}")
    verdict(3, ok, "; ".join(notes))
    assert ok


def test_reference_alg2(verdict):
    reps, ok, notes = _reference_runs("alg2", ALG2_TIMES, 60)
    eps = max(r.epsilon for r in reps.values())
    ok &= eps < 1e-3
    notes.append(f"epsilon = {eps:.3g} < sigma")
    verdict(4, ok, "; ".join(notes))
    assert ok


# ---------------------------------------------------------------- 5

@pytest.mark.slow
def test_small_step_constants(verdict):
    ok, notes = True, []
    for name in ("alg1-exp", "alg2-exp"):
        cfg = cfgmod.load(cfgmod.resolve(name))
        beta_star, const = report.certified_beta(cfg)
        c = cfg.with_beta(beta_star)
        p = report.threshold_params(c)
        worst = max(report.pair_bound(c, p, j, s) for j in range(3) for s in range(3))
        target = const if cfg.mode == "alg1" else 13e-3 + 4 * epsilon(p)
        rep = report.simulate(c)
        run_ok = (beta_star <= 0.1 and worst <= target * (1 + 1e-12) and rep.all_detected
                  and rep.max_error < const)
        ok &= run_ok
        notes.append(f"{name}: beta* = {beta_star:.4g}, max bound {worst:.5f} <= {target:.5f}, "
                     f"empirical error {rep.max_error:.5f} < {const:.5f}")
    verdict(5, ok, "; ".join(notes))
    assert ok


# ---------------------------------------------------------------- 6

def test_scalar_oracle_equivalence(verdict):
    t0 = time.perf_counter()
    beta, tau = 0.1, 0.55
    sp = Space("abstract", 1)
    one = sp.element([1.0])

    def scenario(t_burst):
        return Scenario(ScalarSemigroup(1.0, sp), sp.zero(), BurstTrain((t_burst,), (one,), ExponentialDecay(1.0)),
                        ZeroBackground(sp), NoiseModel(0.0), ModelParams(beta, 1.0))

    def F_exact(n, t_burst):
        # (1/b) int_{max(nb, t)}^{(n+1)b} e^{(n+1)b - s} e^{-(s - t)} ds
        lo, hi = max(n * beta, t_burst), (n + 1) * beta
        if hi <= lo:
            return 0.0
        return math.exp(hi + t_burst) * (math.exp(-2 * lo) - math.exp(-2 * hi)) / 2 / beta

    errs = []
    sc = scenario(tau)
    for t in (0.6, 0.73, 1.0):
        errs.append(abs(mild_solution(sc, t).coeffs[0] / math.sinh(t - tau) - 1))
    grid_sc = scenario(0.5)
    (gs,) = acquire(grid_sc, unit_sampler())
    errs.append(abs(compute_F(gs, 5) / (math.sinh(beta) / beta) - 1))
    (s,) = acquire(sc, unit_sampler())
    for n in range(len(s.F)):
        ref = F_exact(n, tau)
        errs.append(abs(s.F[n] - ref) / max(abs(ref), 1e-300) if ref else abs(s.F[n]))
    p = ThresholdParams.from_scenario(sc, unit_sampler(), sigma=1e-12)
    res = detect_alg1([s], p)
    # hand trace: Delta_3 = 0, Delta_4 != 0 -> t_hat = 5 b, f_hat = e^{3b} F_6 - F_3
    f_ref = math.exp(3 * beta) * F_exact(6, tau) - F_exact(3, tau)
    pipe = len(res) == 1 and res[0].trigger_index == 4 and abs(res[0].t_hat - 0.5) < 1e-12
    if pipe:
        errs.append(abs(res[0].f_hat["g1"] / f_ref - 1))
    dt = time.perf_counter() - t0
    worst = max(errs)
    ok = pipe and worst <= 1e-9 and dt < 1
    verdict(6, ok, f"max relative deviation {worst:.3g} (limit 1e-9), detection {'matches' if pipe else 'DIFFERS'}, "
                   f"{dt:.2f} s")
    assert ok


# ---------------------------------------------------------------- 7

def test_lemma_limits(grid, verdict):
    sc = reference_scenario(grid, beta=0.1)
    S = sc.semigroup
    samplers = reference_samplers(grid)
    mixture = GeneralDecay.exp_mixture([0.5, 0.5], [2.0, 1.0])
    p0 = ThresholdParams.from_scenario(sc, samplers)
    ok, last = True, 0.0
    for h in sc.bursts.shapes:
        for g in samplers.norms:
            curves = {}
            for k in range(11):
                beta = 0.1 * 2.0 ** -k
                b = replace(p0, beta=beta).bound_inputs(g, norm(h), lambda bb, h=h: semigroup_modulus(S, h, bb))
                vals = [v_bound(0, b), v_bound(1, b)] + [v_bound_general(kk, ii, mixture, b)
                                                         for kk, ii in ((3, 2), (3, 3), (2, 2))]
                for j, v in enumerate(vals):
                    curves.setdefault(j, []).append(v)
            for c in curves.values():
                ok &= all(b <= a for a, b in zip(c, c[1:])) and c[-1] < 1e-3
                last = max(last, c[-1])
    verdict(7, ok, f"all five lemma bounds nonincreasing over 11 halvings; largest value at k=10 is {last:.3g} "
                   f"(limit 1e-3)")
    assert ok


# ---------------------------------------------------------------- 8

def test_determinism(tmp_path, verdict):
    ok, checked = True, 0
    for name in cfgmod.BUNDLED:
        cfg = cfgmod.load(cfgmod.resolve(name))
        a, b = tmp_path / f"{name}-1", tmp_path / f"{name}-2"
        report.run(cfg, a, figures=False)
        report.run(cfgmod.load(cfgmod.resolve(name)), b, figures=False)
        files = sorted(p.name for p in a.glob("*.csv"))
        match, mismatch, errors = filecmp.cmpfiles(a, b, files, shallow=False)
        ok &= not mismatch and not errors and len(files) == 4
        checked += len(match)
    verdict(8, ok, f"{checked} CSV files byte-identical across two runs of {len(cfgmod.BUNDLED)} bundled configs")
    assert ok
