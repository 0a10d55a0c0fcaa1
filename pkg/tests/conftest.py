import numpy as np
import pytest

from dynburst import (BurstTrain, Const, Cos, ExpBackground, ExponentialDecay, GeneralDecay, ModelParams,
                      NoiseModel, Poly, SamplerSet, ScalarSemigroup, Scenario, Sin, SinBackground, Space,
                      ZeroBackground, make_function)

SIGMA = 1e-3
ALG1_TIMES = (0.25, 0.54, 0.78)
ALG2_TIMES = (1.1, 9.8, 19.0)


@pytest.fixture(scope="session")
def grid():
    return Space("grid", 1025)


def reference_shapes(space):
    return tuple(make_function(e, space) for e in (Sin(3), Cos(2.5), Poly((2, 1))))


def reference_samplers(space):
    return SamplerSet(tuple(make_function(e, space) for e in (Const(1), Poly((0, 1)), Poly((0, 0, 1)))))


def reference_scenario(space, beta=0.01, background="exp", alg=1, sigma=SIGMA, seed=11, rate=0.01):
    x = make_function(Poly((0, 1)), space)
    bg = {"exp": lambda: ExpBackground(x, rate), "sin": lambda: SinBackground(x, rate),
          "zero": lambda: ZeroBackground(space)}[background]()
    if alg == 1:
        decay, times, horizon, D = ExponentialDecay(1.0), ALG1_TIMES, 1.0, 0.0
    else:
        decay, times, horizon, D = GeneralDecay.exp_mixture([0.5, 0.5], [2.0, 1.0]), ALG2_TIMES, 20.0, 8.6
    return Scenario(ScalarSemigroup(1.0, space), space.zero(),
                    BurstTrain(times, reference_shapes(space), decay), bg,
                    NoiseModel(sigma, seed), ModelParams(beta, horizon, D))


def scalar_scenario(bursts=(), h=(), beta=0.1, horizon=1.0, a=1.0, rho=1.0, u0=0.0, decay=None,
                    sigma=0.0, D=0.0):
    sp = Space("abstract", 1)
    decay = decay or ExponentialDecay(rho)
    shapes = tuple(sp.element([v]) for v in h)
    return Scenario(ScalarSemigroup(a, sp), sp.element([u0]), BurstTrain(tuple(bursts), shapes, decay),
                    ZeroBackground(sp), NoiseModel(sigma, 3), ModelParams(beta, horizon, D))


def unit_sampler():
    sp = Space("abstract", 1)
    return SamplerSet((sp.element([1.0]),))


def rng(seed=0):
    return np.random.default_rng(seed)
