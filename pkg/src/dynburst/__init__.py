"""Burst detection and burst-shape recovery from space-time samples of a semigroup evolution."""
from .space import Space, SpaceElement, inner, norm, make_function, Sin, Cos, Poly, Const
from .semigroup import ScalarSemigroup, DiagonalSemigroup, MatrixSemigroup
from .forcing import (ExponentialDecay, GeneralDecay, BurstTrain, ZeroBackground, ExpBackground,
                      SinBackground, CustomBackground, NoiseModel)
from .solver import ModelParams, Scenario, mild_solution
from .sampling import SamplerSet, acquire
from .detector import ThresholdParams, detect_alg1, detect_alg2, validate_scenario

__version__ = "0.1.0"
