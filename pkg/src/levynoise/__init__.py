"""Chaos expansions for pure-jump Lévy white noise and the stochastic Poisson equation."""

from .basis import JumpBasis, build_jump_basis, delta_k, eval_p, hermite_fn, tensor_hermite
from .chaos import ChaosExpansion, hermite_transform, inner, kondratiev_norm, l2_norm, wick
from .greens import UnitBall, UnitDisk, UnitHypercube, UnitInterval, make_domain
from .measures import AtomicMeasure, DensityMeasure, DivergenceError, MeasureError, measure_from_dict
from .multiindex import MultiIndex, cantor_pair, cantor_unpair, dim_bijection, dim_unbijection
from .poisson import green, green_l2sq, solve_chaos, solve_mc, variance_exact

__version__ = "0.1.0"
