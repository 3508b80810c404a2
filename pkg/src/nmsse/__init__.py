"""Diffusive non-Markovian stochastic Schrödinger equations.

Trajectory unravellings (coherent and quadrature, linear and nonlinear
variants) driven by a perturbative operator-functional hierarchy or a
first-order post-Markovian closure, validated against an exact
enlarged-system (pseudomode) Lindblad solver.
"""

from .config import RunConfig, parse_config
from .enlarged import EnlargedSpace, evolve_enlarged, lindblad_reference_markov
from .ensemble import (ComparisonMetrics, EnsembleResult, compare, merge,
                       run_ensemble)
from .errors import (CapacityError, ConfigError, DegenerateStateError,
                     DimensionMismatchError, EnsembleFailureError,
                     GridMismatchError, KernelError, QuadratureUnsupportedError,
                     TrajectoryFailureError, TruncationError,
                     UnsupportedOrderError)
from .functionals import PerturbativeProvider, equation_count
from .kernel import KernelComponent, MemoryKernel, alpha_eval, beta_eval, ydgs_weights
from .linalg import SystemModel, bloch_from_density, driven_tla, excited_ket
from .noise import NoiseState, RngStreamSpec, init_noise
from .sse import StepperConfig, run_batch, run_trajectory, ydgs_provider_for

__version__ = "0.1.0"

__all__ = [
    "RunConfig", "parse_config",
    "EnlargedSpace", "evolve_enlarged", "lindblad_reference_markov",
    "ComparisonMetrics", "EnsembleResult", "compare", "merge", "run_ensemble",
    "CapacityError", "ConfigError", "DegenerateStateError",
    "DimensionMismatchError", "EnsembleFailureError", "GridMismatchError",
    "KernelError", "QuadratureUnsupportedError", "TrajectoryFailureError",
    "TruncationError", "UnsupportedOrderError",
    "PerturbativeProvider", "equation_count",
    "KernelComponent", "MemoryKernel", "alpha_eval", "beta_eval", "ydgs_weights",
    "SystemModel", "bloch_from_density", "driven_tla", "excited_ket",
    "NoiseState", "RngStreamSpec", "init_noise",
    "StepperConfig", "run_batch", "run_trajectory", "ydgs_provider_for",
    "__version__",
]
