"""Ostensible colored noise and the Girsanov shift to actual noise.

The ostensible process is a sum of complex Ornstein-Uhlenbeck components,
one per kernel component, advanced with the *exact* one-step update

    w_j(t+h) = w_j(t) e^{-lambda_j h} + eta_j,   lambda_j = kappa_j/2 + i Omega_j,

with eta_j a centred complex Gaussian, E[eta^2] = 0 and E[|eta|^2] chosen so
the stationary distribution is preserved exactly: the emitted noise then has

    coherent:    z(t) = sum_j w_j,      E[z(t) z*(s)] = alpha(t-s),  E[z z] = 0,
    quadrature:  z(t) = sum_j Re(w_j),  E[z(t) z(s)]  = beta(t-s)   (exactly real).

Per-component stationary variances are E[|w_j|^2] = A_j (coherent) and 2 A_j
(quadrature; halved again by the Re projection).  Exact discretization rather
than Euler-Maruyama removes all noise-integration bias, so stepper error can
be attributed to the SSE integrator alone.

Streams are counter-based: trajectory i of a run seeded with s draws from
Philox keyed by (s, i), which is reproducible regardless of execution order,
chunking, or process count.

The Girsanov shift turning ostensible into actual noise is a convolution of
the kernel with past expectation values; for exponential kernels it is
carried by per-component accumulators obeying the linear ODE

    M_j' = -lambda_j M_j + A_j <.>_t,

with <.> = <L> (coherent) or <L_x> (quadrature), and

    shift = sum_j M_j (coherent)   or   sum_j Re M_j (quadrature).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import QuadratureUnsupportedError
from .kernel import MemoryKernel


@dataclass(frozen=True)
class RngStreamSpec:
    master_seed: int
    trajectory_index: int

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in 64 bits")
        if self.trajectory_index < 0:
            raise ValueError("trajectory_index must be >= 0")

    def generator(self) -> np.random.Generator:
        key = np.array([self.master_seed, self.trajectory_index], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


# -- array-level primitives (shared by NoiseState and the batched engine) ----

def stationary_std(kernel: MemoryKernel, mode: str) -> np.ndarray:
    """Std of each real/imag part of w_j in equilibrium: sqrt(V_j / 2)."""
    v = kernel.amplitudes * (1.0 if mode == "coherent" else 2.0)
    return np.sqrt(0.5 * v)

def decay_factors(kernel: MemoryKernel, h: float) -> np.ndarray:
    return np.exp(-kernel.lams * h)

def increment_std(kernel: MemoryKernel, h: float, mode: str) -> np.ndarray:
    """Std of each real/imag part of the exact-step increment eta_j."""
    v = kernel.amplitudes * (1.0 if mode == "coherent" else 2.0)
    return np.sqrt(0.5 * v * (1.0 - np.exp(-kernel.kappas * h)))

def complex_normals(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """Standard complex normals (unit variance per real part)."""
    flat = rng.standard_normal(shape + (2,))
    return flat[..., 0] + 1j * flat[..., 1]

def emit(w: np.ndarray, mode: str):
    """Noise value from component values; components on the last axis."""
    return w.sum(axis=-1) if mode == "coherent" else w.real.sum(axis=-1)

def girsanov_rhs(m: np.ndarray, source, amps: np.ndarray, lams: np.ndarray) -> np.ndarray:
    """dM_j/dt for shift accumulators; ``source`` is <L> or <L_x> (broadcast)."""
    return -lams * m + amps * np.asarray(source)[..., None]

def shift_value(m: np.ndarray, mode: str):
    s = m.sum(axis=-1)
    return s if mode == "coherent" else s.real


def _check_mode(kernel: MemoryKernel, mode: str) -> None:
    if mode not in ("coherent", "quadrature"):
        raise ValueError(f"unknown noise mode {mode!r}")
    if mode == "quadrature":
        kernel.require_quadrature()


@dataclass
class NoiseState:
    """One trajectory's noise: OU component values plus shift accumulators.

    ``value`` is the ostensible z at the current time; ``step(h)`` advances
    it exactly.  ``advance_shift`` integrates the accumulators with a Heun
    step matching the trajectory stepper (the SSE engine embeds the same
    rhs in its joint state instead of calling this).
    """

    kernel: MemoryKernel
    mode: str
    rng: np.random.Generator
    w: np.ndarray = field(init=False)
    m: np.ndarray = field(init=False)

    def __post_init__(self):
        _check_mode(self.kernel, self.mode)
        j = self.kernel.n_components
        self.w = stationary_std(self.kernel, self.mode) * complex_normals(self.rng, (j,))
        self.m = np.zeros(j, dtype=complex)

    @property
    def value(self):
        z = emit(self.w, self.mode)
        return complex(z) if self.mode == "coherent" else float(z)

    def step(self, h: float):
        """Exact OU update; returns the ostensible noise at the new time."""
        if h <= 0:
            raise ValueError("step requires h > 0")
        eta = increment_std(self.kernel, h, self.mode) * complex_normals(
            self.rng, (self.kernel.n_components,))
        self.w = self.w * decay_factors(self.kernel, h) + eta
        return self.value

    @property
    def shift(self):
        s = shift_value(self.m, self.mode)
        return complex(s) if self.mode == "coherent" else float(s)

    def advance_shift(self, expectation_value, h: float):
        """One Heun step of M' = -lam M + A <.>; returns the new shift.

        The source expectation is held at its step-start value, matching the
        trajectory integrator's explicit coupling.
        """
        amps, lams = self.kernel.amplitudes, self.kernel.lams
        k1 = girsanov_rhs(self.m, expectation_value, amps, lams)
        k2 = girsanov_rhs(self.m + h * k1, expectation_value, amps, lams)
        self.m = self.m + 0.5 * h * (k1 + k2)
        return self.shift


def init_noise(kernel: MemoryKernel, mode: str, spec: RngStreamSpec) -> NoiseState:
    """Stationary-start noise for one trajectory stream."""
    return NoiseState(kernel=kernel, mode=mode, rng=spec.generator())
