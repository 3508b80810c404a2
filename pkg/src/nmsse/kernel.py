"""Exponential-sum memory kernels and derived weight functions.

The bath correlation function is represented as a finite sum of damped
complex exponentials,

    alpha(tau) = sum_j A_j exp(-kappa_j tau / 2) exp(-i Omega_j tau),  tau >= 0,

with per-component amplitude A_j > 0 (units rate^2), memory decay rate
kappa_j > 0 and detuning Omega_j.  The real-noise (quadrature) unravelling
uses the cosine counterpart

    beta(tau) = sum_j A_j exp(-kappa_j tau / 2) cos(Omega_j tau),

which coincides with alpha whenever alpha is real.  Amplitude convention:
the stored A_j is the value of the component at tau = 0 for *both* kernels,
i.e. alpha_j(0) = beta_j(0) = A_j, and the enlarged-system coupling is
recovered as G_j = sqrt(A_j).

Everything downstream needs the components only through lambda_j =
kappa_j/2 + i Omega_j and A_j; cumulative integrals have closed forms, and
the post-Markovian weight g2 (a nested convolution) is obtained from an
auxiliary linear ODE pair so that all time-dependent coefficients live on
one integration grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import KernelError, QuadratureUnsupportedError


@dataclass(frozen=True)
class KernelComponent:
    amplitude: float
    kappa: float
    omega: float = 0.0

    def __post_init__(self):
        for name in ("amplitude", "kappa", "omega"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise KernelError(f"kernel component {name} must be finite, got {v!r}")
        if self.amplitude <= 0:
            raise KernelError(f"component amplitude must be > 0, got {self.amplitude}")
        if self.kappa <= 0:
            raise KernelError(f"component kappa must be > 0, got {self.kappa}")

    @property
    def lam(self) -> complex:
        return 0.5 * self.kappa + 1j * self.omega


@dataclass(frozen=True)
class MemoryKernel:
    components: tuple[KernelComponent, ...]

    def __post_init__(self):
        if len(self.components) < 1:
            raise KernelError("kernel needs at least one component")

    # -- constructors ------------------------------------------------------

    @classmethod
    def single(cls, amplitude: float, kappa: float, omega: float = 0.0) -> "MemoryKernel":
        return cls((KernelComponent(amplitude, kappa, omega),))

    @classmethod
    def tla(cls, gamma: float = 1.0, kappa: float = 1.0) -> "MemoryKernel":
        """Single-component kernel alpha(tau) = (gamma kappa / 4) e^{-kappa tau/2}."""
        return cls.single(0.25 * gamma * kappa, kappa, 0.0)

    @classmethod
    def from_string(cls, text: str) -> "MemoryKernel":
        """Parse the config form ``A,kappa,omega; A,kappa,omega; ...``."""
        comps = []
        for chunk in text.split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            parts = [p.strip() for p in chunk.split(",")]
            if len(parts) != 3:
                raise KernelError(
                    f"kernel component {chunk!r} must have 3 comma-separated numbers"
                )
            try:
                a, k, w = (float(p) for p in parts)
            except ValueError as exc:
                raise KernelError(f"kernel component {chunk!r}: {exc}") from exc
            comps.append(KernelComponent(a, k, w))
        if not comps:
            raise KernelError("empty kernel specification")
        return cls(tuple(comps))

    # -- bulk views --------------------------------------------------------

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([c.amplitude for c in self.components], dtype=float)

    @property
    def kappas(self) -> np.ndarray:
        return np.array([c.kappa for c in self.components], dtype=float)

    @property
    def omegas(self) -> np.ndarray:
        return np.array([c.omega for c in self.components], dtype=float)

    @property
    def lams(self) -> np.ndarray:
        return np.array([c.lam for c in self.components], dtype=complex)

    @property
    def quadrature_ok(self) -> bool:
        """True when alpha(tau) is real, i.e. equals its symmetric form beta.

        Components with Omega = 0 are real on their own; detuned components
        must cancel in conjugate pairs (same A and kappa, opposite Omega).
        """
        net: dict[tuple[float, float], float] = {}
        for c in self.components:
            if c.omega == 0.0:
                continue
            key = (c.kappa, abs(c.omega))
            net[key] = net.get(key, 0.0) + c.amplitude * np.sign(c.omega)
        return all(abs(v) <= 1e-12 for v in net.values())

    def require_quadrature(self) -> None:
        if not self.quadrature_ok:
            raise QuadratureUnsupportedError(
                "kernel is not real-valued: quadrature unravelling unavailable "
                "(detuned components must come in conjugate +/-Omega pairs)"
            )


def alpha_eval(kernel: MemoryKernel, tau):
    """alpha(tau) for tau >= 0 (scalar or array)."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("alpha_eval requires tau >= 0; use conj symmetry for tau < 0")
    out = np.einsum(
        "j,...j->...",
        kernel.amplitudes.astype(complex),
        np.exp(-np.multiply.outer(tau, kernel.lams)),
    )
    return complex(out) if out.ndim == 0 else out


def beta_split(kernel: MemoryKernel, tau):
    """Per-component (cos_parts, sin_parts) of the real kernel at tau >= 0."""
    kernel.require_quadrature()
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("beta_split requires tau >= 0")
    env = kernel.amplitudes * np.exp(-0.5 * np.multiply.outer(tau, kernel.kappas))
    phase = np.multiply.outer(tau, kernel.omegas)
    return env * np.cos(phase), env * np.sin(phase)


def beta_eval(kernel: MemoryKernel, tau):
    cos_parts, _ = beta_split(kernel, tau)
    return cos_parts.sum(axis=-1)


def cumulative_integral(kernel: MemoryKernel, t):
    """Per-component I0_j(t) = int_0^t alpha_j = A_j (1 - e^{-lambda_j t}) / lambda_j.

    ``t`` may be scalar or an array; components occupy the last axis.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("cumulative_integral requires t >= 0")
    lam = kernel.lams
    return kernel.amplitudes * (1.0 - np.exp(-np.multiply.outer(t, lam))) / lam


def beta_cumulative(kernel: MemoryKernel, t):
    """Per-component (int_0^t beta_j^cos, int_0^t beta_j^sin) in closed form."""
    kernel.require_quadrature()
    base = cumulative_integral(kernel, t) / kernel.amplitudes
    # base = (1 - e^{-lam t}) / lam; cos-integral is its real part, the
    # sin-integral picks up a sign from e^{-i Omega tau} = cos - i sin.
    return kernel.amplitudes * base.real, -kernel.amplitudes * base.imag


def first_moment_integral(kernel: MemoryKernel, t):
    """Per-component int_0^t alpha_j(tau) tau dtau in closed form."""
    t = np.asarray(t, dtype=float)
    lam = kernel.lams
    expf = np.exp(-np.multiply.outer(t, lam))
    return kernel.amplitudes * (1.0 - expf * (1.0 + np.multiply.outer(t, lam))) / lam**2


def markov_rate(kernel: MemoryKernel) -> float:
    """Total Markovian decay rate: integral of alpha over the whole real line.

    2 Re sum_j A_j / lambda_j; equals gamma for the two-level-atom kernel
    A = gamma kappa / 4, lambda = kappa / 2.
    """
    return float(2.0 * np.sum(kernel.amplitudes / kernel.lams).real)


@dataclass(frozen=True)
class YdgsWeights:
    """Post-Markovian first-order weights on a uniform grid.

    Coherent mode carries (complex) g0, g1, g2 built from alpha; quadrature
    mode the real h0, h1, h2 built from beta.  w0(t) multiplies L, w1(t)
    multiplies -i[H, L], w2(t) multiplies -[L'L, L] in the drift provider.
    """

    grid: np.ndarray
    w0: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    mode: Literal["coherent", "quadrature"]

    @property
    def dt(self) -> float:
        return float(self.grid[1] - self.grid[0]) if self.grid.size > 1 else 0.0

    def at_index(self, i: int) -> tuple[complex, complex, complex]:
        return self.w0[i], self.w1[i], self.w2[i]


def _g2_ode(amps: np.ndarray, lams: np.ndarray, grid: np.ndarray,
            w0: np.ndarray) -> np.ndarray:
    """Heun integration of P' = -lam P + A w0(t), g2' = -lam g2 + P per component.

    Solves g2(t) = int_0^t alpha(t-s) (t-s) w0(s) ds for exponential kernels.
    ``w0`` must be sampled on ``grid``.
    """
    n = grid.size
    h = grid[1] - grid[0]
    p = np.zeros(len(amps), dtype=complex)
    g2 = np.zeros(len(amps), dtype=complex)
    out = np.zeros((n, len(amps)), dtype=complex)
    for i in range(n - 1):
        dp1 = -lams * p + amps * w0[i]
        dg1 = -lams * g2 + p
        p_pred = p + h * dp1
        g2_pred = g2 + h * dg1
        dp2 = -lams * p_pred + amps * w0[i + 1]
        dg2 = -lams * g2_pred + p_pred
        p = p + 0.5 * h * (dp1 + dp2)
        g2 = g2 + 0.5 * h * (dg1 + dg2)
        out[i + 1] = g2
    return out.sum(axis=1)


def ydgs_weights(kernel: MemoryKernel, grid: np.ndarray,
                 mode: Literal["coherent", "quadrature"] = "coherent") -> YdgsWeights:
    """Weight functions of the first-order post-Markovian (YDGS) closure.

    w0(t) = int_0^t kernel, w1(t) = int_0^t kernel(tau) tau dtau (closed
    forms), and w2(t) = int_0^t kernel(t-s)(t-s) w0(s) ds via the auxiliary
    ODE pair, using the approximation F(s) ~ w0(s) L inside the convolution.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("ydgs_weights needs a 1-D grid with at least 2 points")
    steps = np.diff(grid)
    if grid[0] != 0.0 or np.max(np.abs(steps - steps[0])) > 1e-9 * max(steps[0], 1e-30):
        raise ValueError("ydgs_weights requires a uniform grid starting at 0")

    if mode == "coherent":
        amps, lams = kernel.amplitudes.astype(complex), kernel.lams
    elif mode == "quadrature":
        kernel.require_quadrature()
        # beta_j = Re[A_j e^{-lam_j tau}] splits into conjugate half-components.
        amps = np.concatenate([0.5 * kernel.amplitudes, 0.5 * kernel.amplitudes]).astype(complex)
        lams = np.concatenate([kernel.lams, np.conj(kernel.lams)])
    else:
        raise ValueError(f"unknown mode {mode!r}")

    expf = np.exp(-np.multiply.outer(grid, lams))
    w0 = (amps * (1.0 - expf) / lams).sum(axis=1)
    w1 = (amps * (1.0 - expf * (1.0 + np.multiply.outer(grid, lams))) / lams**2).sum(axis=1)
    w2 = _g2_ode(amps, lams, grid, w0)
    if mode == "quadrature":
        w0, w1, w2 = w0.real, w1.real, w2.real
    return YdgsWeights(grid=grid, w0=w0, w1=w1, w2=w2, mode=mode)
