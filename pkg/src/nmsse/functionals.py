"""Drift-operator providers for the non-Markovian SSEs.

The memory integral in a diffusive non-Markovian SSE is carried by an
operator functional F(t) (coherent unravelling) or Q(t) (quadrature) that
replaces the functional derivative of the state with respect to the noise.
For exponential-sum kernels these operators obey a hierarchy of coupled
operator ODEs: the level-0 family F_j (one per kernel component) is sourced
by A_j L and coupled to a level-1 family F_{j,k}, which couples to level 2,
and so on.  Truncating at order n replaces the level-n functional by a
cumulative-kernel-weighted commutator of the level below:

    order 0:  F_j        := I0_j(t) L                (nothing evolved)
    order 1:  F_{j,k}    := I0_j(t) [L, F_k]         (level 0 evolved)
    order 2:  F_{j,k,l}  := I0_j(t) [L, F_{k,l}]     (levels 0 and 1 evolved)

with I0_j(t) = int_0^t alpha_j.  The quadrature hierarchy splits each level
into cos/sin branches because the real kernel beta mixes them under the time
derivative; its order-1 truncation closes all four (a.b) branch combinations,
of which only (cos.cos) and (sin.cos) enter the level-0 equations — the other
two are provided for completeness but are inert at this order.

Everything here works on batched arrays: level-0 families have shape
(B, J, d, d), level-1 (B, J, J, d, d), kets (B, d), with B the number of
trajectories advanced in lockstep.  Batching is pure vectorization — every
trajectory's arithmetic is elementwise-independent, so results are identical
for any batch split.

An alternative provider implements the first-order post-Markovian (YDGS,
Yu-Diosi-Gisin-Strunz) closure: a deterministic, noise-independent drift
operator built from the weight functions g0/g1/g2 (or h0/h1/h2), valid near
the Markov limit and used here as the comparison baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Literal

import numpy as np

from .errors import UnsupportedOrderError
from .kernel import MemoryKernel, YdgsWeights, beta_cumulative, cumulative_integral
from .linalg import SystemModel, commutator

MultiIndex = tuple[int, ...]

Unravelling = Literal["coherent", "quadrature"]

MAX_ORDER = {"coherent": 2, "quadrature": 1}


def multi_indices(n_components: int, level: int):
    """All multi-indices addressing level-``level`` functionals (length level+1)."""
    return product(range(n_components), repeat=level + 1)


def equation_count(dim: int, n_components: int, order: int) -> int:
    """Coupled complex ODEs for a coherent order-``order`` linear-SSE run.

    d^2 J (J^n - 1)/(J - 1) + d + J, taken as d^2 sum_{m=1..n} J^m + d + J
    so the J = 1 case is covered: hierarchy entries plus ket amplitudes plus
    noise components.
    """
    j = n_components
    hier = dim * dim * sum(j**m for m in range(1, order + 1))
    return hier + dim + j


def _zb(zeta, extra_axes: int):
    """Reshape per-trajectory noise (B,) or scalar for matrix broadcasting."""
    return np.asarray(zeta).reshape((-1,) + (1,) * extra_axes)


def coherent_hierarchy_rhs(levels: list[np.ndarray], model: SystemModel,
                           kernel: MemoryKernel, z_star, t: float,
                           order: int) -> list[np.ndarray]:
    """Time derivatives of the evolved coherent functionals.

    ``levels`` is [] (order 0), [F0] (order 1) or [F0, F1] (order 2) with
    F0: (B, J, d, d), F1: (B, J, J, d, d); ``z_star`` is the conjugated
    actual/ostensible noise, scalar or (B,).
    """
    if order == 0:
        return []
    L, Ld, H = model.coupling, model.coupling_dag, model.h_int
    amps, lams = kernel.amplitudes, kernel.lams
    i0 = cumulative_integral(kernel, t)

    f0 = levels[0]
    fhat = f0.sum(axis=1)
    g = Ld @ fhat
    zb = _zb(z_star, 3)
    core = (-lams[:, None, None] * f0
            - 1j * commutator(H, f0)
            + zb * commutator(L, f0)
            - (g[:, None] @ f0 - f0 @ g[:, None]))

    if order == 1:
        closure_sum = i0[:, None, None] * commutator(L, fhat)[:, None]
        return [amps[:, None, None] * L + core - Ld @ closure_sum]

    f1 = levels[1]
    s = f1.sum(axis=2)                      # s_j = sum_l F1_{j,l}
    df0 = amps[:, None, None] * L + core - Ld @ s

    lam_jk = (lams[:, None] + lams[None, :])[:, :, None, None]
    t_j = Ld @ s
    comm_lf0 = commutator(L, f0)
    closure2 = i0[:, None, None, None] * commutator(L, s)[:, None]   # I0_j [L, s_k]
    df1 = (amps[:, None, None, None] * comm_lf0[:, None]
           - lam_jk * f1
           - 1j * commutator(H, f1)
           + _zb(z_star, 4) * commutator(L, f1)
           - (t_j[:, :, None] @ f0[:, None] - f0[:, None] @ t_j[:, :, None])
           - (g[:, None, None] @ f1 - f1 @ g[:, None, None])
           - Ld @ closure2)
    return [df0, df1]


def quadrature_hierarchy_rhs(levels: list[np.ndarray], model: SystemModel,
                             kernel: MemoryKernel, z, t: float,
                             order: int) -> list[np.ndarray]:
    """Time derivatives of the evolved quadrature cos/sin functionals.

    ``levels`` is [] (order 0) or [Qcos, Qsin] (order 1), each (B, J, d, d);
    ``z`` is the real noise, scalar or (B,).
    """
    if order == 0:
        return []
    L, Lx, H = model.coupling, model.coupling_x, model.h_int
    amps = kernel.amplitudes
    half_k = (0.5 * kernel.kappas)[:, None, None]
    om = kernel.omegas[:, None, None]
    ic, isn = beta_cumulative(kernel, t)

    qc, qs = levels
    qhat = qc.sum(axis=1)
    g = Lx @ qhat
    zb = _zb(z, 3)

    def branch(q):
        return (-1j * commutator(H, q) + zb * commutator(L, q)
                - (g[:, None] @ q - q @ g[:, None]))

    comm_lqhat = commutator(L, qhat)[:, None]
    dqc = (amps[:, None, None] * L - half_k * qc - om * qs + branch(qc)
           - Lx @ (ic[:, None, None] * comm_lqhat))
    dqs = (-half_k * qs + om * qc + branch(qs)
           - Lx @ (isn[:, None, None] * comm_lqhat))
    return [dqc, dqs]


def quadrature_order1_closures(levels: list[np.ndarray], model: SystemModel,
                               kernel: MemoryKernel, t: float) -> dict:
    """All four order-1 truncation closures Q1_{j,k}^{(a.b)}, a,b in {cos,sin}.

    Q1_{j,k}^{(a.b)} = (int_0^t beta_j^a) [L, Q0_k^b]; only (cos.cos) and
    (sin.cos) feed the level-0 equations, the (., sin) pair is inert at this
    order and exposed for completeness.  Shapes (B, J, J, d, d), j then k.
    """
    qc, qs = levels
    ic, isn = beta_cumulative(kernel, t)
    weights = {"cos": ic, "sin": isn}
    comms = {"cos": commutator(model.coupling, qc),
             "sin": commutator(model.coupling, qs)}
    return {(a, b): weights[a][:, None, None, None] * comms[b][:, None]
            for a in ("cos", "sin") for b in ("cos", "sin")}


@dataclass
class PerturbativeProvider:
    """Hierarchy-truncation drift provider at a fixed order.

    Evolves the functional families alongside the trajectory and assembles
    the SSE drift operator F(t) = sum_j F_j (coherent) or Q(t) = sum_j
    Q_j^cos (quadrature); at order 0 nothing is evolved and the drift is the
    cumulative-integral-weighted coupling operator.
    """

    model: SystemModel
    kernel: MemoryKernel
    unravelling: Unravelling
    order: int

    def __post_init__(self):
        if self.order < 0 or self.order > MAX_ORDER[self.unravelling]:
            raise UnsupportedOrderError(
                f"order {self.order} unsupported for {self.unravelling} "
                f"(max {MAX_ORDER[self.unravelling]})")
        if self.unravelling == "quadrature":
            self.kernel.require_quadrature()
        # structural self-check: evolved entries match the closed-form count
        d, j = self.model.dim, self.kernel.n_components
        if self.unravelling == "coherent":
            expected = equation_count(d, j, self.order) - d - j
            assert self.hierarchy_entry_count() == expected

    def hierarchy_entry_count(self) -> int:
        """Complex entries evolved per trajectory for the functional families."""
        d, j = self.model.dim, self.kernel.n_components
        per_level = [d * d * len(list(multi_indices(j, m))) for m in range(self.order)]
        factor = 2 if self.unravelling == "quadrature" else 1
        return factor * sum(per_level)

    @property
    def n_levels(self) -> int:
        if self.unravelling == "quadrature":
            return 2 if self.order >= 1 else 0
        return self.order

    def initial(self, batch: int) -> list[np.ndarray]:
        """All functionals vanish at t = 0 (integral over an empty range)."""
        d, j = self.model.dim, self.kernel.n_components
        if self.unravelling == "quadrature":
            if self.order == 0:
                return []
            return [np.zeros((batch, j, d, d), dtype=complex) for _ in range(2)]
        shapes = [(batch, j, d, d), (batch, j, j, d, d)]
        return [np.zeros(shapes[m], dtype=complex) for m in range(self.order)]

    def drift(self, t: float, levels: list[np.ndarray], batch: int) -> np.ndarray:
        d = self.model.dim
        if self.order == 0:
            if self.unravelling == "coherent":
                w = cumulative_integral(self.kernel, t).sum()
            else:
                w = beta_cumulative(self.kernel, t)[0].sum()
            return np.broadcast_to(w * self.model.coupling, (batch, d, d))
        return levels[0].sum(axis=1)

    def rhs(self, t: float, levels: list[np.ndarray], zeta) -> list[np.ndarray]:
        if self.unravelling == "coherent":
            return coherent_hierarchy_rhs(levels, self.model, self.kernel,
                                          zeta, t, self.order)
        return quadrature_hierarchy_rhs(levels, self.model, self.kernel,
                                        zeta, t, self.order)


def ydgs_drift(model: SystemModel, weights: YdgsWeights, t: float) -> np.ndarray:
    """Post-Markovian first-order drift operator at grid time t.

    coherent:    F = g0 L - g1 i[H, L] - g2 [L+L, L]
    quadrature:  Q = h0 L - h1 i[H, L] - h2 [Lx L, L]
    """
    if weights.grid.size < 2:
        raise ValueError("weights grid too short")
    i = int(round(t / weights.dt))
    if not 0 <= i < weights.grid.size or abs(weights.grid[i] - t) > 1e-9:
        raise ValueError(f"t={t} not on the precomputed weights grid")
    w0, w1, w2 = weights.at_index(i)
    L, H = model.coupling, model.h_int
    meas = model.coupling_dag if weights.mode == "coherent" else model.coupling_x
    return (w0 * L
            - w1 * 1j * commutator(H, L)
            - w2 * commutator(meas @ L, L))


@dataclass
class YdgsProvider:
    """Deterministic post-Markovian drift provider (no evolved hierarchy)."""

    model: SystemModel
    weights: YdgsWeights
    n_levels: int = field(default=0, init=False)

    def initial(self, batch: int) -> list[np.ndarray]:
        return []

    def drift(self, t: float, levels: list[np.ndarray], batch: int) -> np.ndarray:
        d = self.model.dim
        return np.broadcast_to(ydgs_drift(self.model, self.weights, t), (batch, d, d))

    def rhs(self, t: float, levels: list[np.ndarray], zeta) -> list[np.ndarray]:
        return []

    def hierarchy_entry_count(self) -> int:
        return 0
