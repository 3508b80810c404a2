"""Enlarged-system reference solver and the Markovian Lindblad baseline.

An exponential-sum memory kernel is exactly reproduced by coupling the
system to J damped fictitious oscillators (one per kernel component) and
evolving the enlarged state W under a *Markovian* master equation,

    dW/dt = [ -i H_int + sum_j G_j (L c_j^dag e^{i Omega_j t}
                                    - L^dag c_j e^{-i Omega_j t}), W ]
            + sum_j kappa_j D[c_j] W,

with coupling G_j = sqrt(A_j) and D[c]W = c W c^dag - {c^dag c, W}/2.  The
fictitious modes start in vacuum (zero-temperature bath) and are traced out
at record times to give rho_red.  With sufficient Fock truncation this is
numerically exact, which makes it the reference everything else is compared
against.

Fixed-step RK4 on the dense D x D density matrix; the right-hand side is
applied as matrix products (no superoperator is materialized), so the
default cap D <= 4096 stays cheap.  Truncation quality is monitored via the
total population of the top Fock level of each mode at record times.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .errors import TruncationError
from .kernel import MemoryKernel, alpha_eval
from .linalg import MAX_COMPOSITE_DIM, SystemModel, dag, kron
from .sse import StepperConfig

TOP_FOCK_TOL = 1e-6


def coupling_params(kernel: MemoryKernel):
    """(G_j, kappa_j, Omega_j) wiring of kernel components into mode couplings."""
    return np.sqrt(kernel.amplitudes), kernel.kappas, kernel.omegas


def kernel_identity_check(kernel: MemoryKernel, t_grid: np.ndarray) -> float:
    """Max |alpha rebuilt from mode couplings - alpha_eval| over the grid.

    Guards the G_j = sqrt(A_j) convention between kernel and enlarged model.
    """
    gs, kappas, omegas = coupling_params(kernel)
    t_grid = np.asarray(t_grid, dtype=float)
    rebuilt = np.einsum(
        "j,...j->...",
        (gs**2).astype(complex),
        np.exp(-np.multiply.outer(t_grid, 0.5 * kappas + 1j * omegas)),
    )
    return float(np.max(np.abs(rebuilt - alpha_eval(kernel, t_grid))))


def _annihilation(n_levels: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_levels, dtype=float)), k=1).astype(complex)


@dataclass
class EnlargedSpace:
    """System plus truncated fictitious modes with embedded operators."""

    model: SystemModel
    kernel: MemoryKernel
    n_max: int | tuple[int, ...] = 20
    cap: int = MAX_COMPOSITE_DIM

    # filled in __post_init__
    dim: int = field(init=False)
    n_max_per_mode: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        j = self.kernel.n_components
        if isinstance(self.n_max, int):
            self.n_max_per_mode = (self.n_max,) * j
        else:
            self.n_max_per_mode = tuple(self.n_max)
        if len(self.n_max_per_mode) != j or any(n < 1 for n in self.n_max_per_mode):
            raise ValueError("need one n_max >= 1 per kernel component")

        d = self.model.dim
        mode_dims = [n + 1 for n in self.n_max_per_mode]
        eyes = [np.eye(m, dtype=complex) for m in mode_dims]

        def embed_mode(k: int, op: np.ndarray) -> np.ndarray:
            factors = [eyes[i] if i != k else op for i in range(j)]
            return reduce(lambda a, b: kron(a, b, cap=self.cap), factors)

        mode_eye = reduce(lambda a, b: kron(a, b, cap=self.cap), eyes)
        self.dim = d * mode_eye.shape[0]
        if self.dim > self.cap:
            kron(np.eye(d), mode_eye, cap=self.cap)  # raises CapacityError

        self.l_emb = kron(self.model.coupling, mode_eye, cap=self.cap)
        self.h_emb = kron(self.model.h_int, mode_eye, cap=self.cap)
        sys_eye = np.eye(d, dtype=complex)
        self.c = [kron(sys_eye, embed_mode(k, _annihilation(mode_dims[k])),
                       cap=self.cap) for k in range(j)]
        self.c_dag = [dag(c) for c in self.c]
        self.c_dag_c = [cd @ c for c, cd in zip(self.c, self.c_dag)]

        gs, kappas, omegas = coupling_params(self.kernel)
        self.gs, self.kappas, self.omegas = gs, kappas, omegas
        # interaction pieces L c_j^dag and their adjoints
        self._p = [self.l_emb @ cd for cd in self.c_dag]
        self._p_dag = [dag(p) for p in self._p]
        self._x_static = -1j * self.h_emb
        self._static = bool(np.all(omegas == 0.0))
        if self._static:
            for g, p, pd in zip(gs, self._p, self._p_dag):
                self._x_static = self._x_static + g * (p - pd)

    def x_op(self, t: float) -> np.ndarray:
        """Anti-Hermitian generator of the commutator part at time t."""
        if self._static:
            return self._x_static
        x = self._x_static
        for g, om, p, pd in zip(self.gs, self.omegas, self._p, self._p_dag):
            ph = np.exp(1j * om * t)
            x = x + g * (ph * p - np.conj(ph) * pd)
        return x

    def initial_state(self, system_ket: np.ndarray) -> np.ndarray:
        """(|psi><psi|) (x) |vacuum><vacuum| on the enlarged space."""
        ket = np.asarray(system_ket, dtype=complex)
        ket = ket / np.linalg.norm(ket)
        mode_vac = np.zeros(self.dim // self.model.dim, dtype=complex)
        mode_vac[0] = 1.0
        full = np.kron(ket, mode_vac)
        return np.outer(full, full.conj())

    def partial_trace(self, w: np.ndarray) -> np.ndarray:
        d = self.model.dim
        m = self.dim // d
        return np.einsum("imjm->ij", w.reshape(d, m, d, m))

    def top_fock_population(self, w: np.ndarray) -> float:
        """Largest total population sitting in any mode's top Fock level."""
        d = self.model.dim
        diag = np.real(np.diagonal(w)).reshape((d, *[n + 1 for n in self.n_max_per_mode]))
        pops = []
        for k, n in enumerate(self.n_max_per_mode):
            pops.append(float(np.take(diag, n, axis=1 + k).sum()))
        return max(pops)


def lindblad_rhs(w: np.ndarray, space: EnlargedSpace, t: float) -> np.ndarray:
    """dW/dt of the enlarged-system master equation."""
    x = space.x_op(t)
    dw = x @ w - w @ x
    for kappa, c, cd, cdc in zip(space.kappas, space.c, space.c_dag,
                                 space.c_dag_c):
        dw = dw + kappa * (c @ w @ cd - 0.5 * (cdc @ w + w @ cdc))
    return dw


def _rk4_density(rhs, w: np.ndarray, t: float, h: float) -> np.ndarray:
    k1 = rhs(w, t)
    k2 = rhs(w + 0.5 * h * k1, t + 0.5 * h)
    k3 = rhs(w + 0.5 * h * k2, t + 0.5 * h)
    k4 = rhs(w + h * k3, t + h)
    return w + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def evolve_enlarged(space: EnlargedSpace, initial_system_ket: np.ndarray,
                    stepper: StepperConfig) -> tuple[np.ndarray, np.ndarray]:
    """Integrate the enlarged master equation; returns (times, rho_red series).

    RK4 fixed step; the top-Fock population is checked at every record time
    and a TruncationError with a suggested n_max is raised on leakage.
    """
    w = space.initial_state(initial_system_ket)
    n_steps, stride = stepper.n_steps, stepper.record_stride
    times = stepper.record_times()
    d = space.model.dim
    rhos = np.empty((times.size, d, d), dtype=complex)

    def check_and_record(idx: int, t_now: float):
        pop = space.top_fock_population(w)
        if pop > TOP_FOCK_TOL:
            raise TruncationError(
                f"top Fock population {pop:.2e} at t={t_now:.3f} exceeds "
                f"{TOP_FOCK_TOL:.0e}; raise n_max",
                suggested_nmax=max(space.n_max_per_mode) + 10)
        rhos[idx] = space.partial_trace(w)

    check_and_record(0, 0.0)
    rec = 1
    rhs = lambda ww, tt: lindblad_rhs(ww, space, tt)
    for step in range(n_steps):
        w = _rk4_density(rhs, w, step * stepper.dt, stepper.dt)
        if (step + 1) % stride == 0:
            check_and_record(rec, (step + 1) * stepper.dt)
            rec += 1
    return times, rhos


def lindblad_reference_markov(model: SystemModel, gamma_total: float,
                              initial_ket: np.ndarray,
                              stepper: StepperConfig) -> tuple[np.ndarray, np.ndarray]:
    """Markovian reference d rho = -i[H, rho] + gamma D[L] rho from a pure state."""
    ket = np.asarray(initial_ket, dtype=complex)
    ket = ket / np.linalg.norm(ket)
    rho = np.outer(ket, ket.conj())
    L, H = model.coupling, model.h_int
    ld = dag(L)
    ldl = ld @ L

    def rhs(r, _t):
        return (-1j * (H @ r - r @ H)
                + gamma_total * (L @ r @ ld - 0.5 * (ldl @ r + r @ ldl)))

    n_steps, stride = stepper.n_steps, stepper.record_stride
    times = stepper.record_times()
    rhos = np.empty((times.size, model.dim, model.dim), dtype=complex)
    rhos[0] = rho
    rec = 1
    for step in range(n_steps):
        rho = _rk4_density(rhs, rho, step * stepper.dt, stepper.dt)
        if (step + 1) % stride == 0:
            rhos[rec] = rho
            rec += 1
    return times, rhos
