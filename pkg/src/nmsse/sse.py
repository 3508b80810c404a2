"""Trajectory integration of the linear and actual non-Markovian SSEs.

Two variants per unravelling:

  linear (ostensible):   d psi~ = [-iH + zeta_L(t) L - O F(t)] psi~
  nonlinear (actual):    d psi  = [-iH - (O - <O>) F(t) + <(O - <O>) F(t)>
                                   + zeta(t) (L - <L>)] psi

with O = L^dagger, zeta = z* (coherent) and O = L_x, zeta = z (quadrature).
The linear variant integrates the unnormalized state under the ostensible
noise z_Lambda and its ensemble of raw projectors averages to rho_red; the
nonlinear variant adds the Girsanov shift to the noise, renormalizes after
every step (recording the pre-normalization drift |1 - ||psi||| as a stepper
diagnostic) and averages normalized projectors.

Joint state per trajectory: ket, Girsanov accumulators M_j (nonlinear only)
and the provider's evolved functional families, advanced together by Heun
(default) or RK4.  The ostensible noise is sampled by the exact OU update
once per dt and held constant across scheme stages; expectations inside the
drift are recomputed at every stage from the current (normalized) state,
which keeps the exact flow norm-preserving, while the Girsanov source
expectation is frozen at (sub)step start, matching the explicit coupling of
the stepper.

``substeps`` subdivides the integrator step while keeping the noise
realization on the dt grid fixed — the self-convergence guard: comparing
substeps=1 against substeps=2 for the same (seed, index) isolates integrator
truncation error from noise sampling.

Everything is batched over trajectories (arrays lead with a B axis); the
math is elementwise-independent across B, so any batch split yields
identical per-trajectory results.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import TrajectoryFailureError
from .kernel import MemoryKernel, ydgs_weights
from .linalg import SystemModel
from .noise import (RngStreamSpec, complex_normals, decay_factors, emit,
                    girsanov_rhs, increment_std, shift_value, stationary_std)

NORM_UNDERFLOW = 1e-12
_NOISE_CHUNK = 2048  # steps of pre-drawn increments held in memory per batch

Variant = Literal["linear", "nonlinear"]


@dataclass(frozen=True)
class StepperConfig:
    t_final: float
    dt: float = 1e-3
    scheme: Literal["heun", "rk4"] = "heun"
    record_stride: int = 1
    substeps: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.t_final < 0:
            raise ValueError("t_final must be >= 0")
        if self.record_stride < 1 or self.substeps < 1:
            raise ValueError("record_stride and substeps must be >= 1")
        if self.scheme not in ("heun", "rk4"):
            raise ValueError(f"unknown scheme {self.scheme!r}")

    @property
    def n_steps(self) -> int:
        n = int(round(self.t_final / self.dt))
        if abs(n * self.dt - self.t_final) > 1e-9 * max(1.0, self.t_final):
            raise ValueError("t_final must be an integer multiple of dt")
        return n

    def record_times(self) -> np.ndarray:
        idx = np.arange(0, self.n_steps + 1, self.record_stride)
        return idx * self.dt


@dataclass
class TrajectoryState:
    """Single-trajectory snapshot (final state of a run)."""
    t: float
    psi: np.ndarray
    levels: list[np.ndarray]
    noise_w: np.ndarray
    shift_m: np.ndarray
    norm_drift: float


@dataclass
class BatchResult:
    times: np.ndarray            # (T,)
    projectors: np.ndarray       # (B, T, d, d)
    bloch: np.ndarray | None     # (B, T, 3) for qubits, else None
    norm_drift: np.ndarray       # (B,) max pre-normalization drift
    failed: np.ndarray           # (B,) bool
    fail_time: np.ndarray        # (B,) time of failure or nan
    final_psi: np.ndarray = None          # (B, d)
    final_w: np.ndarray = None            # (B, J)
    final_m: np.ndarray = None            # (B, J)
    final_levels: list = None


@dataclass
class TrajectoryResult:
    times: np.ndarray
    projectors: np.ndarray       # (T, d, d)
    bloch: np.ndarray | None     # (T, 3)
    norm_drift: float
    final: TrajectoryState


def drift_nonlinear(psi: np.ndarray, fhat: np.ndarray, zeta,
                    model: SystemModel, unravelling: str) -> np.ndarray:
    """Actual-SSE ket derivative; ``zeta`` is z* (coherent) or real z (quadrature).

    Expectations are taken against the normalized state, so the exact flow
    conserves the norm for any input ket: Re<psi|d psi> = 0 identically.
    """
    L, H = model.coupling, model.h_int
    O = model.coupling_dag if unravelling == "coherent" else model.coupling_x
    n2 = (psi.conj() * psi).sum(axis=-1).real
    lpsi = psi @ L.T
    fpsi = np.einsum("bij,bj->bi", fhat, psi)
    ofpsi = fpsi @ O.T
    e_l = (psi.conj() * lpsi).sum(axis=-1) / n2
    e_o = np.conj(e_l) if unravelling == "coherent" else 2.0 * e_l.real
    e_of = (psi.conj() * ofpsi).sum(axis=-1) / n2
    e_f = (psi.conj() * fpsi).sum(axis=-1) / n2
    mean_term = e_of - e_o * e_f
    zeta = np.asarray(zeta)
    return (-1j * (psi @ H.T)
            - ofpsi
            + e_o[:, None] * fpsi
            + mean_term[:, None] * psi
            + zeta[:, None] * (lpsi - e_l[:, None] * psi))


def drift_linear(psi: np.ndarray, fhat: np.ndarray, zeta,
                 model: SystemModel, unravelling: str) -> np.ndarray:
    """Linear-SSE ket derivative under ostensible noise (no expectations)."""
    L, H = model.coupling, model.h_int
    O = model.coupling_dag if unravelling == "coherent" else model.coupling_x
    zeta = np.asarray(zeta)
    ofpsi = np.einsum("bij,bj->bi", fhat, psi) @ O.T
    return -1j * (psi @ H.T) + zeta[:, None] * (psi @ L.T) - ofpsi


def _heun(rhs, t, h, y):
    k1 = rhs(t, y)
    k2 = rhs(t + h, [a + h * b for a, b in zip(y, k1)])
    return [a + 0.5 * h * (b + c) for a, b, c in zip(y, k1, k2)]


def _rk4(rhs, t, h, y):
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * h, [a + 0.5 * h * b for a, b in zip(y, k1)])
    k3 = rhs(t + 0.5 * h, [a + 0.5 * h * b for a, b in zip(y, k2)])
    k4 = rhs(t + h, [a + h * b for a, b in zip(y, k3)])
    return [a + (h / 6.0) * (b + 2 * c + 2 * d + e)
            for a, b, c, d, e in zip(y, k1, k2, k3, k4)]

_STEPPERS = {"heun": _heun, "rk4": _rk4}


def _bloch_of(psi: np.ndarray) -> np.ndarray:
    """(x, y, z) raw components of |psi><psi| for qubit kets (..., 2)."""
    ab = psi[..., 0] * psi[..., 1].conj()
    return np.stack([2.0 * ab.real, -2.0 * ab.imag,
                     (psi[..., 0].conj() * psi[..., 0]).real
                     - (psi[..., 1].conj() * psi[..., 1]).real], axis=-1)


def ydgs_provider_for(model: SystemModel, kernel: MemoryKernel,
                      unravelling: str, stepper: StepperConfig):
    """Post-Markovian provider with weights on this stepper's stage grid."""
    from .functionals import YdgsProvider
    h = stepper.dt / stepper.substeps
    n = 2 * stepper.n_steps * stepper.substeps
    grid = np.arange(max(n, 2) + 1) * (0.5 * h)
    return YdgsProvider(model, ydgs_weights(kernel, grid, mode=unravelling))


def run_batch(model: SystemModel, kernel: MemoryKernel, provider,
              stepper: StepperConfig, master_seed: int,
              indices: np.ndarray, initial: np.ndarray,
              variant: Variant = "nonlinear",
              unravelling: str = "coherent") -> BatchResult:
    """Advance a batch of trajectories with streams (master_seed, index)."""
    if variant not in ("linear", "nonlinear"):
        raise ValueError(f"unknown variant {variant!r}")
    indices = np.asarray(indices, dtype=int)
    b, d, j = len(indices), model.dim, kernel.n_components
    n_steps, stride = stepper.n_steps, stepper.record_stride
    h = stepper.dt / stepper.substeps
    step_fn = _STEPPERS[stepper.scheme]
    nonlinear = variant == "nonlinear"

    psi0 = np.asarray(initial, dtype=complex)
    psi0 = psi0 / np.linalg.norm(psi0)
    psi = np.tile(psi0, (b, 1))

    gens = [RngStreamSpec(master_seed, int(i)).generator() for i in indices]
    s_std = stationary_std(kernel, unravelling)
    w = np.stack([s_std * complex_normals(g, (j,)) for g in gens])
    decay = decay_factors(kernel, stepper.dt)
    inc_std = increment_std(kernel, stepper.dt, unravelling)

    m = np.zeros((b, j), dtype=complex)
    levels = provider.initial(b)
    amps, lams = kernel.amplitudes, kernel.lams
    coh = unravelling == "coherent"
    drift_fn = drift_nonlinear if nonlinear else drift_linear

    rec_idx = 0
    n_records = n_steps // stride + 1
    times = np.arange(0, n_steps + 1, stride) * stepper.dt
    projectors = np.empty((b, n_records, d, d), dtype=complex)
    bloch = np.empty((b, n_records, 3)) if d == 2 else None
    norm_drift = np.zeros(b)
    failed = np.zeros(b, dtype=bool)
    fail_time = np.full(b, np.nan)

    def record(step_psi):
        nonlocal rec_idx
        projectors[:, rec_idx] = np.einsum("bi,bj->bij", step_psi, step_psi.conj())
        if bloch is not None:
            bloch[:, rec_idx] = _bloch_of(step_psi)
        rec_idx += 1

    record(psi)

    chunk_draws = None
    chunk_base = 0

    # Blow-ups are detected on norms and freeze the trajectory; the inf/nan
    # transients of the blow-up step itself are expected, not reportable.
    err_prev = np.seterr(over="ignore", invalid="ignore")
    for step in range(n_steps):
        if chunk_draws is None or step - chunk_base >= chunk_draws.shape[1]:
            chunk_base = step
            n_chunk = min(_NOISE_CHUNK, n_steps - step)
            chunk_draws = np.stack(
                [complex_normals(g, (n_chunk, j)) for g in gens])

        z_ost = emit(w, unravelling)                     # frozen over this dt
        for ss in range(stepper.substeps):
            t_sub = step * stepper.dt + ss * h
            if nonlinear:
                n2 = (psi.conj() * psi).sum(axis=-1).real
                e_l = (psi.conj() * (psi @ model.coupling.T)).sum(axis=-1) / n2
                e_src = e_l if coh else 2.0 * e_l.real   # frozen over substep

                def rhs(tt, y):
                    psi_, m_ = y[0], y[1]
                    z = z_ost + shift_value(m_, unravelling)
                    zeta = np.conj(z) if coh else z
                    fhat = provider.drift(tt, y[2:], b)
                    dpsi = drift_fn(psi_, fhat, zeta, model, unravelling)
                    dm = girsanov_rhs(m_, e_src, amps, lams)
                    return [dpsi, dm] + provider.rhs(tt, y[2:], zeta)

                state = [psi, m] + levels
            else:

                def rhs(tt, y):
                    zeta = np.conj(z_ost) if coh else z_ost
                    fhat = provider.drift(tt, y[1:], b)
                    dpsi = drift_fn(y[0], fhat, zeta, model, unravelling)
                    return [dpsi] + provider.rhs(tt, y[1:], zeta)

                state = [psi] + levels

            new = step_fn(rhs, t_sub, h, state)

            if nonlinear:
                new_psi, new_m, new_levels = new[0], new[1], new[2:]
                norms = np.sqrt((new_psi.conj() * new_psi).sum(axis=-1).real)
                ok = ~failed
                # underflow or blow-up (inf/nan) both abort the trajectory
                bad = (norms < NORM_UNDERFLOW) | ~np.isfinite(norms)
                newly = ok & bad
                np.maximum(norm_drift, np.abs(1.0 - norms), out=norm_drift,
                           where=ok & ~bad)
                if np.any(newly):
                    failed |= newly
                    fail_time[newly] = t_sub + h
                live = ~failed
                norms = np.where(bad, 1.0, norms)
                psi = np.where(live[:, None], new_psi / norms[:, None], psi)
                m = np.where(live[:, None], new_m, m)
                levels = [np.where(live.reshape((-1,) + (1,) * (lv.ndim - 1)),
                                   nlv, lv)
                          for lv, nlv in zip(levels, new_levels)]
            else:
                psi, levels = new[0], new[1:]

        w = w * decay + inc_std * chunk_draws[:, step - chunk_base]
        if (step + 1) % stride == 0:
            record(psi)
    np.seterr(**err_prev)

    return BatchResult(times=times, projectors=projectors, bloch=bloch,
                       norm_drift=norm_drift, failed=failed,
                       fail_time=fail_time, final_psi=psi, final_w=w,
                       final_m=m, final_levels=levels)


def run_trajectory(model: SystemModel, kernel: MemoryKernel, provider,
                   stepper: StepperConfig, rng: RngStreamSpec,
                   initial: np.ndarray, variant: Variant = "nonlinear",
                   unravelling: str = "coherent",
                   raise_on_failure: bool = True) -> TrajectoryResult:
    """Single-trajectory convenience wrapper around the batched engine."""
    res = run_batch(model, kernel, provider, stepper, rng.master_seed,
                    np.array([rng.trajectory_index]), initial,
                    variant=variant, unravelling=unravelling)
    if raise_on_failure and res.failed[0]:
        raise TrajectoryFailureError(
            f"trajectory {rng.trajectory_index} norm underflow or blow-up",
            t=float(res.fail_time[0]))
    final = TrajectoryState(
        t=float(res.times[-1]), psi=res.final_psi[0],
        levels=[lv[0] for lv in res.final_levels],
        noise_w=res.final_w[0], shift_m=res.final_m[0],
        norm_drift=float(res.norm_drift[0]))
    return TrajectoryResult(times=res.times, projectors=res.projectors[0],
                            bloch=None if res.bloch is None else res.bloch[0],
                            norm_drift=float(res.norm_drift[0]), final=final)
