"""Trajectory ensembles: reproducible statistics and comparison metrics.

The ensemble mean of recorded projectors estimates rho_red(t); Bloch
components are estimated per trajectory as b_i = Tr[P sigma_i] (for the
linear variant P is the raw unnormalized projector, whose ostensible mean
is still rho_red) with stderr the sample standard deviation over
trajectories divided by sqrt(N).

Merging partial results must be associative down to the bit: float addition
is not, so determinism is structural.  Trajectory indices are partitioned
into fixed global chunks of 256; raw per-trajectory statistics are held
until a chunk is complete and then reduced strictly in ascending index
order; finalize combines chunk sums strictly in ascending chunk order.  Any
split of the index range over batches, processes, or merge() calls then
reproduces the identical floating-point result.

Workers: batches go to a process pool when more than one worker is
requested (NMSSE_WORKERS env var or argument); each batch rebuilds its
inputs from picklable specs, and per-trajectory RNG streams are keyed by
(seed, index), so scheduling cannot affect results.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import EnsembleFailureError, GridMismatchError
from .kernel import MemoryKernel
from .linalg import SystemModel
from .sse import BatchResult, StepperConfig, run_batch

CHUNK = 256
DEFAULT_BATCH = 2048  # multiple of CHUNK so batches only split the last chunk

WORKERS_ENV = "NMSSE_WORKERS"


@dataclass
class _ChunkSums:
    n: int
    n_failed: int
    bloch: np.ndarray        # (T, 3)
    bloch_sq: np.ndarray     # (T, 3)
    proj: np.ndarray         # (T, d, d)
    drift_sum: float
    drift_max: float


def _reduce_raw(raw: dict[int, tuple]) -> _ChunkSums:
    """Fold per-trajectory stats in ascending index order."""
    first = raw[min(raw)]
    bloch = np.zeros_like(first[0])
    bloch_sq = np.zeros_like(first[0])
    proj = np.zeros_like(first[1])
    n = n_failed = 0
    drift_sum, drift_max = 0.0, 0.0
    for idx in sorted(raw):
        b, p, drift, failed = raw[idx]
        if failed:
            n_failed += 1
            continue
        bloch = bloch + b
        bloch_sq = bloch_sq + b * b
        proj = proj + p
        drift_sum += drift
        drift_max = max(drift_max, drift)
        n += 1
    return _ChunkSums(n, n_failed, bloch, bloch_sq, proj, drift_sum, drift_max)


def _add_sums(total: _ChunkSums, part: _ChunkSums) -> _ChunkSums:
    return _ChunkSums(total.n + part.n, total.n_failed + part.n_failed,
                      total.bloch + part.bloch, total.bloch_sq + part.bloch_sq,
                      total.proj + part.proj,
                      total.drift_sum + part.drift_sum,
                      max(total.drift_max, part.drift_max))


@dataclass
class EnsembleAccumulator:
    """Mergeable, order-independent collection of trajectory statistics."""

    times: np.ndarray
    complete: dict[int, _ChunkSums] = field(default_factory=dict)
    partial: dict[int, dict[int, tuple]] = field(default_factory=dict)

    def add_batch(self, indices: np.ndarray, batch: BatchResult) -> None:
        if batch.bloch is None:
            raise ValueError("ensemble statistics require qubit runs (d=2)")
        for row, idx in enumerate(indices):
            cid = int(idx) // CHUNK
            self.partial.setdefault(cid, {})[int(idx)] = (
                batch.bloch[row].copy(), batch.projectors[row].copy(),
                float(batch.norm_drift[row]), bool(batch.failed[row]))
        self._promote()

    def _promote(self) -> None:
        for cid in [c for c, raw in self.partial.items() if len(raw) == CHUNK]:
            self.complete[cid] = _reduce_raw(self.partial.pop(cid))

    def merge(self, other: "EnsembleAccumulator") -> "EnsembleAccumulator":
        if self.times.shape != other.times.shape or np.any(self.times != other.times):
            raise GridMismatchError("cannot merge ensembles on different grids")
        if set(self.complete) & set(other.complete):
            raise ValueError("overlapping trajectory chunks")
        out = EnsembleAccumulator(self.times, {**self.complete, **other.complete})
        for src in (self.partial, other.partial):
            for cid, raw in src.items():
                mine = out.partial.setdefault(cid, {})
                if cid in out.complete or set(mine) & set(raw):
                    raise ValueError(f"overlapping trajectory indices in chunk {cid}")
                mine.update(raw)
        out._promote()
        return out

    def totals(self) -> _ChunkSums:
        total: _ChunkSums | None = None
        for cid in sorted(self.complete):
            total = self.complete[cid] if total is None else _add_sums(total, self.complete[cid])
        for cid in sorted(self.partial):
            part = _reduce_raw(self.partial[cid])
            total = part if total is None else _add_sums(total, part)
        if total is None:
            raise ValueError("empty ensemble")
        return total


@dataclass
class EnsembleResult:
    times: np.ndarray
    mean_bloch: np.ndarray       # (T, 3)
    stderr: np.ndarray           # (T, 3)
    n_completed: int
    n_failed: int
    mean_density: np.ndarray     # (T, d, d)
    norm_drift_max: float
    norm_drift_mean: float
    runtime: float
    accumulator: EnsembleAccumulator


@dataclass
class ComparisonMetrics:
    times: np.ndarray
    diffs: np.ndarray            # (T, 3) a - b
    time_avg_l1: float           # mean over grid of |dx|+|dy|+|dz|
    sup_norm: float              # max over (t, component)
    runtime: float


def finalize(acc: EnsembleAccumulator, runtime: float = 0.0,
             max_failed_fraction: float = 1e-3) -> EnsembleResult:
    tot = acc.totals()
    n, nf = tot.n, tot.n_failed
    if n == 0 or nf > max_failed_fraction * (n + nf):
        raise EnsembleFailureError(
            f"{nf} of {n + nf} trajectories failed (budget "
            f"{max_failed_fraction:.1%}); inspect kernel/stepper settings")
    mean = tot.bloch / n
    if n > 1:
        var = np.maximum(tot.bloch_sq - n * mean * mean, 0.0) / (n - 1)
        stderr = np.sqrt(var / n)
    else:
        stderr = np.zeros_like(mean)
    return EnsembleResult(
        times=acc.times, mean_bloch=mean, stderr=stderr, n_completed=n,
        n_failed=nf, mean_density=tot.proj / n,
        norm_drift_max=tot.drift_max, norm_drift_mean=tot.drift_sum / n,
        runtime=runtime, accumulator=acc)


def merge(a: EnsembleResult, b: EnsembleResult) -> EnsembleResult:
    """Combine results of disjoint index ranges; bitwise equal to one run."""
    return finalize(a.accumulator.merge(b.accumulator),
                    runtime=a.runtime + b.runtime)


def _worker_count(workers: int | None) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return 1


_WORKER_CTX: dict = {}

def _init_worker(payload):
    _WORKER_CTX["payload"] = payload

def _run_span(span):
    model, kernel, provider, stepper, variant, unravelling, seed, initial = \
        _WORKER_CTX["payload"]
    start, stop = span
    indices = np.arange(start, stop)
    batch = run_batch(model, kernel, provider, stepper, seed, indices,
                      initial, variant=variant, unravelling=unravelling)
    return indices, batch


def run_ensemble(model: SystemModel, kernel: MemoryKernel, provider,
                 stepper: StepperConfig, seed: int, n_traj: int,
                 initial: np.ndarray, variant: str = "nonlinear",
                 unravelling: str = "coherent", index_start: int = 0,
                 workers: int | None = None,
                 batch_size: int = DEFAULT_BATCH) -> EnsembleResult:
    """Run trajectories (seed, index_start .. index_start+n_traj-1) and reduce.

    ``batch_size`` only controls vectorization granularity; results are
    independent of it (and of worker count) down to the bit.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    if batch_size < 2:
        raise ValueError("batch_size must be >= 2")
    t0 = time.perf_counter()
    acc = EnsembleAccumulator(times=stepper.record_times())
    spans = [(s, min(s + batch_size, index_start + n_traj))
             for s in range(index_start, index_start + n_traj, batch_size)]
    if len(spans) > 1 and spans[-1][1] - spans[-1][0] == 1:
        # single-row batches hit a different matmul microkernel and can be
        # off by an ulp; absorb the straggler so partitioning stays invisible
        spans[-2:] = [(spans[-2][0], spans[-1][1])]
    payload = (model, kernel, provider, stepper, variant, unravelling,
               seed, np.asarray(initial, dtype=complex))

    n_workers = min(_worker_count(workers), len(spans))
    if n_workers <= 1:
        _init_worker(payload)
        for span in spans:
            acc.add_batch(*_run_span(span))
    else:
        with ProcessPoolExecutor(max_workers=n_workers,
                                 initializer=_init_worker,
                                 initargs=(payload,)) as pool:
            for indices, batch in pool.map(_run_span, spans):
                acc.add_batch(indices, batch)

    return finalize(acc, runtime=time.perf_counter() - t0)


def compare(times_a: np.ndarray, bloch_a: np.ndarray,
            times_b: np.ndarray, bloch_b: np.ndarray) -> ComparisonMetrics:
    """Pointwise Bloch differences a - b plus scalar aggregates."""
    t0 = time.perf_counter()
    times_a = np.asarray(times_a, dtype=float)
    times_b = np.asarray(times_b, dtype=float)
    if times_a.shape != times_b.shape or np.max(np.abs(times_a - times_b),
                                                initial=0.0) > 1e-9:
        raise GridMismatchError(
            f"time grids differ (lengths {times_a.size} vs {times_b.size}); "
            "refusing to resample")
    diffs = np.asarray(bloch_a, dtype=float) - np.asarray(bloch_b, dtype=float)
    return ComparisonMetrics(
        times=times_a, diffs=diffs,
        time_avg_l1=float(np.abs(diffs).sum(axis=1).mean()),
        sup_norm=float(np.max(np.abs(diffs))),
        runtime=time.perf_counter() - t0)
