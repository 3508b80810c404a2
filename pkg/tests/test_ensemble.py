"""Ensemble reduction: determinism, merging, failure budget, comparison."""

import numpy as np
from pytest import approx, raises

from nmsse.ensemble import (
    CHUNK,
    EnsembleAccumulator,
    compare,
    finalize,
    merge,
    run_ensemble,
)
from nmsse.errors import EnsembleFailureError, GridMismatchError
from nmsse.functionals import PerturbativeProvider
from nmsse.kernel import MemoryKernel
from nmsse.linalg import driven_tla, excited_ket
from nmsse.sse import BatchResult, StepperConfig, run_batch

MODEL = driven_tla(3.0, 5.0)
KERN = MemoryKernel.tla()
STEPPER = StepperConfig(t_final=0.5, dt=1e-2, record_stride=10)


def _provider(order=1):
    return PerturbativeProvider(MODEL, KERN, "coherent", order)


def _run(n, seed=5, start=0, **kw):
    return run_ensemble(MODEL, KERN, _provider(), STEPPER, seed, n,
                        excited_ket(), index_start=start, **kw)


def _fake_batch(indices, times, fail=()):
    """Deterministic per-index statistics for accumulator unit tests."""
    b = len(indices)
    t = times.size
    bloch = np.array([[np.cos(i * 0.1), np.sin(i * 0.1), 1.0 / (1 + i)]
                      for i in indices])[:, None, :] * np.ones((1, t, 1))
    proj = np.zeros((b, t, 2, 2), dtype=complex)
    proj[..., 0, 0] = 1.0
    return BatchResult(
        times=times, projectors=proj, bloch=bloch,
        norm_drift=np.asarray(indices, dtype=float) * 1e-6,
        failed=np.isin(indices, fail),
        fail_time=np.where(np.isin(indices, fail), 0.1, np.nan))


# ---------------------------------------------------------------------------
# accumulator mechanics


def test_chunk_promotion_and_totals():
    times = np.arange(3.0)
    acc = EnsembleAccumulator(times=times)
    lo = np.arange(0, 100)
    hi = np.arange(100, CHUNK)
    acc.add_batch(hi, _fake_batch(hi, times))
    assert acc.partial and not acc.complete
    acc.add_batch(lo, _fake_batch(lo, times))
    assert acc.complete and not acc.partial  # chunk 0 complete, reduced
    tot = acc.totals()
    assert tot.n == CHUNK
    want = sum(np.cos(i * 0.1) for i in range(CHUNK))
    assert tot.bloch[0, 0] == approx(want)


def test_insertion_order_cannot_change_sums():
    times = np.arange(2.0)
    idx = np.arange(0, 400)  # one full chunk plus a partial one
    rng = np.random.default_rng(0)

    def build(order):
        acc = EnsembleAccumulator(times=times)
        for part in np.array_split(order, 7):
            acc.add_batch(part, _fake_batch(part, times))
        return acc.totals()

    a = build(idx)
    b = build(rng.permutation(idx))
    assert a.n == b.n == 400
    assert np.array_equal(a.bloch, b.bloch)  # bitwise, not just close
    assert np.array_equal(a.bloch_sq, b.bloch_sq)


def test_merge_is_bitwise_and_guards_overlap():
    times = np.arange(2.0)
    idx = np.arange(0, 300)

    whole = EnsembleAccumulator(times=times)
    whole.add_batch(idx, _fake_batch(idx, times))

    left = EnsembleAccumulator(times=times)
    right = EnsembleAccumulator(times=times)
    left.add_batch(idx[:137], _fake_batch(idx[:137], times))
    right.add_batch(idx[137:], _fake_batch(idx[137:], times))
    merged = left.merge(right)
    assert np.array_equal(merged.totals().bloch, whole.totals().bloch)

    with raises(ValueError):
        left.merge(left)
    other_grid = EnsembleAccumulator(times=np.arange(3.0))
    with raises(GridMismatchError):
        left.merge(other_grid)


def test_failed_trajectories_are_excluded_and_counted():
    times = np.arange(2.0)
    idx = np.arange(0, 10)
    acc = EnsembleAccumulator(times=times)
    acc.add_batch(idx, _fake_batch(idx, times, fail=(3, 7)))
    tot = acc.totals()
    assert tot.n == 8 and tot.n_failed == 2
    want = sum(np.cos(i * 0.1) for i in idx if i not in (3, 7))
    assert tot.bloch[0, 0] == approx(want)


def test_failure_budget_enforced():
    times = np.arange(2.0)
    idx = np.arange(0, 10)
    acc = EnsembleAccumulator(times=times)
    acc.add_batch(idx, _fake_batch(idx, times, fail=(3,)))
    with raises(EnsembleFailureError):
        finalize(acc)  # 10% failed >> 0.1% budget
    res = finalize(acc, max_failed_fraction=0.5)
    assert res.n_completed == 9 and res.n_failed == 1


def test_stderr_matches_sample_statistics():
    times = np.arange(1.0)
    idx = np.arange(0, 5)
    acc = EnsembleAccumulator(times=times)
    acc.add_batch(idx, _fake_batch(idx, times))
    res = finalize(acc)
    vals = np.array([np.cos(i * 0.1) for i in idx])
    assert res.mean_bloch[0, 0] == approx(vals.mean())
    assert res.stderr[0, 0] == approx(vals.std(ddof=1) / np.sqrt(5))
    assert res.mean_density[0, 0, 0] == approx(1.0)


# ---------------------------------------------------------------------------
# end-to-end ensemble runs (small N)


def test_partition_and_worker_invariance():
    # 513 = remainder-one case: the straggler must not run as a 1-row batch
    ref = _run(513, batch_size=600)
    for bs in (2, 7, 256, 512):
        assert np.array_equal(_run(513, batch_size=bs).mean_bloch,
                              ref.mean_bloch)
    two = _run(513, batch_size=256, workers=2)
    assert np.array_equal(two.mean_bloch, ref.mean_bloch)


def test_batch_size_validation():
    with raises(ValueError):
        _run(4, batch_size=1)
    with raises(ValueError):
        run_ensemble(MODEL, KERN, _provider(), STEPPER, 0, 0, excited_ket())


def test_disjoint_runs_merge_to_the_full_run():
    whole = _run(CHUNK + 40)
    a = _run(CHUNK)
    b = _run(40, start=CHUNK)
    joined = merge(a, b)
    assert joined.n_completed == whole.n_completed
    assert np.array_equal(joined.mean_bloch, whole.mean_bloch)
    assert np.array_equal(joined.stderr, whole.stderr)
    with raises(ValueError):
        merge(a, a)


def test_ensemble_mean_tracks_reference_loosely():
    # N = 512 leaves ~0.04 stderr; the mean should sit within a few of that
    res = _run(512)
    single = run_batch(MODEL, KERN, _provider(), STEPPER, 5, np.arange(512),
                       excited_ket())
    assert res.n_completed == 512
    # chunked ascending fold vs numpy pairwise mean: equal up to rounding
    assert np.allclose(res.mean_bloch, single.bloch.mean(axis=0), atol=1e-13)
    assert res.norm_drift_max < 1e-6  # nonlinear flow conserves norms
    assert res.runtime > 0.0


def test_all_failed_ensemble_raises():
    kern = MemoryKernel.tla(1.0, 40.0)
    prov = PerturbativeProvider(MODEL, kern, "coherent", 1)
    stepper = StepperConfig(t_final=5.0, dt=0.5)
    with raises(EnsembleFailureError):
        run_ensemble(MODEL, kern, prov, stepper, 0, 8, excited_ket())


# ---------------------------------------------------------------------------
# comparison metrics


def test_compare_metrics():
    t = np.linspace(0.0, 1.0, 5)
    a = np.zeros((5, 3))
    b = np.zeros((5, 3))
    b[2] = [0.1, -0.2, 0.05]
    m = compare(t, a, t, b)
    assert m.sup_norm == approx(0.2)
    assert m.time_avg_l1 == approx(0.35 / 5)
    assert np.allclose(m.diffs, a - b)


def test_compare_rejects_grid_mismatch():
    t = np.linspace(0.0, 1.0, 5)
    with raises(GridMismatchError):
        compare(t, np.zeros((5, 3)), t[:4], np.zeros((4, 3)))
    with raises(GridMismatchError):
        compare(t, np.zeros((5, 3)), t + 1e-6, np.zeros((5, 3)))
    # sub-tolerance jitter is accepted
    m = compare(t, np.zeros((5, 3)), t + 1e-12, np.zeros((5, 3)))
    assert m.sup_norm == 0.0
