"""Operator helpers, Bloch maps and the system-model container."""

import numpy as np
from hypothesis import given, settings, strategies as st
from pytest import approx, raises

from nmsse import linalg
from nmsse.errors import (
    CapacityError,
    DegenerateStateError,
    DimensionMismatchError,
)
from nmsse.linalg import (
    SystemModel,
    bloch_from_density,
    bloch_series,
    commutator,
    dag,
    density_from_bloch,
    density_from_ket,
    driven_tla,
    excited_ket,
    expectation,
    ground_ket,
    kron,
    normalize,
    partial_trace_second,
    validate_density,
)

bloch_vectors = st.tuples(
    st.floats(-0.57, 0.57), st.floats(-0.57, 0.57), st.floats(-0.57, 0.57)
)  # strictly inside the ball
kets = st.tuples(
    st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)
).filter(lambda v: sum(x * x for x in v) > 1e-4).map(
    lambda v: np.array([v[0] + 1j * v[1], v[2] + 1j * v[3]])
)


def test_pauli_algebra():
    sx, sy, sz = linalg.PAULI
    assert np.allclose(commutator(sx, sy), 2j * sz)
    assert np.allclose(sx @ sx, np.eye(2))
    assert np.allclose(dag(linalg.SIGMA_MINUS), linalg.SIGMA_PLUS)
    assert np.allclose(linalg.SIGMA_MINUS @ excited_ket(), ground_ket())


def test_excited_ket_bloch():
    assert bloch_from_density(density_from_ket(excited_ket())) == approx(
        [0.0, 0.0, 1.0])
    assert bloch_from_density(density_from_ket(ground_ket())) == approx(
        [0.0, 0.0, -1.0])


@given(bloch_vectors)
def test_bloch_round_trip(v):
    rho = density_from_bloch(np.array(v))
    validate_density(rho)
    assert bloch_from_density(rho) == approx(list(v))


@given(kets)
def test_bloch_series_agrees_with_single(ket):
    rho = density_from_ket(ket)
    stack = np.stack([rho, rho])
    assert np.allclose(bloch_series(stack), bloch_from_density(rho))


@given(kets)
def test_expectation_normalization(ket):
    sz = linalg.SIGMA_Z
    val = expectation(sz, ket)
    assert abs(val.imag) < 1e-12
    assert -1.0 - 1e-9 <= val.real <= 1.0 + 1e-9
    # unnormalized form scales with the squared norm
    raw = expectation(sz, ket, normalized=False)
    assert raw == approx(val * np.vdot(ket, ket).real)


def test_normalize_rejects_null():
    with raises(DegenerateStateError):
        normalize(np.zeros(2, dtype=complex))
    with raises(DegenerateStateError):
        expectation(linalg.SIGMA_Z, np.zeros(2, dtype=complex))


def test_bloch_rejects_corrupt_density():
    bad = np.array([[0.5, 0.5j], [0.4j, 0.5]])  # not Hermitian
    with raises(ValueError):
        bloch_from_density(bad)
    with raises(DimensionMismatchError):
        bloch_from_density(np.eye(3) / 3)


def test_partial_trace_of_product_state():
    rho_a = density_from_bloch(np.array([0.3, -0.2, 0.5]))
    rho_b = np.diag([0.7, 0.2, 0.1]).astype(complex)
    joint = kron(rho_a, rho_b)
    assert np.allclose(partial_trace_second(joint, 2, 3), rho_a)


def test_kron_capacity_gate():
    big = np.eye(70)
    with raises(CapacityError):
        kron(big, big)


def test_validate_density_catches_defects():
    validate_density(np.eye(2) / 2)
    with raises(ValueError):
        validate_density(np.diag([1.2, -0.2]).astype(complex))
    with raises(ValueError):
        validate_density(np.eye(2))  # trace 2


def test_system_model_checks():
    with raises(ValueError):
        SystemModel(coupling=linalg.SIGMA_MINUS, h_int=1j * np.eye(2))
    with raises(DimensionMismatchError):
        SystemModel(coupling=linalg.SIGMA_MINUS, h_int=np.eye(3))
    m = driven_tla(3.0, 5.0)
    assert m.dim == 2
    assert np.allclose(m.h_int, [[1.5, 2.5], [2.5, -1.5]])
    assert np.allclose(m.coupling_x, linalg.SIGMA_X)
    assert np.allclose(m.coupling_dag @ m.coupling, np.diag([1.0, 0.0]))
