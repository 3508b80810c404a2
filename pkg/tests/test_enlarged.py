"""Enlarged-space reference solver: exactness, invariants, guards.

The undriven atom admits a closed scalar amplitude equation, which makes it
the one configuration where "numerically exact" can be checked against an
independent integrator to high precision.  Everything else is covariance
and sanity: trace/positivity preservation, frame changes, truncation and
capacity guards.
"""

import numpy as np
from hypothesis import given, settings, strategies as st
from pytest import approx, raises

import oracles
from nmsse.enlarged import (
    EnlargedSpace,
    coupling_params,
    evolve_enlarged,
    kernel_identity_check,
    lindblad_reference_markov,
)
from nmsse.errors import CapacityError, TruncationError
from nmsse.kernel import KernelComponent, MemoryKernel, markov_rate
from nmsse.linalg import (
    bloch_series,
    driven_tla,
    excited_ket,
    validate_density,
)
from nmsse.sse import StepperConfig

components = st.lists(
    st.builds(KernelComponent, amplitude=st.floats(0.1, 3.0),
              kappa=st.floats(0.2, 5.0), omega=st.floats(-4.0, 4.0)),
    min_size=1, max_size=3)


@given(st.builds(MemoryKernel, components=components))
@settings(max_examples=30, deadline=None)
def test_mode_couplings_rebuild_kernel(kernel):
    grid = np.linspace(0.0, 5.0, 41)
    assert kernel_identity_check(kernel, grid) < 1e-12
    gs, kappas, omegas = coupling_params(kernel)
    assert np.allclose(gs**2, kernel.amplitudes)


def test_undriven_matches_scalar_amplitude():
    # single excitation: tiny Fock space is already exact
    gamma, kappa = 1.0, 1.0
    space = EnlargedSpace(driven_tla(0.0, 0.0), MemoryKernel.tla(gamma, kappa),
                          n_max=3)
    stepper = StepperConfig(t_final=10.0, dt=1e-3, scheme="rk4",
                            record_stride=100)
    times, rhos = evolve_enlarged(space, excited_ket(), stepper)
    z = bloch_series(rhos)[:, 2]
    want = oracles.undriven_z(times, gamma, kappa)
    assert np.max(np.abs(z - want)) < 1e-8


def test_two_identical_components_split_the_amplitude():
    # A split across two modes must reproduce the single-mode dynamics
    gamma, kappa = 1.0, 1.0
    split = MemoryKernel.from_string("0.125,1,0;0.125,1,0")
    space = EnlargedSpace(driven_tla(0.0, 0.0), split, n_max=(3, 3))
    stepper = StepperConfig(t_final=6.0, dt=1e-3, scheme="rk4",
                            record_stride=200)
    times, rhos = evolve_enlarged(space, excited_ket(), stepper)
    want = oracles.undriven_z(times, gamma, kappa)
    assert np.max(np.abs(bloch_series(rhos)[:, 2] - want)) < 1e-8


def test_driven_evolution_stays_physical():
    space = EnlargedSpace(driven_tla(3.0, 5.0), MemoryKernel.tla(), n_max=8)
    stepper = StepperConfig(t_final=2.0, dt=1e-3, scheme="rk4",
                            record_stride=250)
    _, rhos = evolve_enlarged(space, excited_ket(), stepper)
    for rho in rhos:
        validate_density(rho)


def test_detuning_frame_covariance():
    # shifting atom and mode frequencies together is a rotating-frame change
    # about sigma_z: the z component of the reduced state cannot move
    shift = 1.7
    stepper = StepperConfig(t_final=3.0, dt=1e-3, scheme="rk4",
                            record_stride=300)
    ket = np.array([1.0, 1.0]) / np.sqrt(2.0)

    base = EnlargedSpace(driven_tla(2.0, 0.0),
                         MemoryKernel.single(0.25, 1.0, omega=0.0), n_max=3)
    moved = EnlargedSpace(driven_tla(2.0 - shift, 0.0),
                          MemoryKernel.single(0.25, 1.0, omega=-shift), n_max=3)
    _, rhos_a = evolve_enlarged(base, ket, stepper)
    _, rhos_b = evolve_enlarged(moved, ket, stepper)
    za = bloch_series(rhos_a)[:, 2]
    zb = bloch_series(rhos_b)[:, 2]
    assert np.max(np.abs(za - zb)) < 1e-9


def test_fast_bath_approaches_markov_lindblad():
    kappa = 50.0
    kern = MemoryKernel.tla(1.0, kappa)
    model = driven_tla(3.0, 5.0)
    stepper = StepperConfig(t_final=2.0, dt=5e-4, scheme="rk4",
                            record_stride=200)
    space = EnlargedSpace(model, kern, n_max=6)
    times, rhos = evolve_enlarged(space, excited_ket(), stepper)
    _, rhos_mk = lindblad_reference_markov(model, markov_rate(kern),
                                           excited_ket(), stepper)
    gap = np.max(np.abs(bloch_series(rhos) - bloch_series(rhos_mk)))
    assert gap < 0.1  # O(1/kappa) memory corrections remain


def test_step_halving_is_converged():
    space = EnlargedSpace(driven_tla(3.0, 5.0), MemoryKernel.tla(), n_max=6)
    coarse = StepperConfig(t_final=2.0, dt=1e-3, scheme="rk4",
                           record_stride=500)
    fine = StepperConfig(t_final=2.0, dt=5e-4, scheme="rk4",
                         record_stride=1000)
    _, rhos_a = evolve_enlarged(space, excited_ket(), coarse)
    _, rhos_b = evolve_enlarged(space, excited_ket(), fine)
    assert np.max(np.abs(rhos_a - rhos_b)) < 1e-8


def test_truncation_guard_fires_and_suggests():
    # a strongly driven atom overflows a two-level mode almost immediately
    space = EnlargedSpace(driven_tla(3.0, 5.0), MemoryKernel.tla(), n_max=1)
    stepper = StepperConfig(t_final=2.0, dt=1e-3, scheme="rk4",
                            record_stride=100)
    with raises(TruncationError) as info:
        evolve_enlarged(space, excited_ket(), stepper)
    assert info.value.suggested_nmax == 11


def test_capacity_guard():
    with raises(CapacityError):
        EnlargedSpace(driven_tla(3.0, 5.0), MemoryKernel.tla(), n_max=3000)
    with raises(ValueError):
        EnlargedSpace(driven_tla(3.0, 5.0), MemoryKernel.tla(), n_max=(3, 3))


def test_initial_state_and_partial_trace():
    space = EnlargedSpace(driven_tla(3.0, 5.0),
                          MemoryKernel.from_string("0.25,1,0;0.1,2,1"),
                          n_max=(2, 3))
    w = space.initial_state(np.array([3.0, 4.0]))
    assert np.trace(w).real == approx(1.0)
    rho = space.partial_trace(w)
    assert rho[0, 0].real == approx(9.0 / 25.0)
    assert space.top_fock_population(w) == approx(0.0)
    assert space.dim == 2 * 3 * 4


def test_markov_reference_decays_undriven():
    # gamma D[sigma]: excited population decays as e^{-gamma t}
    model = driven_tla(0.0, 0.0)
    stepper = StepperConfig(t_final=3.0, dt=1e-3, scheme="rk4",
                            record_stride=300)
    times, rhos = lindblad_reference_markov(model, 0.8, excited_ket(), stepper)
    pop = rhos[:, 0, 0].real
    assert np.allclose(pop, np.exp(-0.8 * times), atol=1e-9)
