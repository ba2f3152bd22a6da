import numpy as np
import pytest
from hypothesis import given, strategies as st

from lindred.algebra import decompose_projector
from lindred.dynamics import propagate
from lindred.models import (
    DephasingSpec, XXZSpec, build_dephasing, build_xxz, disorder_perturbation, draw_disorder,
    logical_x_prediction, metzler_matrix, sector_data, sector_dim, total_z, xxz_liouvillian,
    xxz_projector,
)
from lindred.operator_core import HilbertSpace, pauli_string, random_density, vectorize
from lindred.spectral import eig_superoperator, spectral_projector


def test_sector_dims_half_integer():
    assert sector_dim(5, 0.5) == 10
    assert sector_dim(5, 2.5) == 1
    assert sector_dim(4, 0) == 6
    with pytest.raises(ValueError):
        sector_dim(4, 0.5)


def test_sector_data_layout():
    sd = sector_data(3)
    assert sd.m_values == [1.5, 0.5, -0.5, -1.5]
    assert sd.dims == [1, 3, 3, 1]
    assert sd.intermediate_m == [0.5, -0.5]
    assert np.allclose(sd.U.conj().T @ sd.U, np.eye(8))
    assert sd.order[:2] == [0, 7]


def test_spec_validation():
    with pytest.raises(ValueError):
        XXZSpec(3, gamma=0.0)
    with pytest.raises(ValueError):
        XXZSpec(3, A_xy=-1.0)
    with pytest.raises(ValueError):
        XXZSpec(3, jump_convention="other")
    assert XXZSpec(3, gamma=1.2, jump_convention="amplitude").hop_rate == pytest.approx(1.44)
    assert XXZSpec(5).omega0 == pytest.approx(6.0)


def test_strong_symmetry():
    m = build_xxz(XXZSpec(4))
    Z = total_z(4)
    assert np.allclose(m.hamiltonian @ Z, Z @ m.hamiltonian)
    for L in m.jumps:
        # each jump moves an excitation without changing the magnetization
        assert np.allclose(L @ Z, Z @ L)
    assert len(m.jumps) == 4


@given(st.integers(2, 4), st.floats(0, 3), st.floats(-5, 5), st.floats(0.1, 2))
def test_sector_steady_states(N, A_xy, A_z, gamma):
    lv = xxz_liouvillian(XXZSpec(N, A_xy=A_xy, A_z=A_z, gamma=gamma))
    res = max(np.linalg.norm(lv @ vectorize(r)) for r in sector_data(N).steady_states.values())
    assert res <= 1e-9


@pytest.mark.slow
def test_sector_steady_states_n5():
    lv = xxz_liouvillian(XXZSpec(5))
    res = max(np.linalg.norm(lv @ vectorize(r)) for r in sector_data(5).steady_states.values())
    assert res <= 1e-9


@pytest.mark.parametrize("N", [3, 4])
def test_closed_form_projector_matches_spectral(N):
    P = spectral_projector(eig_superoperator(xxz_liouvillian(XXZSpec(N))))
    assert np.max(np.abs(P - xxz_projector(N))) < 1e-9


@pytest.mark.parametrize("N", [3, 4])
def test_logical_identification(N):
    ws = decompose_projector(xxz_projector(N))
    W0 = ws.blocks[0].W
    XN = pauli_string("X" * N, list(range(1, N + 1)), HilbertSpace.spins(N))
    assert np.allclose(W0 @ XN @ W0.conj().T, [[0, 1], [1, 0]])


def test_gap_is_half_the_hop_rate():
    for conv, want in (("rate", 0.6), ("amplitude", 0.72)):
        sd = eig_superoperator(xxz_liouvillian(XXZSpec(3, jump_convention=conv)))
        assert sd.gap == pytest.approx(want, abs=1e-8)


def test_logical_prediction_matches_dynamics():
    spec = XXZSpec(3)
    rho0 = random_density(8, np.random.default_rng(3))
    times = np.array([40.0, 41.0, 42.0])
    lv = xxz_liouvillian(spec)
    XN = pauli_string("XXX", [1, 2, 3], HilbertSpace.spins(3))
    tr = propagate(lv, rho0, times)
    got = [np.trace(XN @ r).real for r in tr.states]
    assert np.allclose(got, logical_x_prediction(rho0, spec, times), atol=1e-8)


def test_disorder_is_seeded():
    a, b = draw_disorder(4, 7), draw_disorder(4, 7)
    assert np.array_equal(a.omega, b.omega)
    assert np.all((a.A_x >= 0) & (a.A_x < 2))
    H, wbar = disorder_perturbation(4, 7)
    assert wbar == pytest.approx(a.omega.sum())
    assert np.allclose(H, H.conj().T)


def test_dephasing_single_site_rates():
    spec = DephasingSpec(1, mu_x=(1.0,))
    assert spec.alpha[0] == pytest.approx(1.0) and spec.beta[0] == pytest.approx(1.0)
    M = metzler_matrix(spec)
    assert np.allclose(M, [[-1, 1], [1, -1]])


def test_dephasing_spec_validation():
    with pytest.raises(ValueError):
        DephasingSpec(2, mu_x=(1.0,))
    with pytest.raises(ValueError):
        DephasingSpec(1, mu_plus=(-1.0,))


@given(st.integers(1, 4), st.integers(0, 1000))
def test_metzler_property(N, seed):
    M = metzler_matrix(DephasingSpec.random(N, seed))
    off = M - np.diag(np.diag(M))
    assert off.min() >= 0
    assert np.allclose(M.sum(axis=0), 0)


@pytest.mark.parametrize("eps", [0.0, 0.2, 1.0])
def test_dephasing_reduced_generator_is_metzler(eps):
    dm = build_dephasing(DephasingSpec.random(3, 5))
    red = dm.R @ (dm.L0 + eps * dm.L1) @ dm.J
    assert np.max(np.abs(red - dm.metzler(eps))) <= 1e-9
    assert np.allclose(dm.R @ dm.J, np.eye(8))


def test_dephasing_population_exactness():
    dm = build_dephasing(DephasingSpec.random(3, 2))
    rho0 = random_density(8, np.random.default_rng(2))
    times = np.linspace(0, 5, 11)
    full = propagate(dm.L0 + 0.4 * dm.L1, rho0, times)
    red = propagate(dm.metzler(0.4).astype(complex), dm.R @ vectorize(rho0), times)
    err = max(np.max(np.abs(np.diag(r).real - p.real)) for r, p in zip(full.states, red.states))
    assert err <= 1e-8
